use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use conceptlens::concept::SeedAggregation;
use conceptlens::config::{has_errors, validate, CutoffKind, KRange, PipelineConfig, ProviderKind, SEED_ENV};
use conceptlens::corpus::InputFormat;
use conceptlens::fixture;
use conceptlens::pipeline::{Pipeline, Stage, StageStatus, MANIFEST};

/// Concept-anchored topic discovery over review corpora.
#[derive(Parser, Debug)]
#[command(name = "conceptlens", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load, validate and filter the input corpus.
    Ingest,
    /// Embed every document.
    Embed,
    /// Discover topics, keywords and topic embeddings.
    Topics,
    /// Rank topics against each seed concept.
    Rank,
    /// Select concept-relevant topics from each ranking.
    Select,
    /// Meta-cluster the selected topics.
    Cluster,
    /// Write curves, the cluster table and the manifest.
    Report,
    /// Run every stage in order.
    Run,
    /// Check the configuration and list every problem found.
    Validate,
    /// Write a seeded synthetic review corpus.
    GenFixture(GenFixtureArgs),
}

#[derive(Args, Debug)]
struct GenFixtureArgs {
    /// Destination file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    records: usize,
    #[arg(long, default_value_t = 40)]
    products: usize,
}

/// Every config field can be set here; flags win over the config file and
/// over the seed environment variable.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// csv or jsonl.
    #[arg(long, global = true)]
    format: Option<InputFormat>,
    #[arg(long, global = true)]
    min_reviews: Option<usize>,
    #[arg(long, global = true)]
    min_token_len: Option<usize>,
    /// Drop English stopwords (true or false).
    #[arg(long, global = true)]
    stopwords: Option<bool>,
    /// hash or remote.
    #[arg(long, global = true)]
    provider: Option<ProviderKind>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true)]
    provider_url: Option<String>,
    #[arg(long, global = true)]
    timeout_secs: Option<f64>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    #[arg(long, global = true)]
    doc_topics: Option<usize>,
    #[arg(long, global = true)]
    reduce_dim: Option<usize>,
    #[arg(long, global = true)]
    top_keywords: Option<usize>,
    #[arg(long, global = true)]
    temperature: Option<f64>,
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Built-in seed concept; repeatable. Replaces the configured concepts.
    #[arg(long, global = true)]
    seed_preset: Vec<String>,
    /// Seed concept JSON file; repeatable. Replaces the configured concepts.
    #[arg(long, global = true)]
    seed_file: Vec<PathBuf>,
    /// per-term or joined.
    #[arg(long, global = true)]
    seed_aggregation: Option<SeedAggregation>,
    /// drop or topn.
    #[arg(long, global = true)]
    cutoff: Option<CutoffKind>,
    #[arg(long, global = true)]
    min_include: Option<usize>,
    #[arg(long, global = true)]
    top_n: Option<usize>,
    /// Inclusive range such as 2..12.
    #[arg(long, global = true)]
    k_range: Option<KRange>,
    #[arg(long, global = true)]
    force_k: Option<usize>,
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Run directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Annotation JSON file; repeatable. Replaces the configured list.
    #[arg(long, global = true)]
    annotations: Vec<PathBuf>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl Overrides {
    fn build_config(self) -> anyhow::Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        c.apply_seed_env()?;
        set(&mut c.seed, self.seed);
        set(&mut c.output, self.output);
        set(&mut c.input.path, self.input);
        set(&mut c.input.format, self.format);
        set(&mut c.input.min_reviews, self.min_reviews);
        set(&mut c.preprocess.min_token_len, self.min_token_len);
        set(&mut c.preprocess.stopwords, self.stopwords);
        set(&mut c.embedding.provider, self.provider);
        set(&mut c.embedding.dim, self.dim);
        if self.provider_url.is_some() {
            c.embedding.url = self.provider_url;
        }
        set(&mut c.embedding.timeout_secs, self.timeout_secs);
        set(&mut c.embedding.batch_size, self.batch_size);
        set(&mut c.topics.doc_topics, self.doc_topics);
        set(&mut c.topics.reduce_dim, self.reduce_dim);
        set(&mut c.topics.top_keywords, self.top_keywords);
        set(&mut c.topics.temperature, self.temperature);
        set(&mut c.topics.max_iter, self.max_iter);
        if !self.seed_preset.is_empty() || !self.seed_file.is_empty() {
            c.concepts.presets = self.seed_preset;
            c.concepts.files = self.seed_file;
        }
        set(&mut c.concepts.aggregation, self.seed_aggregation);
        set(&mut c.selection.cutoff, self.cutoff);
        set(&mut c.selection.min_include, self.min_include);
        set(&mut c.selection.top_n, self.top_n);
        set(&mut c.clustering.k_range, self.k_range);
        if self.force_k.is_some() {
            c.clustering.force_k = self.force_k;
        }
        set(&mut c.clustering.restarts, self.restarts);
        if !self.annotations.is_empty() {
            c.report.annotations = self.annotations;
        }
        Ok(c)
    }
}

fn stage_of(command: &Command) -> Option<Stage> {
    Some(match command {
        Command::Ingest => Stage::Ingest,
        Command::Embed => Stage::Embed,
        Command::Topics => Stage::Topics,
        Command::Rank => Stage::Rank,
        Command::Select => Stage::Select,
        Command::Cluster => Stage::Cluster,
        Command::Report => Stage::Report,
        _ => return None,
    })
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    if let Command::GenFixture(args) = &cli.command {
        let seed = match cli.overrides.seed {
            Some(s) => s,
            None => match std::env::var(SEED_ENV) {
                Ok(v) => v.parse().map_err(|_| anyhow::anyhow!("{SEED_ENV}={v:?} is not an unsigned integer"))?,
                Err(_) => conceptlens::config::DEFAULT_SEED,
            },
        };
        let format = cli.overrides.format.unwrap_or(InputFormat::Csv);
        let records = fixture::generate(args.records, args.products.max(1), seed);
        fixture::write_fixture(&args.out, &records, format)
            .map_err(|e| anyhow::anyhow!("writing {}: {e}", args.out.display()))?;
        println!("wrote {} records to {}", records.len(), args.out.display());
        return Ok(true);
    }

    let config = cli.overrides.build_config()?;
    if let Command::Validate = cli.command {
        let diagnostics = validate(&config);
        for d in &diagnostics {
            println!("{d}");
        }
        if diagnostics.is_empty() {
            println!("config is valid");
        }
        return Ok(!has_errors(&diagnostics));
    }

    let stages = match stage_of(&cli.command) {
        Some(stage) => vec![stage],
        None => Stage::ALL.to_vec(),
    };
    let pipeline = Pipeline::new(config)?;
    let summary = pipeline.run_stages(&stages)?;
    for r in &summary.stages {
        let status = match r.status {
            StageStatus::Computed => "computed",
            StageStatus::CacheHit => "cache hit",
        };
        println!("{}: {status} ({})", r.stage, r.outputs.join(", "));
    }
    if summary.manifest.is_some() {
        println!("manifest: {}", pipeline.output_dir().join(MANIFEST).display());
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
