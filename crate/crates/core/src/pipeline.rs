//! Stage orchestration over a run directory: every stage reads its inputs
//! from the directory, writes its artifacts back, and is skipped when a
//! cache record shows the same inputs and settings already produced them.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::OpenOptions;
use std::io::Write;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::concept::{
    embed_seed, rank_topics, select_by_relative_drop, select_top_n, CutoffResult, RankedTopicList, SeedConcept,
};
use crate::config::{has_errors, validate, CutoffKind, Diagnostic, PipelineConfig, ProviderKind, SeedSet};
use crate::corpus::{filter_by_min_reviews, load_corpus, tokenize, Provenance, ReviewRecord};
use crate::embed::{embed_texts, EmbeddingProvider, HashEmbedder, RemoteProvider};
use crate::matrix::Matrix;
use crate::metacluster::{cluster_topics, KSelectionReport, MetaClusterParams, TopicClustering};
use crate::report::{
    emit_k_selection_curves, emit_similarity_curve, emit_topic_table, read_ranking_csv, read_topics_jsonl,
    sha256_hex, topics_from_records, write_manifest, write_ranking_csv, write_topics_jsonl, AnnotationFile,
    ProviderIdentity, RunManifest,
};
use crate::topicmodel::{discover_topics, Topic};

pub const CORPUS: &str = "corpus.jsonl";
pub const INGEST_SUMMARY: &str = "ingest.json";
pub const EMBEDDINGS: &str = "embeddings.jsonl";
pub const TOPICS: &str = "topics.jsonl";
pub const DOC_TOPICS: &str = "doc_topics.csv";
pub const CLUSTER_TABLE: &str = "clusters.md";
pub const MANIFEST: &str = "manifest.json";
pub const LOCK: &str = ".lock";
pub const CACHE_DIR: &str = ".cache";

type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Embed,
    Topics,
    Rank,
    Select,
    Cluster,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Embed,
        Stage::Topics,
        Stage::Rank,
        Stage::Select,
        Stage::Cluster,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Embed => "embed",
            Stage::Topics => "topics",
            Stage::Rank => "rank",
            Stage::Select => "select",
            Stage::Cluster => "cluster",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration:\n{}", .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
    #[error("run directory {0} is in use by another process (delete {1} if it is stale)")]
    Locked(PathBuf, PathBuf),
    #[error("{stage} stage failed: {cause}")]
    Stage { stage: Stage, cause: BoxError },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest does not match artifacts: {0:?}")]
    Manifest(Vec<String>),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn stage_err(stage: Stage) -> impl FnOnce(BoxError) -> PipelineError {
    move |cause| PipelineError::Stage { stage, cause }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStatus {
    Computed,
    CacheHit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: Stage,
    pub status: StageStatus,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub stages: Vec<StageReport>,
    /// Written whenever the report stage ran.
    pub manifest: Option<RunManifest>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheRecord {
    key: String,
    outputs: BTreeMap<String, String>,
}

/// Exclusive ownership of a run directory; released on drop.
struct RunLock(PathBuf);

impl RunLock {
    fn acquire(dir: &Path) -> Result<Self, PipelineError> {
        let path = dir.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self(path))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(PipelineError::Locked(dir.to_path_buf(), path))
            }
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingLine {
    review_id: String,
    vector: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IngestSummary {
    provenance: Provenance,
    records: usize,
    product_counts: BTreeMap<String, usize>,
}

/// Clustering artifact for one seed concept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterArtifact {
    pub seed: String,
    pub k_range: (usize, usize),
    pub selection: KSelectionReport,
    pub clustering: TopicClustering,
}

pub fn ranking_file(concept: &SeedConcept) -> String {
    format!("ranking_{}.csv", concept.slug())
}

pub fn selection_file(concept: &SeedConcept) -> String {
    format!("selection_{}.json", concept.slug())
}

pub fn kselect_file(concept: &SeedConcept) -> String {
    format!("kselect_{}.csv", concept.slug())
}

pub fn clusters_file(concept: &SeedConcept) -> String {
    format!("clusters_{}.json", concept.slug())
}

pub fn similarity_file(concept: &SeedConcept) -> String {
    format!("similarity_{}.csv", concept.slug())
}

pub fn build_provider(config: &PipelineConfig) -> Result<Box<dyn EmbeddingProvider>, BoxError> {
    let e = &config.embedding;
    Ok(match e.provider {
        ProviderKind::Hash => Box::new(HashEmbedder::new(e.dim, config.preprocess.options())?),
        ProviderKind::Remote => Box::new(RemoteProvider::new(
            e.url.as_deref().ok_or("embedding.url is not set")?,
            e.dim,
            Duration::from_secs_f64(e.timeout_secs),
            e.batch_size,
        )),
    })
}

pub struct Pipeline {
    config: PipelineConfig,
    concepts: Vec<SeedConcept>,
    seeds: SeedSet,
    provider: Box<dyn EmbeddingProvider>,
}

type Outputs = Vec<(String, Vec<u8>)>;

impl Pipeline {
    /// Validates the config and loads seed concepts. Warnings are logged;
    /// any error-level diagnostic rejects the config.
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        let diagnostics = validate(&config);
        if has_errors(&diagnostics) {
            return Err(PipelineError::Invalid(diagnostics));
        }
        for d in &diagnostics {
            log::warn!("{d}");
        }
        let concepts = config.load_concepts().map_err(|e| PipelineError::Stage {
            stage: Stage::Rank,
            cause: e.into(),
        })?;
        let provider = build_provider(&config).map_err(stage_err(Stage::Embed))?;
        Ok(Self {
            seeds: config.seeds(),
            config,
            concepts,
            provider,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn concepts(&self) -> &[SeedConcept] {
        &self.concepts
    }

    pub fn output_dir(&self) -> &Path {
        &self.config.output
    }

    pub fn run(&self) -> Result<RunSummary, PipelineError> {
        self.run_stages(&Stage::ALL)
    }

    /// Runs the given stages in pipeline order. Inputs missing from the run
    /// directory are reported as an error of the stage that needs them.
    pub fn run_stages(&self, stages: &[Stage]) -> Result<RunSummary, PipelineError> {
        let dir = &self.config.output;
        std::fs::create_dir_all(dir.join(CACHE_DIR)).map_err(io_err(dir))?;
        let _lock = RunLock::acquire(dir)?;
        let mut ordered = stages.to_vec();
        ordered.sort();
        ordered.dedup();
        let mut reports = Vec::new();
        let mut manifest = None;
        for stage in ordered {
            let report = self.run_stage(stage)?;
            log::info!(
                "{stage}: {}",
                match report.status {
                    StageStatus::Computed => "computed",
                    StageStatus::CacheHit => "cache hit",
                }
            );
            reports.push(report);
            if stage == Stage::Report {
                manifest = Some(self.write_manifest()?);
            }
        }
        Ok(RunSummary {
            stages: reports,
            manifest,
        })
    }

    fn run_stage(&self, stage: Stage) -> Result<StageReport, PipelineError> {
        let names = |f: fn(&SeedConcept) -> String| self.concepts.iter().map(f).collect::<Vec<_>>();
        let emb = &self.config.embedding;
        let provider_id = json!({ "name": self.provider.name(), "dim": self.provider.dim() });
        match stage {
            Stage::Ingest => {
                let input = self.config.input.path.display().to_string();
                let settings = json!({
                    "path": input,
                    "format": self.config.input.format,
                    "min_reviews": self.config.input.min_reviews,
                });
                let inputs = [(input.clone(), self.config.input.path.clone())];
                self.cached(stage, &inputs, settings, |inp| self.ingest(&inp[&input]))
            }
            Stage::Embed => {
                let settings = json!({
                    "preprocess": self.config.preprocess,
                    "provider": provider_id,
                    "url": emb.url,
                });
                self.cached(stage, &self.artifacts([CORPUS.into()]), settings, |inp| self.embed(&inp[CORPUS]))
            }
            Stage::Topics => {
                let settings = json!({
                    "preprocess": self.config.preprocess,
                    "provider": provider_id,
                    "params": self.config.topics,
                    "seed": self.seeds.doc_clustering,
                });
                let inputs = self.artifacts([CORPUS.into(), EMBEDDINGS.into()]);
                self.cached(stage, &inputs, settings, |inp| {
                    self.topics(&inp[CORPUS], &inp[EMBEDDINGS])
                })
            }
            Stage::Rank => {
                let settings = json!({
                    "concepts": self.concepts,
                    "aggregation": self.config.concepts.aggregation,
                    "provider": provider_id,
                });
                self.cached(stage, &self.artifacts([TOPICS.into()]), settings, |inp| self.rank(&inp[TOPICS]))
            }
            Stage::Select => {
                let settings = json!({ "selection": self.config.selection });
                self.cached(stage, &self.artifacts(names(ranking_file)), settings, |inp| self.select(inp))
            }
            Stage::Cluster => {
                let settings = json!({
                    "clustering": self.config.clustering,
                    "seed": self.seeds.meta_clustering,
                });
                let mut inputs = names(selection_file);
                inputs.push(TOPICS.into());
                self.cached(stage, &self.artifacts(inputs), settings, |inp| self.cluster(inp))
            }
            Stage::Report => {
                let settings = json!({ "concepts": self.concepts });
                let mut names_in = names(ranking_file);
                names_in.extend(names(selection_file));
                names_in.extend(names(clusters_file));
                names_in.push(TOPICS.into());
                let mut inputs = self.artifacts(names_in);
                inputs.extend(
                    self.config
                        .report
                        .annotations
                        .iter()
                        .map(|p| (p.display().to_string(), p.clone())),
                );
                self.cached(stage, &inputs, settings, |inp| self.report(inp))
            }
        }
    }

    fn artifacts(&self, names: impl IntoIterator<Item = String>) -> Vec<(String, PathBuf)> {
        names
            .into_iter()
            .map(|n| {
                let path = self.config.output.join(&n);
                (n, path)
            })
            .collect()
    }

    /// Runs `compute` unless the stage's cache record matches the current
    /// inputs and settings and every recorded output is intact.
    fn cached(
        &self,
        stage: Stage,
        inputs: &[(String, PathBuf)],
        settings: Value,
        compute: impl FnOnce(&BTreeMap<String, Vec<u8>>) -> Result<Outputs, BoxError>,
    ) -> Result<StageReport, PipelineError> {
        let dir = &self.config.output;
        let mut data = BTreeMap::new();
        let mut input_hashes = BTreeMap::new();
        for (name, path) in inputs {
            let bytes = std::fs::read(path).map_err(|e| PipelineError::Stage {
                stage,
                cause: format!("cannot read input {}: {e}", path.display()).into(),
            })?;
            input_hashes.insert(name.clone(), sha256_hex(&bytes));
            data.insert(name.clone(), bytes);
        }
        let key_material = json!({
            "stage": stage.name(),
            "settings": settings,
            "inputs": input_hashes,
            "version": env!("CARGO_PKG_VERSION"),
        });
        let key = sha256_hex(key_material.to_string().as_bytes());
        let record_path = dir.join(CACHE_DIR).join(format!("{}.json", stage.name()));

        if let Some(record) = read_cache_record(&record_path) {
            let intact = record.outputs.iter().all(|(name, hash)| {
                std::fs::read(dir.join(name))
                    .map(|b| sha256_hex(&b) == *hash)
                    .unwrap_or(false)
            });
            if record.key == key && intact {
                return Ok(StageReport {
                    stage,
                    status: StageStatus::CacheHit,
                    outputs: record.outputs.into_keys().collect(),
                });
            }
        }
        match std::fs::remove_file(&record_path) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(io_err(&record_path)(e)),
            _ => {}
        }

        let outputs = compute(&data).map_err(stage_err(stage))?;
        let mut hashes = BTreeMap::new();
        for (name, bytes) in &outputs {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(io_err(&path))?;
            hashes.insert(name.clone(), sha256_hex(bytes));
        }
        let record = CacheRecord { key, outputs: hashes };
        let text = serde_json::to_string_pretty(&record).expect("cache record serializes");
        std::fs::write(&record_path, text).map_err(io_err(&record_path))?;
        Ok(StageReport {
            stage,
            status: StageStatus::Computed,
            outputs: outputs.into_iter().map(|(n, _)| n).collect(),
        })
    }

    fn ingest(&self, _input: &[u8]) -> Result<Outputs, BoxError> {
        let input = &self.config.input;
        let corpus = load_corpus(&input.path, input.format)?;
        let min = NonZeroUsize::new(input.min_reviews).ok_or("input.min_reviews must be >= 1")?;
        let filtered = filter_by_min_reviews(&corpus, min);
        if filtered.is_empty() {
            return Err(format!(
                "no product has at least {} reviews ({} records before filtering)",
                input.min_reviews,
                corpus.len()
            )
            .into());
        }
        log::info!("ingest: kept {} of {} records", filtered.len(), corpus.len());
        let summary = IngestSummary {
            provenance: filtered.provenance().clone(),
            records: filtered.len(),
            product_counts: filtered.product_counts().clone(),
        };
        Ok(vec![
            (CORPUS.into(), to_jsonl(filtered.records())),
            (INGEST_SUMMARY.into(), pretty_json(&summary)),
        ])
    }

    fn embed(&self, corpus: &[u8]) -> Result<Outputs, BoxError> {
        let records: Vec<ReviewRecord> = from_jsonl(corpus)?;
        let texts: Vec<String> = records.iter().map(|r| r.text.clone()).collect();
        let vectors = embed_texts(self.provider.as_ref(), &texts)?;
        let lines: Vec<EmbeddingLine> = records
            .iter()
            .zip(vectors)
            .map(|(r, v)| EmbeddingLine {
                review_id: r.review_id.clone(),
                vector: v.into_values(),
            })
            .collect();
        Ok(vec![(EMBEDDINGS.into(), to_jsonl(&lines))])
    }

    fn topics(&self, corpus: &[u8], embeddings: &[u8]) -> Result<Outputs, BoxError> {
        let records: Vec<ReviewRecord> = from_jsonl(corpus)?;
        let lines: Vec<EmbeddingLine> = from_jsonl(embeddings)?;
        if lines.len() != records.len() || lines.iter().zip(&records).any(|(l, r)| l.review_id != r.review_id) {
            return Err(format!("{EMBEDDINGS} does not match {CORPUS}; rerun the embed stage").into());
        }
        let opts = self.config.preprocess.options();
        let tokens: Vec<_> = records.iter().map(|r| tokenize(&r.text, &opts)).collect();
        let ids: Vec<String> = records.into_iter().map(|r| r.review_id).collect();
        let rows: Vec<Vec<f64>> = lines.into_iter().map(|l| l.vector).collect();
        let matrix = Matrix::from_rows(&rows);
        let model = discover_topics(
            &ids,
            &tokens,
            &matrix,
            &self.config.topics,
            self.seeds.doc_clustering,
            self.provider.as_ref(),
        )?;
        log::info!("topics: {} topics from {} documents", model.topics.len(), ids.len());

        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["review_id", "topic_id", "cluster", "membership"])?;
        for d in &model.documents {
            let topic = d.topic_id.map(|t| t.to_string()).unwrap_or_default();
            w.write_record([&d.review_id, &topic, &d.cluster.to_string(), &d.membership.to_string()])?;
        }
        let doc_topics = w.into_inner().map_err(|e| e.to_string())?;
        Ok(vec![
            (TOPICS.into(), write_topics_jsonl(&model.topics).into_bytes()),
            (DOC_TOPICS.into(), doc_topics),
        ])
    }

    fn load_topics(bytes: &[u8]) -> Result<Vec<Topic>, BoxError> {
        let records = read_topics_jsonl(std::str::from_utf8(bytes)?)?;
        Ok(topics_from_records(records, &[])?)
    }

    fn rank(&self, topics: &[u8]) -> Result<Outputs, BoxError> {
        let topics = Self::load_topics(topics)?;
        let mut out = Vec::new();
        for concept in &self.concepts {
            let seed = embed_seed(concept, self.provider.as_ref(), self.config.concepts.aggregation)?;
            let ranking = rank_topics(&topics, &seed)?;
            out.push((ranking_file(concept), write_ranking_csv(&ranking).into_bytes()));
        }
        Ok(out)
    }

    fn select(&self, inputs: &BTreeMap<String, Vec<u8>>) -> Result<Outputs, BoxError> {
        let sel = &self.config.selection;
        let mut out = Vec::new();
        for concept in &self.concepts {
            let ranking = read_ranking_csv(std::str::from_utf8(&inputs[&ranking_file(concept)])?)?;
            let cutoff = match sel.cutoff {
                CutoffKind::Drop => select_by_relative_drop(&ranking, sel.min_include)?,
                CutoffKind::Topn => select_top_n(&ranking, sel.top_n),
            };
            log::info!("select: {} topics for {:?}", cutoff.cut_index, concept.name());
            out.push((selection_file(concept), pretty_json(&cutoff)));
        }
        Ok(out)
    }

    fn cluster(&self, inputs: &BTreeMap<String, Vec<u8>>) -> Result<Outputs, BoxError> {
        let topics = Self::load_topics(&inputs[TOPICS])?;
        let cl = &self.config.clustering;
        let mut out = Vec::new();
        for concept in &self.concepts {
            let cutoff: CutoffResult = serde_json::from_slice(&inputs[&selection_file(concept)])?;
            let selected = pick_topics(&topics, &cutoff.selected_topic_ids)?;
            let mut k_max = cl.k_range.max;
            if selected.len() < k_max {
                log::warn!(
                    "{:?}: only {} topics selected; lowering max k from {} to {}",
                    concept.name(),
                    selected.len(),
                    k_max,
                    selected.len()
                );
                k_max = selected.len();
            }
            if let Some(k) = cl.force_k {
                if k > selected.len() {
                    return Err(format!(
                        "{:?}: force_k = {k} but only {} topics were selected",
                        concept.name(),
                        selected.len()
                    )
                    .into());
                }
            }
            let params = MetaClusterParams {
                k_min: cl.k_range.min,
                k_max,
                restarts: cl.restarts,
                force_k: cl.force_k,
            };
            let (report, clustering) = cluster_topics(&selected, &params, self.seeds.meta_clustering)
                .map_err(|e| format!("{:?}: {e}", concept.name()))?;
            log::info!("cluster: k = {} for {:?}", report.chosen_k, concept.name());
            out.push((kselect_file(concept), emit_k_selection_curves(&report).into_bytes()));
            let artifact = ClusterArtifact {
                seed: concept.name().to_string(),
                k_range: (params.k_min, params.k_max),
                selection: report,
                clustering,
            };
            out.push((clusters_file(concept), pretty_json(&artifact)));
        }
        Ok(out)
    }

    fn report(&self, inputs: &BTreeMap<String, Vec<u8>>) -> Result<Outputs, BoxError> {
        let topics = Self::load_topics(&inputs[TOPICS])?;
        let mut annotations = Vec::new();
        for path in &self.config.report.annotations {
            annotations.push(AnnotationFile::load(path)?);
        }
        let mut out = Vec::new();
        let mut table = String::from("# Topic clusters\n");
        for concept in &self.concepts {
            let ranking: RankedTopicList = read_ranking_csv(std::str::from_utf8(&inputs[&ranking_file(concept)])?)?;
            let cutoff: CutoffResult = serde_json::from_slice(&inputs[&selection_file(concept)])?;
            let artifact: ClusterArtifact = serde_json::from_slice(&inputs[&clusters_file(concept)])?;
            out.push((similarity_file(concept), emit_similarity_curve(&ranking, &cutoff).into_bytes()));
            let labels = annotations
                .iter()
                .find(|a| a.seed.as_deref().is_none_or(|s| s == concept.name()));
            let section = emit_topic_table(concept.name(), &artifact.clustering, &topics, labels)
                .map_err(|e| format!("{:?}: {e}", concept.name()))?;
            table.push('\n');
            table.push_str(&section);
        }
        out.push((CLUSTER_TABLE.into(), table.into_bytes()));
        Ok(out)
    }

    /// Every artifact a full run produces under the current config.
    pub fn artifact_names(&self) -> Vec<String> {
        let mut names: Vec<String> = [CORPUS, INGEST_SUMMARY, EMBEDDINGS, TOPICS, DOC_TOPICS, CLUSTER_TABLE]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for c in &self.concepts {
            names.extend([
                ranking_file(c),
                selection_file(c),
                kselect_file(c),
                clusters_file(c),
                similarity_file(c),
            ]);
        }
        names.sort();
        names
    }

    /// Config as recorded in the manifest; the output directory is left out
    /// so identical runs in different directories agree.
    pub fn config_snapshot(&self) -> Value {
        let mut v = serde_json::to_value(&self.config).expect("config serializes");
        if let Value::Object(map) = &mut v {
            map.remove("output");
        }
        v
    }

    fn write_manifest(&self) -> Result<RunManifest, PipelineError> {
        let dir = &self.config.output;
        let provider = ProviderIdentity {
            name: self.provider.name().to_string(),
            dim: self.provider.dim(),
        };
        let manifest = write_manifest(
            dir,
            &self.artifact_names(),
            self.config_snapshot(),
            self.seeds.to_map(),
            provider,
        )
        .map_err(|e| PipelineError::Stage {
            stage: Stage::Report,
            cause: e.into(),
        })?;
        let stale = manifest.verify(dir);
        if !stale.is_empty() {
            return Err(PipelineError::Manifest(stale));
        }
        Ok(manifest)
    }
}

fn read_cache_record(path: &Path) -> Option<CacheRecord> {
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

fn pick_topics(topics: &[Topic], ids: &[u32]) -> Result<Vec<Topic>, BoxError> {
    ids.iter()
        .map(|id| {
            topics
                .iter()
                .find(|t| t.topic_id == *id)
                .cloned()
                .ok_or_else(|| format!("selected topic {id} is missing from {TOPICS}").into())
        })
        .collect()
}

fn to_jsonl<T: Serialize>(items: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, item).expect("record serializes");
        out.push(b'\n');
    }
    out
}

fn from_jsonl<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<Vec<T>, BoxError> {
    std::str::from_utf8(bytes)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1).into()))
        .collect()
}

fn pretty_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s.into_bytes()
}

/// Loads the filtered corpus a previous ingest stage wrote into `dir`.
pub fn read_corpus_artifact(dir: &Path) -> Result<Vec<ReviewRecord>, BoxError> {
    from_jsonl(&std::fs::read(dir.join(CORPUS))?)
}

/// Reads a seed concept's clustering artifact from a run directory.
pub fn read_cluster_artifact(dir: &Path, concept: &SeedConcept) -> Result<ClusterArtifact, BoxError> {
    Ok(serde_json::from_slice(&std::fs::read(dir.join(clusters_file(concept)))?)?)
}

/// Reads a seed concept's selection from a run directory.
pub fn read_selection(dir: &Path, concept: &SeedConcept) -> Result<CutoffResult, BoxError> {
    Ok(serde_json::from_slice(&std::fs::read(dir.join(selection_file(concept)))?)?)
}
