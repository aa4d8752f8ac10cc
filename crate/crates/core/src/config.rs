//! Pipeline configuration (TOML) and its validation.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::concept::{SeedAggregation, SeedConcept, DEFAULT_MIN_INCLUDE, DEFAULT_TOP_N, ESTABLISHED_PRINCIPLES, GENERAL_TERMS};
use crate::corpus::{english_stopwords, InputFormat, PreprocessOptions, DEFAULT_MIN_REVIEWS};
use crate::embed::MIN_HASH_DIM;
use crate::metacluster::{DEFAULT_K_MAX, DEFAULT_K_MIN, DEFAULT_RESTARTS};
use crate::report::AnnotationFile;
use crate::topicmodel::TopicModelParams;

pub const DEFAULT_DIM: usize = 64;
pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV: &str = "CONCEPTLENS_SEED";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{SEED_ENV}={0:?} is not an unsigned integer")]
    BadSeedEnv(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Hash,
    Remote,
}

impl FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hash" => Ok(Self::Hash),
            "remote" => Ok(Self::Remote),
            other => Err(format!("unknown provider {other:?} (expected hash or remote)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutoffKind {
    Drop,
    Topn,
}

impl FromStr for CutoffKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "drop" => Ok(Self::Drop),
            "topn" => Ok(Self::Topn),
            other => Err(format!("unknown cutoff {other:?} (expected drop or topn)")),
        }
    }
}

/// Inclusive k range written as `"min..max"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct KRange {
    pub min: usize,
    pub max: usize,
}

impl KRange {
    pub fn range(&self) -> RangeInclusive<usize> {
        self.min..=self.max
    }
}

impl Default for KRange {
    fn default() -> Self {
        Self {
            min: DEFAULT_K_MIN,
            max: DEFAULT_K_MAX,
        }
    }
}

impl FromStr for KRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (a, b) = s
            .split_once("..=")
            .or_else(|| s.split_once(".."))
            .ok_or_else(|| format!("k range {s:?} must look like 2..12"))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| format!("k range {s:?}: {x:?} is not a non-negative integer"))
        };
        Ok(Self {
            min: parse(a)?,
            max: parse(b)?,
        })
    }
}

impl TryFrom<String> for KRange {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<KRange> for String {
    fn from(k: KRange) -> Self {
        k.to_string()
    }
}

impl fmt::Display for KRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.min, self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputSection {
    pub path: PathBuf,
    pub format: InputFormat,
    pub min_reviews: usize,
}

impl Default for InputSection {
    fn default() -> Self {
        Self {
            path: PathBuf::from("reviews.csv"),
            format: InputFormat::Csv,
            min_reviews: DEFAULT_MIN_REVIEWS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessSection {
    pub min_token_len: usize,
    /// Drop common English function words.
    pub stopwords: bool,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        Self {
            min_token_len: PreprocessOptions::default().min_token_len,
            stopwords: false,
        }
    }
}

impl PreprocessSection {
    pub fn options(&self) -> PreprocessOptions {
        PreprocessOptions {
            min_token_len: self.min_token_len,
            stopwords: self.stopwords.then(english_stopwords),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingSection {
    pub provider: ProviderKind,
    pub dim: usize,
    pub url: Option<String>,
    pub timeout_secs: f64,
    pub batch_size: usize,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        Self {
            provider: ProviderKind::Hash,
            dim: DEFAULT_DIM,
            url: None,
            timeout_secs: 30.0,
            batch_size: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConceptSection {
    pub presets: Vec<String>,
    /// JSON files holding `{"name": ..., "terms": [...]}`.
    pub files: Vec<PathBuf>,
    pub aggregation: SeedAggregation,
}

impl Default for ConceptSection {
    fn default() -> Self {
        Self {
            presets: vec![ESTABLISHED_PRINCIPLES.to_string(), GENERAL_TERMS.to_string()],
            files: Vec::new(),
            aggregation: SeedAggregation::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSection {
    pub cutoff: CutoffKind,
    pub min_include: usize,
    pub top_n: usize,
}

impl Default for SelectionSection {
    fn default() -> Self {
        Self {
            cutoff: CutoffKind::Drop,
            min_include: DEFAULT_MIN_INCLUDE,
            top_n: DEFAULT_TOP_N,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringSection {
    pub k_range: KRange,
    pub force_k: Option<usize>,
    pub restarts: usize,
}

impl Default for ClusteringSection {
    fn default() -> Self {
        Self {
            k_range: KRange::default(),
            force_k: None,
            restarts: DEFAULT_RESTARTS,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub annotations: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed; every random stage derives its own seed from it.
    pub seed: u64,
    pub output: PathBuf,
    pub input: InputSection,
    pub preprocess: PreprocessSection,
    pub embedding: EmbeddingSection,
    pub topics: TopicModelParams,
    pub concepts: ConceptSection,
    pub selection: SelectionSection,
    pub clustering: ClusteringSection,
    pub report: ReportSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            output: PathBuf::from("run"),
            input: InputSection::default(),
            preprocess: PreprocessSection::default(),
            embedding: EmbeddingSection::default(),
            topics: TopicModelParams::default(),
            concepts: ConceptSection::default(),
            selection: SelectionSection::default(),
            clustering: ClusteringSection::default(),
            report: ReportSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config = Self::from_toml(&text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if let Some(base) = path.parent() {
            config.rebase(base);
        }
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output);
        fix(&mut self.input.path);
        self.concepts.files.iter_mut().for_each(fix);
        self.report.annotations.iter_mut().for_each(fix);
    }

    /// Applies `CONCEPTLENS_SEED` when set.
    pub fn apply_seed_env(&mut self) -> Result<(), ConfigError> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v.trim().parse().map_err(|_| ConfigError::BadSeedEnv(v))?;
        }
        Ok(())
    }

    pub fn seeds(&self) -> SeedSet {
        SeedSet::derive(self.seed)
    }

    /// Seed concepts in config order: presets first, then files.
    pub fn load_concepts(&self) -> Result<Vec<SeedConcept>, String> {
        let mut out = Vec::new();
        for p in &self.concepts.presets {
            out.push(SeedConcept::preset(p).map_err(|e| e.to_string())?);
        }
        for f in &self.concepts.files {
            out.push(SeedConcept::from_file(f).map_err(|e| format!("{}: {e}", f.display()))?);
        }
        Ok(out)
    }

    /// Largest number of topics the selection step can plausibly return.
    pub fn plausible_selection(&self) -> usize {
        let topics = self.topics.doc_topics;
        match self.selection.cutoff {
            CutoffKind::Drop => topics.saturating_sub(1),
            CutoffKind::Topn => self.selection.top_n.min(topics),
        }
    }
}

/// Per-stage seeds derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSet {
    pub master: u64,
    pub doc_clustering: u64,
    pub meta_clustering: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedSet {
    pub fn derive(master: u64) -> Self {
        let doc_clustering = splitmix64(master);
        Self {
            master,
            doc_clustering,
            meta_clustering: splitmix64(doc_clustering),
        }
    }

    pub fn to_map(self) -> std::collections::BTreeMap<String, u64> {
        [
            ("master", self.master),
            ("doc_clustering", self.doc_clustering),
            ("meta_clustering", self.meta_clustering),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub level: Level,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.level {
            Level::Warning => "warning",
            Level::Error => "error",
        };
        write!(f, "{level}: {}: {}", self.field, self.message)
    }
}

struct Diagnostics(Vec<Diagnostic>);

impl Diagnostics {
    fn error(&mut self, field: &str, message: impl Into<String>) {
        self.push(Level::Error, field, message.into());
    }

    fn warn(&mut self, field: &str, message: impl Into<String>) {
        self.push(Level::Warning, field, message.into());
    }

    fn push(&mut self, level: Level, field: &str, message: String) {
        self.0.push(Diagnostic {
            level,
            field: field.to_string(),
            message,
        });
    }

    fn at_least(&mut self, field: &str, value: usize, min: usize) {
        if value < min {
            self.error(field, format!("must be >= {min}, got {value}"));
        }
    }
}

/// Every problem with `config`, errors and warnings alike. A config with no
/// error-level diagnostics can be run.
pub fn validate(config: &PipelineConfig) -> Vec<Diagnostic> {
    let mut d = Diagnostics(Vec::new());

    if !config.input.path.is_file() {
        d.error("input.path", format!("file {} does not exist", config.input.path.display()));
    }
    d.at_least("input.min_reviews", config.input.min_reviews, 1);
    d.at_least("preprocess.min_token_len", config.preprocess.min_token_len, 1);

    let emb = &config.embedding;
    match emb.provider {
        ProviderKind::Hash => d.at_least("embedding.dim", emb.dim, MIN_HASH_DIM),
        ProviderKind::Remote => {
            d.at_least("embedding.dim", emb.dim, 1);
            if emb.url.as_deref().is_none_or(|u| u.trim().is_empty()) {
                d.error("embedding.url", "required when embedding.provider = \"remote\"");
            }
        }
    }
    if !(emb.timeout_secs.is_finite() && emb.timeout_secs > 0.0) {
        d.error("embedding.timeout_secs", format!("must be > 0, got {}", emb.timeout_secs));
    }
    d.at_least("embedding.batch_size", emb.batch_size, 1);

    let t = &config.topics;
    d.at_least("topics.doc_topics", t.doc_topics, 2);
    d.at_least("topics.reduce_dim", t.reduce_dim, 1);
    if t.reduce_dim > emb.dim {
        d.error(
            "topics.reduce_dim",
            format!("must be <= embedding.dim ({}), got {}", emb.dim, t.reduce_dim),
        );
    }
    d.at_least("topics.top_keywords", t.top_keywords, 1);
    if !(t.temperature.is_finite() && t.temperature > 0.0) {
        d.error("topics.temperature", format!("must be > 0, got {}", t.temperature));
    }
    d.at_least("topics.max_iter", t.max_iter, 1);

    let c = &config.concepts;
    if c.presets.is_empty() && c.files.is_empty() {
        d.error("concepts", "at least one preset or seed file is required");
    }
    let mut concepts = Vec::new();
    for p in &c.presets {
        match SeedConcept::preset(p) {
            Ok(s) => concepts.push(s),
            Err(e) => d.error("concepts.presets", e.to_string()),
        }
    }
    for f in &c.files {
        match SeedConcept::from_file(f) {
            Ok(s) => concepts.push(s),
            Err(e) => d.error("concepts.files", format!("{}: {e}", f.display())),
        }
    }
    let mut slugs = BTreeSet::new();
    for s in &concepts {
        if s.slug().is_empty() {
            d.error("concepts", format!("seed name {:?} has no usable characters for file names", s.name()));
        } else if !slugs.insert(s.slug()) {
            d.error("concepts", format!("two seed concepts map to the file name {:?}", s.slug()));
        }
    }

    let sel = &config.selection;
    d.at_least("selection.min_include", sel.min_include, 1);
    d.at_least("selection.top_n", sel.top_n, 1);
    if sel.cutoff == CutoffKind::Drop && t.doc_topics <= sel.min_include {
        d.error(
            "selection.min_include",
            format!(
                "the drop cutoff needs more topics than min_include; topics.doc_topics = {} <= {}",
                t.doc_topics, sel.min_include
            ),
        );
    }

    let cl = &config.clustering;
    let KRange { min, max } = cl.k_range;
    if min < 2 || max < min + 2 {
        d.error(
            "clustering.k_range",
            format!("must satisfy min >= 2 and max >= min + 2, got {}", cl.k_range),
        );
    }
    d.at_least("clustering.restarts", cl.restarts, 1);
    let plausible = config.plausible_selection();
    if max > plausible {
        d.warn(
            "clustering.k_range",
            format!("max k {max} exceeds the largest plausible selection ({plausible} topics); it will be lowered to the selection size"),
        );
    }
    if let Some(k) = cl.force_k {
        if k < 2 {
            d.error("clustering.force_k", format!("must be >= 2, got {k}"));
        } else if k > plausible {
            d.warn(
                "clustering.force_k",
                format!("k {k} exceeds the largest plausible selection ({plausible} topics)"),
            );
        }
    }

    let names: Vec<&str> = concepts.iter().map(|s| s.name()).collect();
    for path in &config.report.annotations {
        match AnnotationFile::load(path) {
            Ok(a) => match &a.seed {
                Some(seed) if !names.contains(&seed.as_str()) => d.error(
                    "report.annotations",
                    format!("{}: seed {seed:?} is not a configured seed concept", path.display()),
                ),
                None if names.len() > 1 => d.error(
                    "report.annotations",
                    format!("{}: needs a \"seed\" field when several seed concepts are configured", path.display()),
                ),
                _ => {}
            },
            Err(e) => d.error("report.annotations", format!("{}: {e}", path.display())),
        }
    }
    d.0
}

pub fn has_errors(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(|d| d.level == Level::Error)
}
