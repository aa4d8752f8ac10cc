//! Seed concepts, cosine ranking of topics against them, and cut-off rules
//! for picking the relevant prefix of a ranking.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embed::{average_embeddings, embed_texts, EmbedError, EmbeddingProvider, EmbeddingVector};
use crate::topicmodel::Topic;

pub const DEFAULT_MIN_INCLUDE: usize = 10;
pub const DEFAULT_TOP_N: usize = 50;

pub const ESTABLISHED_PRINCIPLES: &str = "established-principles";
pub const GENERAL_TERMS: &str = "general-terms";

#[derive(Debug, thiserror::Error)]
pub enum ConceptError {
    #[error("seed concept {0:?} has no terms")]
    NoTerms(String),
    #[error("seed concept {0:?} has a blank term")]
    BlankTerm(String),
    #[error("seed concept name must not be blank")]
    BlankName,
    #[error("unknown seed preset {0:?} (expected established-principles or general-terms)")]
    UnknownPreset(String),
    #[error("cannot read seed file {path}: {message}")]
    SeedFile { path: String, message: String },
    #[error("degenerate vector: zero norm")]
    ZeroNorm,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("topic {0} has no embedding")]
    MissingEmbedding(u32),
    #[error("topic {0} has a zero-norm embedding")]
    DegenerateTopic(u32),
    #[error("ranking has {len} topics; the drop-off rule with min_include = {min_include} needs at least {}", min_include + 1)]
    RankingTooShort { len: usize, min_include: usize },
    #[error("min_include must be at least 1")]
    BadMinInclude,
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// A named list of reference phrases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSeed")]
pub struct SeedConcept {
    name: String,
    terms: Vec<String>,
}

#[derive(Deserialize)]
struct RawSeed {
    name: String,
    terms: Vec<String>,
}

impl TryFrom<RawSeed> for SeedConcept {
    type Error = ConceptError;

    fn try_from(raw: RawSeed) -> Result<Self, Self::Error> {
        SeedConcept::new(raw.name, raw.terms)
    }
}

impl SeedConcept {
    pub fn new(name: impl Into<String>, terms: Vec<String>) -> Result<Self, ConceptError> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(ConceptError::BlankName);
        }
        if terms.is_empty() {
            return Err(ConceptError::NoTerms(name));
        }
        if terms.iter().any(|t| t.trim().is_empty()) {
            return Err(ConceptError::BlankTerm(name));
        }
        Ok(Self { name, terms })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Built-in master texts: the seven ethics-guideline principles, and three
    /// deliberately general governance words.
    pub fn preset(name: &str) -> Result<Self, ConceptError> {
        let terms: &[&str] = match name {
            ESTABLISHED_PRINCIPLES => &[
                "accountability",
                "transparency",
                "fairness",
                "human agency and oversight",
                "privacy and data governance",
                "technical robustness and safety",
                "societal and environmental well-being",
            ],
            GENERAL_TERMS => &["Governance", "Ethics", "Trustworthiness"],
            other => return Err(ConceptError::UnknownPreset(other.to_string())),
        };
        Self::new(name, terms.iter().map(|t| t.to_string()).collect())
    }

    pub fn presets() -> Vec<Self> {
        [ESTABLISHED_PRINCIPLES, GENERAL_TERMS]
            .iter()
            .map(|p| Self::preset(p).expect("built-in preset"))
            .collect()
    }

    /// Reads `{"name": ..., "terms": [...]}` from a JSON file.
    pub fn from_file(path: &Path) -> Result<Self, ConceptError> {
        let err = |message: String| ConceptError::SeedFile {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| err(e.to_string()))
    }

    /// Name usable as a file-name component.
    pub fn slug(&self) -> String {
        let mut slug: String = self
            .name
            .chars()
            .map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c.to_ascii_lowercase() } else { '-' })
            .collect();
        while slug.contains("--") {
            slug = slug.replace("--", "-");
        }
        slug.trim_matches('-').to_string()
    }
}

/// How a multi-term seed concept becomes one vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedAggregation {
    /// Embed every term separately and average.
    #[default]
    PerTerm,
    /// Embed all terms joined into one comma-separated text.
    Joined,
}

impl FromStr for SeedAggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-term" => Ok(Self::PerTerm),
            "joined" => Ok(Self::Joined),
            other => Err(format!("unknown seed aggregation {other:?} (expected per-term or joined)")),
        }
    }
}

impl fmt::Display for SeedAggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PerTerm => "per-term",
            Self::Joined => "joined",
        })
    }
}

pub fn embed_seed(
    concept: &SeedConcept,
    provider: &dyn EmbeddingProvider,
    aggregation: SeedAggregation,
) -> Result<EmbeddingVector, ConceptError> {
    let vectors = match aggregation {
        SeedAggregation::PerTerm => embed_texts(provider, concept.terms())?,
        SeedAggregation::Joined => embed_texts(provider, &[concept.terms().join(", ")])?,
    };
    Ok(average_embeddings(&vectors)?)
}

/// Cosine similarity clamped to [-1, 1].
pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, ConceptError> {
    if u.dim() != v.dim() {
        return Err(ConceptError::DimensionMismatch(u.dim(), v.dim()));
    }
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return Err(ConceptError::ZeroNorm);
    }
    let dot: f64 = u.values().iter().zip(v.values()).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedTopic {
    pub topic_id: u32,
    pub score: f64,
}

/// Topics by descending score, ties by ascending topic id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTopicList {
    entries: Vec<RankedTopic>,
}

impl RankedTopicList {
    /// Sorts the given entries into ranking order.
    pub fn from_entries(mut entries: Vec<RankedTopic>) -> Self {
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.topic_id.cmp(&b.topic_id)));
        Self { entries }
    }

    pub fn entries(&self) -> &[RankedTopic] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn topic_ids(&self) -> Vec<u32> {
        self.entries.iter().map(|e| e.topic_id).collect()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.score).collect()
    }
}

/// Ranking scores are cosines rounded to this many decimal places.
pub const SCORE_DECIMALS: i32 = 12;

/// Rounds a cosine to [`SCORE_DECIMALS`] places. Cosines that are equal in
/// exact arithmetic but differ in their last bits (common with hashed
/// embeddings, and dependent on vector scale) become exact ties, which the
/// ranking then breaks by topic id.
pub fn quantize_score(cosine: f64) -> f64 {
    let scale = 10f64.powi(SCORE_DECIMALS);
    // adding 0.0 turns -0.0 into 0.0, which total ordering would separate
    (cosine * scale).round() / scale + 0.0
}

/// Scores every topic by its rounded cosine to the seed embedding.
pub fn rank_topics(topics: &[Topic], seed_embedding: &EmbeddingVector) -> Result<RankedTopicList, ConceptError> {
    let entries = topics
        .iter()
        .map(|t| {
            let emb = t.embedding.as_ref().ok_or(ConceptError::MissingEmbedding(t.topic_id))?;
            let score = cosine(emb, seed_embedding).map_err(|e| match e {
                ConceptError::ZeroNorm if emb.norm() == 0.0 => ConceptError::DegenerateTopic(t.topic_id),
                other => other,
            })?;
            Ok(RankedTopic {
                topic_id: t.topic_id,
                score: quantize_score(score),
            })
        })
        .collect::<Result<Vec<_>, ConceptError>>()?;
    Ok(RankedTopicList::from_entries(entries))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffMethod {
    RelativeDrop,
    TopN,
}

/// Which formula produced a drop value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropRule {
    /// `(s_i - s_{i+1}) / s_i`, used when `s_i > 0`.
    Relative,
    /// `s_i - s_{i+1}`, used when `s_i <= 0`.
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffResult {
    pub method: CutoffMethod,
    pub cut_index: usize,
    pub drop_ratio: Option<f64>,
    pub drop_rule: Option<DropRule>,
    pub selected_topic_ids: Vec<u32>,
}

/// Drop after 1-based rank `i`, for every `i` in `1..len`.
pub fn drop_values(ranking: &RankedTopicList) -> Vec<(f64, DropRule)> {
    ranking
        .entries
        .windows(2)
        .map(|w| {
            let (s, next) = (w[0].score, w[1].score);
            if s > 0.0 {
                ((s - next) / s, DropRule::Relative)
            } else {
                (s - next, DropRule::Absolute)
            }
        })
        .collect()
}

/// Cuts the ranking after the largest drop at or beyond rank `min_include`.
/// Ties go to the earliest rank.
pub fn select_by_relative_drop(
    ranking: &RankedTopicList,
    min_include: usize,
) -> Result<CutoffResult, ConceptError> {
    if min_include == 0 {
        return Err(ConceptError::BadMinInclude);
    }
    if ranking.len() <= min_include {
        return Err(ConceptError::RankingTooShort {
            len: ranking.len(),
            min_include,
        });
    }
    let drops = drop_values(ranking);
    let mut best = min_include;
    for i in min_include + 1..ranking.len() {
        if drops[i - 1].0 > drops[best - 1].0 {
            best = i;
        }
    }
    let (ratio, rule) = drops[best - 1];
    Ok(CutoffResult {
        method: CutoffMethod::RelativeDrop,
        cut_index: best,
        drop_ratio: Some(ratio),
        drop_rule: Some(rule),
        selected_topic_ids: ranking.entries[..best].iter().map(|e| e.topic_id).collect(),
    })
}

pub fn select_top_n(ranking: &RankedTopicList, n: usize) -> CutoffResult {
    let cut = n.min(ranking.len());
    CutoffResult {
        method: CutoffMethod::TopN,
        cut_index: cut,
        drop_ratio: None,
        drop_rule: None,
        selected_topic_ids: ranking.entries[..cut].iter().map(|e| e.topic_id).collect(),
    }
}
