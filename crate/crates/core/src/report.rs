//! Artifact writers and readers: topics JSONL, ranking and curve CSVs, the
//! clustered topic table, annotations and the run manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::concept::{drop_values, CutoffResult, RankedTopic, RankedTopicList};
use crate::embed::EmbeddingVector;
use crate::metacluster::{KScore, KSelectionReport, TopicClustering};
use crate::topicmodel::{Keyword, Topic};

/// Keywords shown per topic in the cluster table.
pub const TABLE_KEYWORDS: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("annotation refers to cluster {0}, which does not exist")]
    UnknownCluster(usize),
    #[error("annotation refers to topic {0}, which is not in the clustering")]
    UnknownTopic(u32),
    #[error("clustered topic {0} is missing from the topic list")]
    MissingTopic(u32),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn parse_err(line: usize, message: impl Into<String>) -> ReportError {
    ReportError::Parse {
        line,
        message: message.into(),
    }
}

/// One line of `topics.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRecord {
    pub topic_id: u32,
    pub size: usize,
    pub keywords: Vec<(String, f64)>,
    pub embedding: Vec<f64>,
}

impl From<&Topic> for TopicRecord {
    fn from(t: &Topic) -> Self {
        Self {
            topic_id: t.topic_id,
            size: t.doc_ids.len(),
            keywords: t.keywords.iter().map(|k| (k.term.clone(), k.weight)).collect(),
            embedding: t.embedding.as_ref().map(|e| e.values().to_vec()).unwrap_or_default(),
        }
    }
}

pub fn write_topics_jsonl(topics: &[Topic]) -> String {
    let mut out = String::new();
    for t in topics {
        out.push_str(&serde_json::to_string(&TopicRecord::from(t)).expect("topic serializes"));
        out.push('\n');
    }
    out
}

pub fn read_topics_jsonl(text: &str) -> Result<Vec<TopicRecord>, ReportError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| parse_err(i + 1, e.to_string())))
        .collect()
}

/// Rebuilds topics from their records plus the document assignment list
/// (`review_id`, topic) pairs.
pub fn topics_from_records(
    records: Vec<TopicRecord>,
    doc_topics: &[(String, Option<u32>)],
) -> Result<Vec<Topic>, ReportError> {
    let mut docs: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    for (id, topic) in doc_topics {
        if let Some(t) = topic {
            docs.entry(*t).or_default().push(id.clone());
        }
    }
    records
        .into_iter()
        .map(|r| {
            let embedding = if r.embedding.is_empty() {
                None
            } else {
                Some(EmbeddingVector::new(r.embedding).map_err(|e| parse_err(0, e.to_string()))?)
            };
            Ok(Topic {
                topic_id: r.topic_id,
                doc_ids: docs.remove(&r.topic_id).unwrap_or_default(),
                keywords: r
                    .keywords
                    .into_iter()
                    .map(|(term, weight)| Keyword { term, weight })
                    .collect(),
                embedding,
            })
        })
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_f64(field: &str, line: usize) -> Result<f64, ReportError> {
    field
        .parse()
        .map_err(|_| parse_err(line, format!("not a number: {field:?}")))
}

fn parse_opt_f64(field: &str, line: usize) -> Result<Option<f64>, ReportError> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_f64(field, line).map(Some)
    }
}

fn parse_bool(field: &str, line: usize) -> Result<bool, ReportError> {
    match field {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(parse_err(line, format!("not a boolean: {other:?}"))),
    }
}

fn csv_rows(text: &str, header: &str) -> Result<Vec<(usize, Vec<String>)>, ReportError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == header => {}
        _ => return Err(parse_err(1, format!("expected header {header:?}"))),
    }
    let width = header.split(',').count();
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let fields: Vec<String> = l.split(',').map(str::to_string).collect();
            if fields.len() != width {
                return Err(parse_err(i + 1, format!("expected {width} fields, got {}", fields.len())));
            }
            Ok((i + 1, fields))
        })
        .collect()
}

const RANKING_HEADER: &str = "rank,topic_id,score,drop_ratio";

/// `rank,topic_id,score,drop_ratio`; the drop column is empty on the last rank.
pub fn write_ranking_csv(ranking: &RankedTopicList) -> String {
    let drops = drop_values(ranking);
    let mut out = format!("{RANKING_HEADER}\n");
    for (i, e) in ranking.entries().iter().enumerate() {
        let drop = drops.get(i).map(|d| d.0);
        writeln!(out, "{},{},{},{}", i + 1, e.topic_id, e.score, fmt_opt(drop)).unwrap();
    }
    out
}

pub fn read_ranking_csv(text: &str) -> Result<RankedTopicList, ReportError> {
    let entries = csv_rows(text, RANKING_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            Ok(RankedTopic {
                topic_id: f[1].parse().map_err(|_| parse_err(line, "bad topic_id"))?,
                score: parse_f64(&f[2], line)?,
            })
        })
        .collect::<Result<Vec<_>, ReportError>>()?;
    Ok(RankedTopicList::from_entries(entries))
}

const CURVE_HEADER: &str = "rank,topic_id,score,drop_ratio,selected,is_cut";

/// Similarity curve: the ranking plus a `selected` flag per row and an
/// `is_cut` flag on the last selected rank.
pub fn emit_similarity_curve(ranking: &RankedTopicList, cutoff: &CutoffResult) -> String {
    let drops = drop_values(ranking);
    let mut out = format!("{CURVE_HEADER}\n");
    for (i, e) in ranking.entries().iter().enumerate() {
        let rank = i + 1;
        writeln!(
            out,
            "{},{},{},{},{},{}",
            rank,
            e.topic_id,
            e.score,
            fmt_opt(drops.get(i).map(|d| d.0)),
            rank <= cutoff.cut_index,
            rank == cutoff.cut_index
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityCurve {
    pub ranking: RankedTopicList,
    pub drop_ratios: Vec<Option<f64>>,
    pub selected_topic_ids: Vec<u32>,
    pub cut_index: usize,
}

pub fn parse_similarity_curve(text: &str) -> Result<SimilarityCurve, ReportError> {
    let mut entries = Vec::new();
    let mut drop_ratios = Vec::new();
    let mut selected = Vec::new();
    let mut cut_index = 0;
    for (line, f) in csv_rows(text, CURVE_HEADER)? {
        let topic_id: u32 = f[1].parse().map_err(|_| parse_err(line, "bad topic_id"))?;
        entries.push(RankedTopic {
            topic_id,
            score: parse_f64(&f[2], line)?,
        });
        drop_ratios.push(parse_opt_f64(&f[3], line)?);
        if parse_bool(&f[4], line)? {
            selected.push(topic_id);
        }
        if parse_bool(&f[5], line)? {
            cut_index = f[0].parse().map_err(|_| parse_err(line, "bad rank"))?;
        }
    }
    Ok(SimilarityCurve {
        ranking: RankedTopicList::from_entries(entries),
        drop_ratios,
        selected_topic_ids: selected,
        cut_index,
    })
}

const KSELECT_HEADER: &str = "k,wcss,mean_silhouette,is_elbow_candidate,is_silhouette_max,is_chosen";

pub fn emit_k_selection_curves(report: &KSelectionReport) -> String {
    let mut out = format!("{KSELECT_HEADER}\n");
    for s in &report.scores {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            s.k,
            s.wcss,
            s.mean_silhouette,
            report.elbow_candidates.contains(&s.k),
            report.silhouette_local_maxima.contains(&s.k),
            s.k == report.chosen_k
        )
        .unwrap();
    }
    out
}

/// Parses a k-selection CSV. Flags that the CSV does not carry
/// (`elbow_degenerate`, `forced`) come back false.
pub fn parse_k_selection_curves(text: &str) -> Result<KSelectionReport, ReportError> {
    let mut scores = Vec::new();
    let mut elbow = BTreeSet::new();
    let mut maxima = BTreeSet::new();
    let mut chosen = None;
    for (line, f) in csv_rows(text, KSELECT_HEADER)? {
        let k: usize = f[0].parse().map_err(|_| parse_err(line, "bad k"))?;
        scores.push(KScore {
            k,
            wcss: parse_f64(&f[1], line)?,
            mean_silhouette: parse_f64(&f[2], line)?,
        });
        if parse_bool(&f[3], line)? {
            elbow.insert(k);
        }
        if parse_bool(&f[4], line)? {
            maxima.insert(k);
        }
        if parse_bool(&f[5], line)? {
            chosen = Some(k);
        }
    }
    Ok(KSelectionReport {
        scores,
        chosen_k: chosen.unwrap_or(0),
        elbow_candidates: elbow,
        silhouette_local_maxima: maxima,
        elbow_degenerate: false,
        forced: false,
    })
}

/// Human-supplied labels for one seed concept's clustering.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationFile {
    /// Seed concept name these labels belong to.
    #[serde(default)]
    pub seed: Option<String>,
    #[serde(default)]
    pub clusters: BTreeMap<usize, String>,
    #[serde(default)]
    pub topics: BTreeMap<u32, String>,
    /// Free-form per-cluster attributes echoed into the table, e.g.
    /// `{"scope": "internal", "focus": "technical"}`.
    #[serde(default)]
    pub cluster_attributes: BTreeMap<usize, BTreeMap<String, String>>,
}

impl AnnotationFile {
    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| parse_err(e.line(), e.to_string()))
    }

    pub fn validate(&self, clustering: &TopicClustering) -> Result<(), ReportError> {
        let k = clustering.solution.k;
        for &c in self.clusters.keys().chain(self.cluster_attributes.keys()) {
            if c >= k {
                return Err(ReportError::UnknownCluster(c));
            }
        }
        for &t in self.topics.keys() {
            if !clustering.topic_ids.contains(&t) {
                return Err(ReportError::UnknownTopic(t));
            }
        }
        Ok(())
    }
}

/// Markdown table of clusters, each listing its member topics with their top
/// keywords. Clusters are named `C0..C(k-1)` and suffixed with a label when
/// annotated.
pub fn emit_topic_table(
    title: &str,
    clustering: &TopicClustering,
    topics: &[Topic],
    annotations: Option<&AnnotationFile>,
) -> Result<String, ReportError> {
    if let Some(a) = annotations {
        a.validate(clustering)?;
    }
    let by_id: BTreeMap<u32, &Topic> = topics.iter().map(|t| (t.topic_id, t)).collect();
    let mut out = format!("## {title}\n");
    for (c, members) in clustering.members().iter().enumerate() {
        let label = annotations.and_then(|a| a.clusters.get(&c));
        match label {
            Some(l) => writeln!(out, "\n### Cluster C{c}: {l}\n").unwrap(),
            None => writeln!(out, "\n### Cluster C{c}\n").unwrap(),
        }
        if let Some(attrs) = annotations.and_then(|a| a.cluster_attributes.get(&c)) {
            for (key, value) in attrs {
                writeln!(out, "> {key}: {value}").unwrap();
            }
            out.push('\n');
        }
        for (j, &topic_id) in members.iter().enumerate() {
            let topic = by_id.get(&topic_id).ok_or(ReportError::MissingTopic(topic_id))?;
            let terms = topic.top_terms(TABLE_KEYWORDS).join(", ");
            let topic_label = annotations
                .and_then(|a| a.topics.get(&topic_id))
                .map(|l| format!(" {l}"))
                .unwrap_or_default();
            writeln!(out, "- C{c}.{}. [topic {topic_id}]{topic_label}: {terms}", j + 1).unwrap();
        }
    }
    Ok(out)
}

/// Counts topic lines in a table produced by [`emit_topic_table`].
pub fn count_table_topics(table: &str) -> usize {
    table.lines().filter(|l| l.starts_with("- C") && l.contains("[topic ")).count()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderIdentity {
    pub name: String,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub provider: ProviderIdentity,
    /// SHA-256 of every artifact, keyed by file name.
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Recomputes every artifact hash under `dir`; returns the names whose
    /// content no longer matches.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.artifacts
            .iter()
            .filter(|(name, hash)| {
                std::fs::read(dir.join(name))
                    .map(|b| sha256_hex(&b) != **hash)
                    .unwrap_or(true)
            })
            .map(|(name, _)| name.clone())
            .collect()
    }
}

/// Hashes the named artifacts in `dir` and assembles the manifest.
pub fn write_manifest(
    dir: &Path,
    artifact_names: &[String],
    config: serde_json::Value,
    seeds: BTreeMap<String, u64>,
    provider: ProviderIdentity,
) -> Result<RunManifest, ReportError> {
    let mut artifacts = BTreeMap::new();
    for name in artifact_names {
        let path = dir.join(name);
        let bytes = std::fs::read(&path).map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })?;
        artifacts.insert(name.clone(), sha256_hex(&bytes));
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        seeds,
        provider,
        artifacts,
    };
    let path = dir.join("manifest.json");
    std::fs::write(&path, manifest.to_json()).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(manifest)
}
