//! Topic discovery: SVD reduction of document embeddings, K-means document
//! clustering, soft memberships, class-based TF-IDF keywords and keyword-based
//! topic embeddings.

use std::cmp::Ordering;
use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corpus::TokenList;
use crate::embed::{average_embeddings, embed_texts, EmbedError, EmbeddingProvider, EmbeddingVector};
use crate::lloyd::{self, restart_rng, LloydRun};
use crate::matrix::{distance, Matrix};

/// Number of top keywords averaged into a topic embedding.
pub const TOPIC_EMBEDDING_KEYWORDS: usize = 10;
pub const DEFAULT_DOC_TOPICS: usize = 100;
pub const DEFAULT_REDUCE_DIM: usize = 16;
pub const DEFAULT_TEMPERATURE: f64 = 1.0;

#[derive(Debug, thiserror::Error)]
pub enum TopicError {
    #[error("target dimension {target} must be between 1 and min(rows, dim) = {limit}")]
    BadTargetDim { target: usize, limit: usize },
    #[error("need at least 2 rows to reduce, got {0}")]
    TooFewRows(usize),
    #[error("zero variance: all {0} input rows are identical")]
    ZeroVariance(usize),
    #[error("input matrix contains non-finite values")]
    NonFinite,
    #[error("k = {k} must satisfy 2 <= k <= rows = {rows}")]
    BadK { k: usize, rows: usize },
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error("top_k must be at least 1")]
    BadTopK,
    #[error("{docs} documents but {assignments} assignments")]
    AssignmentLength { docs: usize, assignments: usize },
    #[error("class {0} has no documents")]
    EmptyClass(usize),
    #[error("empty vocabulary: no document has any token")]
    EmptyVocabulary,
    #[error("topic {0} has no keywords")]
    NoKeywords(u32),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Documents projected onto the leading principal directions.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedMatrix {
    pub values: Matrix,
    /// Principal directions, one per row (`target_dim x original_dim`).
    pub components: Matrix,
    pub column_means: Vec<f64>,
    pub singular_values: Vec<f64>,
}

/// Centres the columns and projects onto the top `target_dim` right singular
/// vectors. Each component is signed so that its largest-magnitude loading is
/// positive (first such loading on ties).
pub fn reduce_dimensions(embeddings: &Matrix, target_dim: usize) -> Result<ReducedMatrix, TopicError> {
    let (rows, dim) = (embeddings.rows(), embeddings.cols());
    if rows < 2 {
        return Err(TopicError::TooFewRows(rows));
    }
    let limit = rows.min(dim);
    if target_dim == 0 || target_dim > limit {
        return Err(TopicError::BadTargetDim { target: target_dim, limit });
    }
    if !embeddings.is_finite() {
        return Err(TopicError::NonFinite);
    }
    let first = embeddings.row(0);
    if embeddings.iter_rows().all(|r| r == first) {
        return Err(TopicError::ZeroVariance(rows));
    }

    let mut means = vec![0.0; dim];
    for r in embeddings.iter_rows() {
        for (m, x) in means.iter_mut().zip(r) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= rows as f64);
    let centered = DMatrix::from_fn(rows, dim, |i, j| embeddings.row(i)[j] - means[j]);

    let svd = centered.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));

    let mut components = Matrix::zeros(target_dim, dim);
    let mut singular_values = Vec::with_capacity(target_dim);
    for (c, &idx) in order.iter().take(target_dim).enumerate() {
        let row: Vec<f64> = v_t.row(idx).iter().copied().collect();
        let mut pivot = 0;
        for (j, v) in row.iter().enumerate() {
            if v.abs() > row[pivot].abs() {
                pivot = j;
            }
        }
        let sign = if row[pivot] < 0.0 { -1.0 } else { 1.0 };
        components
            .row_mut(c)
            .iter_mut()
            .zip(&row)
            .for_each(|(dst, v)| *dst = sign * v);
        singular_values.push(sv[idx]);
    }

    let mut values = Matrix::zeros(rows, target_dim);
    for i in 0..rows {
        for c in 0..target_dim {
            let comp = components.row(c);
            values.row_mut(i)[c] = (0..dim).map(|j| centered[(i, j)] * comp[j]).sum();
        }
    }
    Ok(ReducedMatrix {
        values,
        components,
        column_means: means,
        singular_values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentClusters {
    pub assignments: Vec<usize>,
    pub centroids: Matrix,
    pub wcss: f64,
    pub wcss_trace: Vec<f64>,
}

impl From<LloydRun> for DocumentClusters {
    fn from(run: LloydRun) -> Self {
        Self {
            assignments: run.assignments,
            centroids: run.centroids,
            wcss: run.wcss,
            wcss_trace: run.wcss_trace,
        }
    }
}

/// Single seeded Lloyd run with k-means++ initialization.
pub fn cluster_documents(reduced: &Matrix, k: usize, seed: u64) -> Result<DocumentClusters, TopicError> {
    cluster_documents_with(reduced, k, seed, lloyd::DEFAULT_MAX_ITER)
}

pub fn cluster_documents_with(
    reduced: &Matrix,
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<DocumentClusters, TopicError> {
    if k < 2 || k > reduced.rows() {
        return Err(TopicError::BadK { k, rows: reduced.rows() });
    }
    let mut rng = restart_rng(seed, 0);
    Ok(lloyd::lloyd(reduced, k, &mut rng, max_iter).into())
}

/// Row-stochastic document × topic membership matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMembership(Matrix);

impl SoftMembership {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn row(&self, doc: usize) -> &[f64] {
        self.0.row(doc)
    }

    /// Topic with the highest membership; lowest index on ties.
    pub fn argmax(&self, doc: usize) -> usize {
        let row = self.0.row(doc);
        let mut best = 0;
        for (j, &p) in row.iter().enumerate() {
            if p > row[best] {
                best = j;
            }
        }
        best
    }
}

/// Softmax over `-distance(point, centroid) / temperature`.
pub fn soft_memberships(
    reduced: &Matrix,
    centroids: &Matrix,
    temperature: f64,
) -> Result<SoftMembership, TopicError> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(TopicError::BadTemperature(temperature));
    }
    let k = centroids.rows();
    let mut out = Matrix::zeros(reduced.rows(), k);
    for (i, p) in reduced.iter_rows().enumerate() {
        let logits: Vec<f64> = centroids
            .iter_rows()
            .map(|c| -distance(p, c) / temperature)
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        for (dst, e) in out.row_mut(i).iter_mut().zip(&exps) {
            *dst = e / total;
        }
    }
    Ok(SoftMembership(out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keyword {
    pub term: String,
    pub weight: f64,
}

/// Full class-based TF-IDF table: for each class, every term occurring in it
/// with weight `tf(t,c) * ln(1 + A / f(t))`, where `tf` counts the term in the
/// class, `f` counts it over all classes and `A` is the mean token count per
/// class.
pub fn ctfidf_weights(
    docs: &[TokenList],
    assignments: &[usize],
    n_classes: usize,
) -> Result<Vec<HashMap<String, f64>>, TopicError> {
    if docs.len() != assignments.len() {
        return Err(TopicError::AssignmentLength {
            docs: docs.len(),
            assignments: assignments.len(),
        });
    }
    let mut class_docs = vec![0usize; n_classes];
    let mut tf: Vec<HashMap<&str, u64>> = vec![HashMap::new(); n_classes];
    let mut total: HashMap<&str, u64> = HashMap::new();
    let mut token_count = 0u64;
    for (doc, &class) in docs.iter().zip(assignments) {
        class_docs[class] += 1;
        for t in doc.iter() {
            *tf[class].entry(t).or_insert(0) += 1;
            *total.entry(t).or_insert(0) += 1;
            token_count += 1;
        }
    }
    if let Some(empty) = class_docs.iter().position(|&n| n == 0) {
        return Err(TopicError::EmptyClass(empty));
    }
    if token_count == 0 {
        return Err(TopicError::EmptyVocabulary);
    }
    let avg_tokens = token_count as f64 / n_classes as f64;
    Ok(tf
        .into_iter()
        .map(|counts| {
            counts
                .into_iter()
                .map(|(t, c)| {
                    let w = c as f64 * (1.0 + avg_tokens / total[t] as f64).ln();
                    (t.to_string(), w)
                })
                .collect()
        })
        .collect())
}

fn by_weight_then_term(a: &Keyword, b: &Keyword) -> Ordering {
    b.weight.total_cmp(&a.weight).then_with(|| a.term.cmp(&b.term))
}

/// Top `top_k` c-TF-IDF keywords per class, heaviest first, ties broken by
/// term. A class whose documents have no tokens gets an empty list.
pub fn extract_keywords_ctfidf(
    docs: &[TokenList],
    assignments: &[usize],
    n_classes: usize,
    top_k: usize,
) -> Result<Vec<Vec<Keyword>>, TopicError> {
    if top_k == 0 {
        return Err(TopicError::BadTopK);
    }
    let table = ctfidf_weights(docs, assignments, n_classes)?;
    Ok(table
        .into_iter()
        .map(|weights| {
            let mut kws: Vec<Keyword> = weights
                .into_iter()
                .map(|(term, weight)| Keyword { term, weight })
                .collect();
            kws.sort_by(by_weight_then_term);
            kws.truncate(top_k);
            kws
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topic {
    pub topic_id: u32,
    pub doc_ids: Vec<String>,
    pub keywords: Vec<Keyword>,
    pub embedding: Option<EmbeddingVector>,
}

impl Topic {
    pub fn top_terms(&self, n: usize) -> Vec<String> {
        self.keywords.iter().take(n).map(|k| k.term.clone()).collect()
    }
}

/// Mean embedding of the topic's top keywords (at most ten), each keyword
/// embedded as its own text. Terms are averaged in sorted order so that equal
/// keyword sets give bit-identical embeddings.
pub fn compute_topic_embedding(
    topic: &Topic,
    provider: &dyn EmbeddingProvider,
) -> Result<EmbeddingVector, TopicError> {
    if topic.keywords.is_empty() {
        return Err(TopicError::NoKeywords(topic.topic_id));
    }
    let mut terms = topic.top_terms(TOPIC_EMBEDDING_KEYWORDS);
    terms.sort();
    let vectors = embed_texts(provider, &terms)?;
    Ok(average_embeddings(&vectors)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicModelParams {
    pub doc_topics: usize,
    pub reduce_dim: usize,
    pub top_keywords: usize,
    pub temperature: f64,
    pub max_iter: usize,
}

impl Default for TopicModelParams {
    fn default() -> Self {
        Self {
            doc_topics: DEFAULT_DOC_TOPICS,
            reduce_dim: DEFAULT_REDUCE_DIM,
            top_keywords: TOPIC_EMBEDDING_KEYWORDS,
            temperature: DEFAULT_TEMPERATURE,
            max_iter: lloyd::DEFAULT_MAX_ITER,
        }
    }
}

/// Per-document outcome of topic discovery.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentTopic {
    pub review_id: String,
    /// `None` when the document's cluster produced no keywords.
    pub topic_id: Option<u32>,
    pub cluster: usize,
    /// Soft membership of the document in its own cluster.
    pub membership: f64,
}

#[derive(Debug, Clone)]
pub struct TopicModel {
    pub topics: Vec<Topic>,
    pub documents: Vec<DocumentTopic>,
    pub memberships: SoftMembership,
    pub wcss: f64,
}

/// Runs reduction, clustering, memberships, keyword extraction and topic
/// embedding end to end. Clusters without any token are not turned into
/// topics; the remaining topics are numbered densely in cluster order.
pub fn discover_topics(
    review_ids: &[String],
    tokens: &[TokenList],
    embeddings: &Matrix,
    params: &TopicModelParams,
    seed: u64,
    provider: &dyn EmbeddingProvider,
) -> Result<TopicModel, TopicError> {
    let reduced = reduce_dimensions(embeddings, params.reduce_dim)?;
    let clusters = cluster_documents_with(&reduced.values, params.doc_topics, seed, params.max_iter)?;
    let memberships = soft_memberships(&reduced.values, &clusters.centroids, params.temperature)?;
    let keywords = extract_keywords_ctfidf(tokens, &clusters.assignments, params.doc_topics, params.top_keywords)?;

    let mut cluster_topic = vec![None; params.doc_topics];
    let mut topics = Vec::new();
    for (cluster, kws) in keywords.into_iter().enumerate() {
        if kws.is_empty() {
            log::warn!("document cluster {cluster} has no tokens; it is not turned into a topic");
            continue;
        }
        let topic_id = topics.len() as u32;
        cluster_topic[cluster] = Some(topic_id);
        let doc_ids = review_ids
            .iter()
            .zip(&clusters.assignments)
            .filter(|(_, &a)| a == cluster)
            .map(|(id, _)| id.clone())
            .collect();
        topics.push(Topic {
            topic_id,
            doc_ids,
            keywords: kws,
            embedding: None,
        });
    }
    for topic in &mut topics {
        topic.embedding = Some(compute_topic_embedding(topic, provider)?);
    }
    let documents = review_ids
        .iter()
        .zip(&clusters.assignments)
        .enumerate()
        .map(|(i, (id, &cluster))| DocumentTopic {
            review_id: id.clone(),
            topic_id: cluster_topic[cluster],
            cluster,
            membership: memberships.row(i)[cluster],
        })
        .collect();
    Ok(TopicModel {
        topics,
        documents,
        memberships,
        wcss: clusters.wcss,
    })
}
