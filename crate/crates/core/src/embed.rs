//! Embedding vectors and the providers that produce them.
//!
//! Two providers ship here: [`HashEmbedder`], a deterministic signed
//! feature-hashing embedder that needs no model, and [`RemoteProvider`], a
//! client for any HTTP service speaking the `/embed` JSON protocol.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, PreprocessOptions, TokenList};

/// Smallest dimension accepted by the hash embedder.
pub const MIN_HASH_DIM: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("no texts to embed")]
    EmptyBatch,
    #[error("embedding list is empty")]
    EmptyList,
    #[error("vector {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("vector {index} has a non-finite value")]
    NonFinite { index: usize },
    #[error("provider returned {found} vectors for {expected} texts")]
    CountMismatch { expected: usize, found: usize },
    #[error("provider {provider} failed at text {index}: {message}")]
    Provider {
        provider: String,
        index: usize,
        message: String,
    },
    #[error("hash embedding dimension must be at least {MIN_HASH_DIM}, got {0}")]
    DimTooSmall(usize),
}

/// A dense real vector with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::DimensionMismatch {
                index: 0,
                expected: 1,
                found: 0,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite { index: 0 });
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }
}

/// Something that turns texts into fixed-dimension vectors.
///
/// Implementations must be deterministic: the same text yields the same
/// vector for the lifetime of the provider.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError>;
}

/// Embeds `texts` with `provider`, checking arity and dimension of the result.
pub fn embed_texts(
    provider: &dyn EmbeddingProvider,
    texts: &[String],
) -> Result<Vec<EmbeddingVector>, EmbedError> {
    if texts.is_empty() {
        return Err(EmbedError::EmptyBatch);
    }
    let vectors = provider.embed_batch(texts)?;
    if vectors.len() != texts.len() {
        return Err(EmbedError::CountMismatch {
            expected: texts.len(),
            found: vectors.len(),
        });
    }
    let expected = provider.dim();
    for (index, v) in vectors.iter().enumerate() {
        if v.dim() != expected {
            return Err(EmbedError::DimensionMismatch {
                index,
                expected,
                found: v.dim(),
            });
        }
    }
    Ok(vectors)
}

/// Coordinate-wise mean. The result is not renormalized.
pub fn average_embeddings(vectors: &[EmbeddingVector]) -> Result<EmbeddingVector, EmbedError> {
    let first = vectors.first().ok_or(EmbedError::EmptyList)?;
    let dim = first.dim();
    let mut sum = vec![0.0; dim];
    for (index, v) in vectors.iter().enumerate() {
        if v.dim() != dim {
            return Err(EmbedError::DimensionMismatch {
                index,
                expected: dim,
                found: v.dim(),
            });
        }
        for (s, x) in sum.iter_mut().zip(v.values()) {
            *s += x;
        }
    }
    let n = vectors.len() as f64;
    Ok(EmbeddingVector(sum.into_iter().map(|s| s / n).collect()))
}

const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over the UTF-8 bytes of `s`.
pub fn fnv1a64(s: &str) -> u64 {
    s.bytes().fold(FNV_OFFSET_BASIS, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HashedVector {
    pub vector: EmbeddingVector,
    /// True when the accumulated vector was all zeros (no tokens, or the
    /// signed contributions cancelled exactly).
    pub degenerate: bool,
}

/// Signed feature hashing: token `t` adds ±1 at `fnv1a64(t) % dim`, the sign
/// being negative when bit 63 of the hash is set. The sum is L2-normalized.
pub fn hash_embed(tokens: &TokenList, dim: usize) -> Result<HashedVector, EmbedError> {
    if dim < MIN_HASH_DIM {
        return Err(EmbedError::DimTooSmall(dim));
    }
    let mut acc = vec![0.0f64; dim];
    for token in tokens.iter() {
        let h = fnv1a64(token);
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        acc[(h % dim as u64) as usize] += sign;
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(HashedVector {
            vector: EmbeddingVector(acc),
            degenerate: true,
        });
    }
    acc.iter_mut().for_each(|v| *v /= norm);
    Ok(HashedVector {
        vector: EmbeddingVector(acc),
        degenerate: false,
    })
}

/// Deterministic built-in provider: tokenize, then [`hash_embed`].
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    options: PreprocessOptions,
}

impl HashEmbedder {
    pub fn new(dim: usize, options: PreprocessOptions) -> Result<Self, EmbedError> {
        if dim < MIN_HASH_DIM {
            return Err(EmbedError::DimTooSmall(dim));
        }
        Ok(Self { dim, options })
    }

    pub fn embed_one(&self, text: &str) -> HashedVector {
        hash_embed(&tokenize(text, &self.options), self.dim).expect("dim validated in new")
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn name(&self) -> &str {
        "hash-fnv1a"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        Ok(texts.iter().map(|t| self.embed_one(t).vector).collect())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

/// Client for an HTTP embedding service.
///
/// Sends `POST {base_url}/embed` with `{"texts": [...]}` and expects
/// `{"dim": n, "vectors": [[...], ...]}` in request order.
#[derive(Debug, Clone)]
pub struct RemoteProvider {
    name: String,
    endpoint: String,
    dim: usize,
    batch_size: usize,
    agent: ureq::Agent,
}

impl RemoteProvider {
    pub fn new(base_url: &str, dim: usize, timeout: Duration, batch_size: usize) -> Self {
        let trimmed = base_url.trim_end_matches('/');
        let endpoint = if trimmed.ends_with("/embed") {
            trimmed.to_string()
        } else {
            format!("{trimmed}/embed")
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            name: format!("remote:{endpoint}"),
            endpoint,
            dim,
            batch_size: batch_size.max(1),
            agent,
        }
    }

    fn request(&self, texts: &[String], offset: usize) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let fail = |message: String| EmbedError::Provider {
            provider: self.name.clone(),
            index: offset,
            message,
        };
        let body = EmbedRequest {
            texts: texts.to_vec(),
        };
        let response: EmbedResponse = self
            .agent
            .post(&self.endpoint)
            .send_json(&body)
            .map_err(|e| fail(e.to_string()))?
            .body_mut()
            .read_json()
            .map_err(|e| fail(format!("invalid response body: {e}")))?;
        if response.dim != self.dim {
            return Err(EmbedError::DimensionMismatch {
                index: offset,
                expected: self.dim,
                found: response.dim,
            });
        }
        if response.vectors.len() != texts.len() {
            return Err(fail(format!(
                "returned {} vectors for {} texts",
                response.vectors.len(),
                texts.len()
            )));
        }
        response
            .vectors
            .into_iter()
            .enumerate()
            .map(|(i, values)| {
                let index = offset + i;
                if values.len() != self.dim {
                    return Err(EmbedError::DimensionMismatch {
                        index,
                        expected: self.dim,
                        found: values.len(),
                    });
                }
                EmbeddingVector::new(values).map_err(|_| EmbedError::NonFinite { index })
            })
            .collect()
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let mut out = Vec::with_capacity(texts.len());
        for (chunk_no, chunk) in texts.chunks(self.batch_size).enumerate() {
            out.extend(self.request(chunk, chunk_no * self.batch_size)?);
        }
        Ok(out)
    }
}
