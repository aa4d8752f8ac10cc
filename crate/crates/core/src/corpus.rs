//! Review corpus ingestion, product-level filtering and tokenization.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

/// Minimum number of reviews a product needs to stay in the corpus by default.
pub const DEFAULT_MIN_REVIEWS: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot open corpus file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed row {row}: {message}")]
    MalformedRow { row: usize, message: String },
    #[error("duplicate review_id {0:?}")]
    DuplicateId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Csv,
    Jsonl,
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(InputFormat::Csv),
            "jsonl" => Ok(InputFormat::Jsonl),
            other => Err(format!("unknown input format {other:?} (expected csv or jsonl)")),
        }
    }
}

impl fmt::Display for InputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputFormat::Csv => "csv",
            InputFormat::Jsonl => "jsonl",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub review_id: String,
    pub product_id: String,
    pub text: String,
}

/// Where a corpus came from and which filters shaped it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: PathBuf,
    pub format: InputFormat,
    pub filters: Vec<FilterStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStep {
    pub min_reviews: usize,
    pub records_before: usize,
    pub records_after: usize,
}

/// An immutable, validated collection of reviews.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    records: Vec<ReviewRecord>,
    product_counts: BTreeMap<String, usize>,
    provenance: Provenance,
}

impl Corpus {
    /// Builds a corpus from records, enforcing unique ids and non-blank text.
    pub fn from_records(
        records: Vec<ReviewRecord>,
        provenance: Provenance,
    ) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            validate_record(r, i + 1)?;
            if !seen.insert(r.review_id.as_str()) {
                return Err(CorpusError::DuplicateId(r.review_id.clone()));
            }
        }
        let product_counts = count_products(&records);
        Ok(Self {
            records,
            product_counts,
            provenance,
        })
    }

    pub fn records(&self) -> &[ReviewRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn product_counts(&self) -> &BTreeMap<String, usize> {
        &self.product_counts
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn texts(&self) -> Vec<String> {
        self.records.iter().map(|r| r.text.clone()).collect()
    }
}

fn validate_record(r: &ReviewRecord, row: usize) -> Result<(), CorpusError> {
    let malformed = |message: &str| CorpusError::MalformedRow {
        row,
        message: message.to_string(),
    };
    if r.review_id.is_empty() {
        return Err(malformed("empty review_id"));
    }
    if r.product_id.is_empty() {
        return Err(malformed("empty product_id"));
    }
    if r.text.trim().is_empty() {
        return Err(malformed("text is blank"));
    }
    Ok(())
}

fn count_products(records: &[ReviewRecord]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for r in records {
        *counts.entry(r.product_id.clone()).or_insert(0) += 1;
    }
    counts
}

/// Loads a corpus from CSV (header row required) or JSONL.
///
/// Row numbers in errors are 1-based and count data rows for CSV, file lines
/// for JSONL.
pub fn load_corpus(path: &Path, format: InputFormat) -> Result<Corpus, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let records = match format {
        InputFormat::Csv => read_csv(file)?,
        InputFormat::Jsonl => read_jsonl(file)?,
    };
    Corpus::from_records(
        records,
        Provenance {
            source: path.to_path_buf(),
            format,
            filters: Vec::new(),
        },
    )
}

fn read_csv(file: File) -> Result<Vec<ReviewRecord>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(file));
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::MalformedRow {
            row: 0,
            message: format!("unreadable header: {e}"),
        })?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CorpusError::MalformedRow {
                row: 0,
                message: format!("header is missing required column {name:?}"),
            })
    };
    let (id_col, product_col, text_col) = (column("review_id")?, column("product_id")?, column("text")?);

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| CorpusError::MalformedRow {
            row: row_no,
            message: e.to_string(),
        })?;
        let field = |col: usize, name: &str| {
            row.get(col)
                .map(str::to_string)
                .ok_or_else(|| CorpusError::MalformedRow {
                    row: row_no,
                    message: format!("missing field {name:?}"),
                })
        };
        let record = ReviewRecord {
            review_id: field(id_col, "review_id")?,
            product_id: field(product_col, "product_id")?,
            text: field(text_col, "text")?,
        };
        validate_record(&record, row_no)?;
        records.push(record);
    }
    Ok(records)
}

#[derive(Deserialize)]
struct JsonRecord {
    review_id: String,
    product_id: String,
    text: String,
}

fn read_jsonl(file: File) -> Result<Vec<ReviewRecord>, CorpusError> {
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let row_no = i + 1;
        let line = line.map_err(|e| CorpusError::MalformedRow {
            row: row_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: JsonRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRow {
                row: row_no,
                message: e.to_string(),
            })?;
        let record = ReviewRecord {
            review_id: parsed.review_id,
            product_id: parsed.product_id,
            text: parsed.text,
        };
        validate_record(&record, row_no)?;
        records.push(record);
    }
    Ok(records)
}

/// Keeps only records whose product has at least `min_count` reviews.
pub fn filter_by_min_reviews(corpus: &Corpus, min_count: NonZeroUsize) -> Corpus {
    let min = min_count.get();
    let records: Vec<ReviewRecord> = corpus
        .records
        .iter()
        .filter(|r| corpus.product_counts[&r.product_id] >= min)
        .cloned()
        .collect();
    let mut provenance = corpus.provenance.clone();
    provenance.filters.push(FilterStep {
        min_reviews: min,
        records_before: corpus.len(),
        records_after: records.len(),
    });
    Corpus {
        product_counts: count_products(&records),
        records,
        provenance,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessOptions {
    /// Tokens with fewer characters than this are dropped.
    pub min_token_len: usize,
    #[serde(default)]
    pub stopwords: Option<Vec<String>>,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            min_token_len: 2,
            stopwords: None,
        }
    }
}

/// Lowercase tokens of one text, in order of appearance.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenList(Vec<String>);

impl TokenList {
    pub fn new(tokens: Vec<String>) -> Self {
        debug_assert!(tokens.iter().all(|t| !t.is_empty()));
        Self(tokens)
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

/// NFC-normalize, lowercase and split on anything that is not alphanumeric.
///
/// Codepoints that are still uppercase after lowercasing (symbols with no
/// lowercase mapping) act as separators.
pub fn tokenize(text: &str, options: &PreprocessOptions) -> TokenList {
    let lowered: String = text.nfc().collect::<String>().to_lowercase();
    let lowered: String = lowered.nfc().collect();
    let stop: Option<HashSet<&str>> = options
        .stopwords
        .as_ref()
        .map(|words| words.iter().map(String::as_str).collect());
    let tokens = lowered
        .split(|c: char| !c.is_alphanumeric() || c.is_uppercase())
        .filter(|t| !t.is_empty() && t.chars().count() >= options.min_token_len)
        .filter(|t| stop.as_ref().is_none_or(|s| !s.contains(t)))
        .map(str::to_string)
        .collect();
    TokenList(tokens)
}

/// A small English stopword list for optional use.
pub fn english_stopwords() -> Vec<String> {
    const WORDS: &[&str] = &[
        "a", "about", "after", "all", "also", "am", "an", "and", "any", "are", "as", "at", "be",
        "because", "been", "but", "by", "can", "could", "did", "do", "does", "for", "from", "had",
        "has", "have", "he", "her", "his", "how", "i", "if", "in", "into", "is", "it", "its",
        "just", "me", "more", "my", "no", "not", "of", "on", "or", "our", "so", "some", "than",
        "that", "the", "their", "them", "then", "there", "these", "they", "this", "to", "too",
        "very", "was", "we", "were", "what", "when", "which", "while", "who", "will", "with",
        "would", "you", "your",
    ];
    WORDS.iter().map(|w| w.to_string()).collect()
}
