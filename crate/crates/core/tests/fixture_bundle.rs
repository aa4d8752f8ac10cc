mod common;

use conceptlens::corpus::{filter_by_min_reviews, load_corpus, InputFormat};
use conceptlens::fixture::{generate, write_fixture};
use std::num::NonZeroUsize;

/// Settings the bundled corpus was generated with.
const RECORDS: usize = 2000;
const PRODUCTS: usize = 40;
const SEED: u64 = 7;

#[test]
fn bundled_corpus_regenerates_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reviews.csv");
    write_fixture(&path, &generate(RECORDS, PRODUCTS, SEED), InputFormat::Csv).unwrap();
    assert!(std::fs::read(&path).unwrap() == std::fs::read(common::fixture_path()).unwrap());
}

#[test]
fn bundled_corpus_loads_every_line() {
    let text = std::fs::read_to_string(common::fixture_path()).unwrap();
    // texts carry no quotes or newlines, so one line per record plus header
    assert!(!text.contains('"'));
    let lines = text.lines().count() - 1;
    let corpus = load_corpus(&common::fixture_path(), InputFormat::Csv).unwrap();
    assert_eq!(corpus.len(), lines);
    assert_eq!(lines, RECORDS);
    let kept = filter_by_min_reviews(&corpus, NonZeroUsize::new(50).unwrap());
    assert_eq!(kept.len(), RECORDS);
    assert_eq!(kept.product_counts().len(), PRODUCTS);
}

#[test]
fn jsonl_fixture_matches_csv_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("reviews.jsonl");
    write_fixture(&path, &generate(RECORDS, PRODUCTS, SEED), InputFormat::Jsonl).unwrap();
    let jsonl = load_corpus(&path, InputFormat::Jsonl).unwrap();
    let csv = load_corpus(&common::fixture_path(), InputFormat::Csv).unwrap();
    assert_eq!(jsonl.records(), csv.records());
}
