#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use conceptlens::config::PipelineConfig;

pub fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/reviews.csv")
}

/// Default config reading the bundled corpus and writing into `out`.
pub fn fixture_config(out: &Path) -> PipelineConfig {
    let mut config = PipelineConfig::default();
    config.input.path = fixture_path();
    config.output = out.to_path_buf();
    config
}

/// Every regular, non-hidden file in `dir` with its bytes.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_file())
        .map(|e| e.file_name().into_string().unwrap())
        .filter(|n| !n.starts_with('.'))
        .map(|n| {
            let bytes = std::fs::read(dir.join(&n)).unwrap();
            (n, bytes)
        })
        .collect()
}
