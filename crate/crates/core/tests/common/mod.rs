#![allow(dead_code)]

use std::path::{Path, PathBuf};

use tenk_core::pipeline::{Pipeline, PipelineConfig};

/// Set to rewrite golden files from the current output instead of comparing.
pub const BLESS_VAR: &str = "TENK_BLESS";

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn corpus() -> PathBuf {
    fixtures().join("corpus")
}

pub fn golden(name: &str) -> PathBuf {
    fixtures().join("golden").join(name)
}

/// The committed fixture config with cache and output redirected under `work`.
pub fn fixture_config(work: &Path) -> PipelineConfig {
    let mut config = PipelineConfig::load(&corpus().join("config.json")).expect("fixture config loads");
    config.cache_dir = work.join("cache");
    config.output_dir = work.join("out");
    config
}

pub fn run_all(config: PipelineConfig) -> Pipeline {
    let pipeline = Pipeline::new(config).expect("pipeline");
    pipeline.run_all().expect("full run");
    pipeline
}

pub fn assert_golden(name: &str, actual: &[u8]) {
    let path = golden(name);
    if std::env::var_os(BLESS_VAR).is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    if expected != actual {
        panic!(
            "{} differs from output:\n--- expected\n{}\n--- actual\n{}",
            path.display(),
            String::from_utf8_lossy(&expected),
            String::from_utf8_lossy(actual)
        );
    }
}
