//! Paths into the golden corpus under `data/golden`.

use std::path::{Path, PathBuf};

use t2br_core::pipeline::PipelineConfig;

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/golden")
}

/// The golden pipeline config with its output redirected to `out`.
pub fn golden_config(out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::load(&golden_dir().join("pipeline.toml")).unwrap();
    cfg.out_dir = out.to_path_buf();
    cfg
}

pub fn gold_doi(n: usize) -> String {
    format!("10.5555/t2br-gold.{n:02}")
}
