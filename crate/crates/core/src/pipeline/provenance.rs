use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util;

/// Sidecar written next to every artifact as `<name>.prov.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub artifact: String,
    pub stage: String,
    pub sha256: String,
    /// Input file → sha256.
    pub inputs: BTreeMap<String, String>,
    pub seed: u64,
    pub settings: serde_json::Value,
    pub generator: String,
    /// Seconds since the Unix epoch; the only field that differs between
    /// otherwise identical runs.
    pub created_unix: u64,
}

pub fn sidecar_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".prov.json");
    artifact.with_file_name(name)
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(util::sha256_hex(&bytes))
}

pub(crate) fn write_sidecar(
    artifact: &Path,
    stage: &str,
    inputs: &[PathBuf],
    seed: u64,
    settings: serde_json::Value,
) -> Result<Provenance> {
    let mut hashes = BTreeMap::new();
    for p in inputs {
        hashes.insert(p.display().to_string(), file_sha256(p)?);
    }
    let prov = Provenance {
        artifact: artifact.file_name().unwrap_or_default().to_string_lossy().into_owned(),
        stage: stage.into(),
        sha256: file_sha256(artifact)?,
        inputs: hashes,
        seed,
        settings,
        generator: concat!("t2br-core ", env!("CARGO_PKG_VERSION")).into(),
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    util::write_json(&sidecar_path(artifact), &prov)?;
    Ok(prov)
}

pub fn read_sidecar(artifact: &Path) -> Result<Provenance> {
    util::read_json(&sidecar_path(artifact))
}
