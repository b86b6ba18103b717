use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Artifact format version; bump when a file layout changes.
pub const ARTIFACT_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputChecksum {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Provenance of one subcommand run. Timings are the only field that may
/// differ between reruns of the same config and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub crate_version: String,
    /// SHA-256 of the effective config with `workers` and `out` cleared.
    pub config_sha256: String,
    pub seed: u64,
    pub workers: usize,
    pub outputs: Vec<OutputChecksum>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn file_name(command: &str) -> String {
        format!("manifest-{command}.json")
    }

    /// Files whose checksum no longer matches, or that are missing.
    pub fn stale_outputs(&self, dir: &Path) -> Vec<String> {
        self.outputs
            .iter()
            .filter(|o| file_sha256(&dir.join(&o.file)).ok().as_deref() != Some(o.sha256.as_str()))
            .map(|o| o.file.clone())
            .collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}
