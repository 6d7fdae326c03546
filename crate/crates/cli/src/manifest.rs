//! The run manifest: resolved configuration, derived seeds, and per-stage
//! content hashes of every input and output.
//!
//! A stage is skipped when its fingerprint (parameters plus input hashes)
//! matches the recorded one and every recorded output is still on disk with
//! the recorded hash.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub fingerprint: String,
    pub params: BTreeMap<String, String>,
    /// Input name to content hash.
    pub inputs: BTreeMap<String, String>,
    /// Output file (relative to the output directory) to content hash.
    pub outputs: BTreeMap<String, String>,
    /// Stage-specific facts worth echoing, such as `q` or `sigma`.
    pub info: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub master_seed: u64,
    pub seeds: BTreeMap<String, u64>,
    pub config: BTreeMap<String, String>,
    pub stages: BTreeMap<String, StageRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| stc_core::Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Hash over a stage name, its parameters and its input hashes.
pub fn fingerprint(
    stage: &str,
    params: &BTreeMap<String, String>,
    inputs: &BTreeMap<String, String>,
) -> String {
    let mut h = Sha256::new();
    h.update(stage.as_bytes());
    for (section, map) in [("params", params), ("inputs", inputs)] {
        h.update([0u8]);
        h.update(section.as_bytes());
        for (k, v) in map {
            h.update([1u8]);
            h.update(k.as_bytes());
            h.update([2u8]);
            h.update(v.as_bytes());
        }
    }
    hex::encode(h.finalize())
}

impl Manifest {
    pub fn path(out: &Path) -> PathBuf {
        out.join(MANIFEST_FILE)
    }

    /// Loads the manifest in `out`, or an empty one if there is none yet.
    pub fn load_or_default(out: &Path) -> Result<Self> {
        let path = Self::path(out);
        if !path.exists() {
            return Ok(Self::default());
        }
        let text = std::fs::read_to_string(&path).map_err(|e| stc_core::Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Manifest {
            path: path.display().to_string(),
            msg: e.to_string(),
        })
    }

    pub fn save(&self, out: &Path) -> Result<()> {
        let path = Self::path(out);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| stc_core::Error::io(&path, e).into())
    }

    /// True if `stage` was recorded with `fingerprint` and all of its outputs
    /// are unchanged on disk.
    pub fn is_current(&self, out: &Path, stage: &str, fingerprint: &str) -> bool {
        let Some(rec) = self.stages.get(stage) else {
            return false;
        };
        rec.fingerprint == fingerprint
            && !rec.outputs.is_empty()
            && rec
                .outputs
                .iter()
                .all(|(file, hash)| hash_file(&out.join(file)).is_ok_and(|h| &h == hash))
    }
}
