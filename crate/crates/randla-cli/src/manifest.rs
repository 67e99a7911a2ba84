//! Run manifests: enough context to reproduce a run bit-for-bit. Timestamps
//! live here, never in result bodies, so bodies stay byte-comparable.

use randla::config::Tunables;
use randla::SeedSpec;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub seed: SeedSpec,
    pub input_digests: Vec<InputDigest>,
    pub config: Tunables,
    pub tool_version: String,
    /// Seconds since the epoch; excluded from result bodies by design.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command_line: &[String], seed: SeedSpec, inputs: &[PathBuf]) -> std::io::Result<Self> {
        let mut input_digests = Vec::new();
        for p in inputs {
            let bytes = std::fs::read(p)?;
            let mut hasher = Sha256::new();
            hasher.update(&bytes);
            input_digests.push(InputDigest {
                path: p.display().to_string(),
                sha256: format!("{:x}", hasher.finalize()),
            });
        }
        Ok(RunManifest {
            command_line: command_line.to_vec(),
            seed,
            input_digests,
            config: randla::config::tunables().clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        })
    }

    /// Write next to `primary_output` as `<primary_output>.manifest.json`.
    pub fn write_sidecar(&self, primary_output: &Path) -> std::io::Result<()> {
        let mut path = primary_output.as_os_str().to_owned();
        path.push(".manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(PathBuf::from(path), text)
    }
}
