//! Provenance manifests: command, full parameter set, seed, version, and
//! input digests. Payloads are pure functions of their manifest, so equal
//! manifests (timestamp aside) mean bit-identical numeric outputs.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Every flag that shaped the payload, defaults included.
    pub parameters: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    /// Unix seconds at emission; the only field excluded from manifest
    /// equality.
    pub timestamp: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl RunManifest {
    pub fn new(command: &str, parameters: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            command: command.to_owned(),
            parameters,
            seed,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            inputs: Vec::new(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn record_input(&mut self, path: &Path, bytes: &[u8]) {
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: format!("{:x}", hasher.finalize()),
        });
    }
}

/// Reads a UTF-8 input file and records its digest on the manifest.
pub fn read_input(path: &Path, manifest: &mut RunManifest) -> Result<String, Failure> {
    let bytes = fs::read(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    manifest.record_input(path, &bytes);
    String::from_utf8(bytes)
        .map_err(|_| Failure::Input(format!("{}: not valid UTF-8", path.display())))
}
