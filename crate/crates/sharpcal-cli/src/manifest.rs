//! Run manifests: the provenance block embedded in every report.
//!
//! A manifest records what was run (the literal command line and tool
//! version), over which inputs (content digests, not just paths), with
//! which seeds and tolerances.  Reports are deterministic given the
//! manifest's inputs and seeds; only the timestamp varies between
//! identical reruns, which is why it lives here and not in the results.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::failure::Failure;

/// One input file, identified by path and content hash.
#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: &Path, bytes: &[u8]) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        let digest = hasher.finalize();
        let mut sha256 = String::with_capacity(64);
        for byte in digest {
            sha256.push_str(&format!("{byte:02x}"));
        }
        Self {
            path: path.display().to_string(),
            sha256,
        }
    }
}

/// Read an input file, returning its bytes together with the digest that
/// will identify it in the manifest.
pub fn read_input(path: &Path) -> Result<(Vec<u8>, InputDigest), Failure> {
    let bytes = std::fs::read(path)
        .map_err(|e| Failure::new(2, format!("cannot read {}: {e}", path.display())))?;
    let digest = InputDigest::of(path, &bytes);
    Ok((bytes, digest))
}

/// Provenance block for one command invocation.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    /// The literal invocation, argv[0] normalized to the tool name.
    pub command: String,
    pub tool_version: String,
    pub inputs: Vec<InputDigest>,
    /// Seeds of every random stream the run consumed (empty when
    /// deterministic).
    pub seeds: Vec<u64>,
    /// Numeric knobs in effect: grid sizes, tolerances and their origin.
    pub tolerances: serde_json::Value,
    /// RFC 3339 wall-clock time; informational only, never part of the
    /// results section.
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(
        command: &str,
        inputs: Vec<InputDigest>,
        seeds: Vec<u64>,
        tolerances: serde_json::Value,
    ) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs,
            seeds,
            tolerances,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}
