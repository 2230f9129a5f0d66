//! Run manifests: a JSON record written alongside every artifact so a
//! run can be reproduced (bit-identically for the deterministic
//! commands) from the stored command, parameters, seed, and input
//! digests.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full parameter set as given on the command line, flag by flag.
    pub params: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, params: serde_json::Value, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.to_string(),
            params,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> io::Result<()> {
        let bytes = fs::read(path)?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: format!("{:x}", hasher.finalize()),
        });
        Ok(())
    }

    /// Writes one artifact atomically and records it as an output.
    pub fn write_output(&mut self, path: &Path, contents: &str) -> io::Result<()> {
        write_atomic(path, contents.as_bytes())?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    /// Serializes the manifest next to the first output (or under the
    /// given stem when the command wrote nothing else).
    pub fn seal(&self) -> io::Result<PathBuf> {
        let first = self
            .outputs
            .first()
            .cloned()
            .unwrap_or_else(|| format!("{}.out", self.command));
        let path = PathBuf::from(format!("{first}.manifest.json"));
        let body = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(&path, body.as_bytes())?;
        Ok(path)
    }
}

/// Write-then-rename so readers never observe a torn file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp-{}",
            path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default(),
            std::process::id()
        )),
        None => PathBuf::from(format!(".{}.tmp-{}", path.display(), std::process::id())),
    };
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}
