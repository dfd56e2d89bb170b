//! Run manifests: resolved config, master seed, artifact hashes, timestamps,
//! tool version.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::fnv1a64;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub git_describe: String,
    pub created_unix: u64,
    pub master_seed: u64,
    /// Fully-resolved config document.
    pub config: String,
    /// Relative path → "fnv1a64:<hex>".
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(master_seed: u64, config: &str) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            git_describe: git_describe(),
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            master_seed,
            config: config.to_string(),
            artifacts: BTreeMap::new(),
        }
    }

    pub fn hash_of(contents: &[u8]) -> String {
        format!("fnv1a64:{:016x}", fnv1a64(contents))
    }

    /// Registers a file (relative to the manifest's directory).
    pub fn add_artifact(&mut self, dir: &Path, rel: &str) -> Result<()> {
        let bytes = std::fs::read(dir.join(rel))
            .map_err(|e| Error::Artifact(format!("cannot hash artifact '{rel}': {e}")))?;
        self.artifacts.insert(rel.to_string(), Self::hash_of(&bytes));
        Ok(())
    }

    /// Verifies every registered artifact against its recorded hash.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for (rel, expect) in &self.artifacts {
            let bytes = std::fs::read(dir.join(rel))
                .map_err(|e| Error::Artifact(format!("missing artifact '{rel}': {e}")))?;
            let actual = Self::hash_of(&bytes);
            if &actual != expect {
                return Err(Error::Artifact(format!(
                    "artifact '{rel}' hash mismatch: recorded {expect}, found {actual}"
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("run_manifest.json");
        super::write_atomic(&path, &serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("run_manifest.json");
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Artifact(format!("cannot read {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}
