use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

/// Record of one CLI run. A run directory without a manifest is incomplete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub started: String,
    pub finished: String,
    /// Per-block sampler counters or forecast bookkeeping.
    pub notes: serde_json::Value,
    /// Relative paths of the files produced, sorted.
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config,
            started: now(),
            finished: String::new(),
            notes: serde_json::Value::Null,
            files: Vec::new(),
        }
    }

    /// Stamps the end time and writes the manifest atomically.
    pub fn finish(mut self, dir: &Path) -> Result<Self> {
        self.finished = now();
        self.files.sort();
        let text = serde_json::to_string_pretty(&self)?;
        regimecast::io::write_atomic(&dir.join(crate::rundir::MANIFEST_FILE), text.as_bytes())?;
        Ok(self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Copy with both timestamps cleared, for run-to-run comparison.
    pub fn without_timestamps(&self) -> Self {
        Self { started: String::new(), finished: String::new(), ..self.clone() }
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}
