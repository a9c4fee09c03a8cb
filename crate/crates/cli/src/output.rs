//! Atomic artifact writes and the run manifest.

use crate::config::ExperimentConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct OutputDir(PathBuf);

impl OutputDir {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(path)?;
        Ok(Self(path.to_path_buf()))
    }

    /// Writes via a temporary sibling and a rename.
    pub fn write_atomic(&self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let target = self.0.join(name);
        let tmp = self.0.join(format!(".{name}.tmp"));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(tmp, target)
    }
}

pub struct Artifact {
    pub file: String,
    pub operation: &'static str,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(file: &str, operation: &'static str, bytes: Vec<u8>) -> Self {
        Self { file: file.into(), operation, bytes }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub operation: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub tolerances: crate::config::Tolerances,
    pub outputs: Vec<ManifestEntry>,
    pub outcome: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Manifest {
    pub fn new(command: &str, config_text: &str, cfg: &ExperimentConfig) -> Self {
        Self {
            schema: crate::run::SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            seed: cfg.seed,
            tolerances: cfg.tolerances.clone(),
            outputs: Vec::new(),
            outcome: String::new(),
        }
    }

    pub fn record(&mut self, a: &Artifact) {
        self.outputs.push(ManifestEntry { file: a.file.clone(), operation: a.operation.into(), sha256: sha256_hex(&a.bytes) });
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serialises");
        s.push('\n');
        s.into_bytes()
    }
}
