use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("writing {}", path.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("outputs serialize");
    bytes.push(b'\n');
    bytes
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub tool_version: String,
    pub command: String,
    pub config_digest: String,
    /// Command options that shape the outputs.
    pub options: serde_json::Value,
    pub seeds: Vec<u64>,
    pub files: Vec<ManifestFile>,
}

/// Collects the files a command writes and finishes with its manifest.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<ManifestFile>,
}

impl OutputDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            files: Vec::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<PathBuf> {
        let path = self.root.join(name);
        write_atomic(&path, bytes)?;
        self.files.push(ManifestFile {
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        self.write(name, &to_json_bytes(value))
    }

    /// Writes `<command>.manifest.json` listing every file written so far.
    pub fn finish(
        mut self,
        command: &str,
        config_digest: &str,
        options: serde_json::Value,
        seeds: &[u64],
    ) -> anyhow::Result<PathBuf> {
        let manifest = ExperimentManifest {
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            config_digest: config_digest.to_string(),
            options,
            seeds: seeds.to_vec(),
            files: std::mem::take(&mut self.files),
        };
        let path = self.root.join(format!("{command}.manifest.json"));
        write_atomic(&path, &to_json_bytes(&manifest))?;
        Ok(path)
    }
}
