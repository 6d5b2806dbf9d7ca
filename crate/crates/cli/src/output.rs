//! Staged outputs, committed atomically together with a run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cumbia_core::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a command and check that it reproduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name, replayable as-is.
    pub args: Vec<String>,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub input: Option<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub warnings: Vec<String>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = read_file(path)?;
        serde_json::from_slice(&text)
            .map_err(|e| Error::Input(format!("{} is not a run manifest: {e}", path.display())))
    }
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Files produced by one command, held in memory until the run succeeds.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
    pub warnings: Vec<String>,
}

impl Outputs {
    pub fn add(&mut self, path: &Path, bytes: Vec<u8>) -> Result<()> {
        if self.files.iter().any(|(p, _)| p == path) {
            return Err(Error::Parameter(format!(
                "{} is named as more than one output",
                path.display()
            )));
        }
        self.files.push((path.to_path_buf(), bytes));
        Ok(())
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    /// Refuses to overwrite `input`, then writes every file and the manifest
    /// next to `primary`, each through a temporary file and a rename.
    pub fn commit(
        mut self,
        primary: &Path,
        input: Option<&Path>,
        mut manifest: Manifest,
    ) -> Result<()> {
        if let Some(input) = input {
            for (path, _) in &self.files {
                if same_file(path, input) {
                    return Err(Error::Input(format!(
                        "output {} would overwrite the input",
                        path.display()
                    )));
                }
            }
        }
        manifest.outputs = self
            .files
            .iter()
            .map(|(p, bytes)| FileDigest {
                path: p.display().to_string(),
                sha256: sha256_hex(bytes),
            })
            .collect();
        manifest.warnings = std::mem::take(&mut self.warnings);
        let mut json = serde_json::to_vec_pretty(&manifest)
            .map_err(|e| Error::Invariant(format!("manifest serialization failed: {e}")))?;
        json.push(b'\n');
        self.files.push((manifest_path(primary), json));
        for (path, bytes) in &self.files {
            write_atomic(path, bytes)?;
        }
        Ok(())
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
