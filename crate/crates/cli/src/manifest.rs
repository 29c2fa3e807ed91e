use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use prumidas::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Record of one command invocation: enough to rebuild every output from
/// the same inputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started: DateTime<Utc>,
    pub finished: Option<DateTime<Utc>>,
    pub version: String,
}

pub fn digest(path: &Path) -> Result<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

pub fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

impl RunManifest {
    pub fn start(command: &str) -> Self {
        RunManifest {
            command: command.into(),
            arguments: std::env::args().skip(1).collect(),
            config_hash: None,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Utc::now(),
            finished: None,
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(digest(path)?);
        Ok(())
    }

    /// Records an output file. If it has a JSON sidecar (`<file>.json` or,
    /// for draw tables, `<stem>.json`), the sidecar gets a `manifest` field
    /// naming `manifest_name`.
    pub fn output(&mut self, path: &Path, manifest_name: &str) -> Result<()> {
        let mut side = path.as_os_str().to_owned();
        side.push(".json");
        let candidates = [PathBuf::from(side), path.with_extension("json")];
        if path.extension().is_some_and(|e| e == "csv") {
            if let Some(side) = candidates.iter().find(|p| p.is_file()) {
                link_sidecar(side, manifest_name)?;
                self.outputs.push(digest(side)?);
            }
        }
        self.outputs.push(digest(path)?);
        Ok(())
    }

    /// Writes the manifest through a temporary file and a rename, so a
    /// crashed run never leaves a half-written manifest.
    pub fn finish(mut self, path: &Path) -> Result<()> {
        self.finished = Some(Utc::now());
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_string_pretty(&self)?).map_err(|e| io_err(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
    }
}

fn link_sidecar(path: &Path, manifest_name: &str) -> Result<()> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut v: serde_json::Value = serde_json::from_str(&text)?;
    if let Some(obj) = v.as_object_mut() {
        obj.insert("manifest".into(), manifest_name.into());
        std::fs::write(path, serde_json::to_string_pretty(&v)?).map_err(|e| io_err(path, e))?;
    }
    Ok(())
}
