//! Run manifests and artifact bookkeeping.
//!
//! Every subcommand writes its outputs through an [`Artifacts`] set and
//! finishes with a manifest recording the toolkit version, the exact
//! parameters, and SHA-256 digests of all inputs and outputs. Re-running
//! the recorded subcommand with the recorded parameters reproduces every
//! artifact byte-for-byte; failed runs remove whatever they had written.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(digest.len() * 2);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub toolkit: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

/// Collects artifacts written by one subcommand run.
pub struct Artifacts {
    out_dir: PathBuf,
    written: Vec<(PathBuf, String)>, // (path, digest)
    inputs: Vec<FileDigest>,
}

impl Artifacts {
    pub fn new(out_dir: &Path) -> Result<Self> {
        fs::create_dir_all(out_dir)
            .with_context(|| format!("creating output directory {}", out_dir.display()))?;
        Ok(Artifacts {
            out_dir: out_dir.to_path_buf(),
            written: Vec::new(),
            inputs: Vec::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    /// Record an input file and its digest in the manifest.
    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    /// Write one artifact atomically (temp file then rename).
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        let tmp = self.out_dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, &path).with_context(|| format!("renaming into {}", path.display()))?;
        self.written.push((path.clone(), sha256_hex(bytes)));
        Ok(path)
    }

    /// Remove everything written so far (failure path).
    pub fn discard(&mut self) {
        for (path, _) in self.written.drain(..) {
            let _ = fs::remove_file(path);
        }
    }

    /// Write the manifest for a finished run; `stem` names the file
    /// (`<stem>.manifest.json`) so runs over different models or kinds
    /// coexist in one output directory.
    pub fn finish(
        mut self,
        subcommand: &str,
        stem: &str,
        parameters: BTreeMap<String, String>,
        seed: Option<u64>,
    ) -> Result<PathBuf> {
        let manifest = Manifest {
            toolkit: "semlm",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            parameters,
            seed,
            inputs: std::mem::take(&mut self.inputs),
            outputs: self
                .written
                .iter()
                .map(|(path, sha256)| FileDigest {
                    path: path.display().to_string(),
                    sha256: sha256.clone(),
                })
                .collect(),
        };
        let name = format!("{stem}.manifest.json");
        let mut body = serde_json::to_string_pretty(&manifest)?;
        body.push('\n');
        let path = self.out_dir.join(&name);
        fs::write(&path, body)?;
        Ok(path)
    }
}
