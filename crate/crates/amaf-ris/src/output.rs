//! Atomic output staging and the run manifest.
//!
//! Commands build every artifact in memory first, then commit the whole
//! set: each file goes to `<name>.tmp` and is renamed into place, the
//! manifest (hashing every emitted file) is written last, and a failure
//! mid-commit removes whatever was already placed so no partial output
//! survives.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::error::Result;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub millis: u128,
}

/// Provenance record written as `manifest.json` next to the outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub config_snapshot: String,
    pub input_files: Vec<FileHash>,
    pub output_files: Vec<FileHash>,
    pub timings: Vec<StageTiming>,
}

/// In-memory set of pending output files.
pub struct OutputSet {
    out_dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new(out_dir: &Path) -> Self {
        OutputSet {
            out_dir: out_dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn file_hashes(&self) -> Vec<FileHash> {
        self.files
            .iter()
            .map(|(name, bytes)| FileHash {
                path: name.clone(),
                sha256: sha256_hex(bytes),
            })
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Writes all staged files plus the manifest; cleans up on failure.
    pub fn commit(mut self, mut manifest: RunManifest) -> Result<Vec<PathBuf>> {
        manifest.output_files = self.file_hashes();
        let manifest_bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        self.files.push(("manifest.json".to_string(), manifest_bytes));

        std::fs::create_dir_all(&self.out_dir)?;
        let mut placed: Vec<PathBuf> = Vec::new();
        for (name, bytes) in &self.files {
            let final_path = self.out_dir.join(name);
            let tmp_path = self.out_dir.join(format!("{name}.tmp"));
            let write_result = std::fs::write(&tmp_path, bytes)
                .and_then(|_| std::fs::rename(&tmp_path, &final_path));
            if let Err(e) = write_result {
                let _ = std::fs::remove_file(&tmp_path);
                for p in &placed {
                    let _ = std::fs::remove_file(p);
                }
                return Err(e.into());
            }
            placed.push(final_path);
        }
        Ok(placed)
    }
}
