//! Output directory bookkeeping and the run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Hash of the subcommand and the resolved configuration; stamped into every plot.
    pub run_hash: String,
    pub resolved_config: String,
    pub files: Vec<FileEntry>,
    pub phases: Vec<Phase>,
}

/// Writes files into one directory and records their hashes.
pub struct Output {
    dir: PathBuf,
    quiet: bool,
    manifest: RunManifest,
}

impl Output {
    pub fn new(dir: &Path, subcommand: &str, resolved_config: String, quiet: bool) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let run_hash = sha256_hex(format!("{subcommand}\n{resolved_config}").as_bytes());
        Ok(Output {
            dir: dir.to_path_buf(),
            quiet,
            manifest: RunManifest {
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                subcommand: subcommand.to_string(),
                run_hash,
                resolved_config,
                files: Vec::new(),
                phases: Vec::new(),
            },
        })
    }

    pub fn run_hash(&self) -> &str {
        &self.manifest.run_hash
    }

    pub fn quiet(&self) -> bool {
        self.quiet
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.manifest.files.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Write an SVG when there is something to draw, otherwise warn.
    pub fn plot(&mut self, name: &str, svg: Option<String>) -> std::io::Result<()> {
        match svg {
            Some(doc) => self.write(name, doc.as_bytes()),
            None => {
                eprintln!("warning: no data to plot, skipping {name}");
                Ok(())
            }
        }
    }

    /// Run `f` and record its wall time under `name`.
    pub fn phase<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let start = Instant::now();
        let out = f(self);
        self.manifest.phases.push(Phase {
            name: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn finish(self) -> std::io::Result<RunManifest> {
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifests serialize");
        std::fs::write(self.dir.join(MANIFEST_FILE), json)?;
        Ok(self.manifest)
    }
}
