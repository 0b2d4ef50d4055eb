use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Record of one command invocation, written next to its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub library_version: String,
    pub seed: u64,
    pub threads: usize,
    pub config: serde_json::Value,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub timings: Vec<StageTiming>,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Collects inputs, outputs and stage timings while a command runs.
pub struct Recorder {
    manifest: RunManifest,
    out_dir: PathBuf,
    stage_start: Instant,
}

impl Recorder {
    pub fn new(command: &str, out_dir: &Path, seed: u64, config: serde_json::Value) -> Self {
        Self {
            manifest: RunManifest {
                command: command.to_owned(),
                library_version: qbvine::VERSION.to_owned(),
                seed,
                threads: rayon::current_num_threads(),
                config,
                inputs: Vec::new(),
                outputs: Vec::new(),
                timings: Vec::new(),
            },
            out_dir: out_dir.to_owned(),
            stage_start: Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        let sha256 = sha256_file(path)?;
        self.manifest.inputs.push(FileRecord { path: path.to_owned(), sha256 });
        Ok(())
    }

    /// Closes the current stage and starts the next one.
    pub fn stage(&mut self, name: &str) {
        let now = Instant::now();
        self.manifest.timings.push(StageTiming {
            stage: name.to_owned(),
            seconds: now.duration_since(self.stage_start).as_secs_f64(),
        });
        self.stage_start = now;
    }

    /// Path of an output file inside the output directory.
    pub fn output_path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<PathBuf> {
        let path = self.output_path(name);
        fs::write(&path, text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        self.record_output(&path)?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::data(e.to_string()))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn record_output(&mut self, path: &Path) -> CliResult<()> {
        let sha256 = sha256_file(path)?;
        self.manifest.outputs.push(FileRecord { path: path.to_owned(), sha256 });
        Ok(())
    }

    pub fn finish(self) -> CliResult<RunManifest> {
        let path = self.out_dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&self.manifest).map_err(|e| CliError::data(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        Ok(self.manifest)
    }
}
