//! Experiment driver for `extremal-core`: one JSON config per run, CSV and
//! JSON results, SVG figures, and a manifest of everything written.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod pipelines;
pub mod report;
pub mod svg;

pub use config::{Command, RunConfig};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("records carry different versions: {found:?}")]
    VersionMismatch { found: Vec<String> },
    #[error("i/o: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid(_) | CliError::VersionMismatch { .. } => 2,
            CliError::Io(_) | CliError::Numerical(_) => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

/// Manifest of one run, written as `record.json` next to its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub version: String,
    pub command: Command,
    pub config: RunConfig,
    pub config_digest: String,
    pub wall_time_s: f64,
    /// `ok` or `failed`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub files: Vec<FileEntry>,
    /// Command-specific summary, the same object as the main JSON report.
    pub results: serde_json::Value,
}

impl ExperimentRecord {
    pub fn exit_code(&self) -> i32 {
        if self.status == "ok" {
            0
        } else {
            1
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::ConfigInvalid(format!("cannot read record {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::ConfigInvalid(format!("bad record {}: {e}", path.display())))
    }
}

/// Writes files into the output directory and remembers their digests.
pub struct Output {
    dir: PathBuf,
    files: Vec<FileEntry>,
    pub digest: String,
}

impl Output {
    fn new(dir: &Path, digest: String) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Output { dir: dir.to_path_buf(), files: Vec::new(), digest })
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.files.retain(|f| f.path != name);
        self.files
            .push(FileEntry { path: name.to_string(), sha256: config::hex(&Sha256::digest(contents.as_bytes())) });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        s.push('\n');
        self.text(name, &s)
    }
}

/// Where outputs go: `EXTREMAL_LAB_OUT`, then `--out`, then the config's
/// `out` (relative to the config file), then `out/<command>`.
pub fn resolve_out(
    env: Option<&str>,
    flag: Option<&Path>,
    config: &RunConfig,
    config_dir: &Path,
    command: Command,
) -> PathBuf {
    if let Some(e) = env.filter(|e| !e.is_empty()) {
        return PathBuf::from(e);
    }
    if let Some(f) = flag {
        return f.to_path_buf();
    }
    match &config.out {
        Some(p) => config_dir.join(p),
        None => PathBuf::from("out").join(command.name()),
    }
}

/// Runs one experiment. Config problems are returned as errors before any
/// file is written; numerical failures produce a record with status
/// `failed` and whatever outputs were written before the failure.
pub fn run(
    config: &RunConfig,
    command: Command,
    config_dir: &Path,
    out_dir: &Path,
) -> Result<ExperimentRecord, CliError> {
    config.validate(command)?;
    let records = if command == Command::Report { report::load_records(config, config_dir)? } else { Vec::new() };
    let start = Instant::now();
    let mut out = Output::new(out_dir, config.digest())?;
    let result = match command {
        Command::Solve => pipelines::solve(config, &mut out),
        Command::Eigen => pipelines::eigen(config, &mut out),
        Command::Check => pipelines::check(config, &mut out),
        Command::Flow => pipelines::flow(config, &mut out),
        Command::Branch => pipelines::branch(config, &mut out),
        Command::Report => report::report(&records, &mut out),
    };
    let (status, error, results) = match result {
        Ok(v) => ("ok", None, v),
        Err(e @ CliError::Io(_)) => return Err(e),
        Err(e) => ("failed", Some(e.to_string()), serde_json::Value::Null),
    };
    let record = ExperimentRecord {
        version: VERSION.to_string(),
        command,
        config: config.clone(),
        config_digest: out.digest.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
        status: status.to_string(),
        error,
        files: out.files.clone(),
        results,
    };
    let text = serde_json::to_string_pretty(&record).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    let path = out.dir.join("record.json");
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::ConfigInvalid(String::new()).exit_code(), 2);
        assert_eq!(CliError::VersionMismatch { found: vec![] }.exit_code(), 2);
        assert_eq!(CliError::Numerical(String::new()).exit_code(), 1);
    }

    #[test]
    fn out_dir_priority() {
        let mut c = RunConfig::from_json("{}").unwrap();
        let dir = Path::new("/cfg");
        let flag = Path::new("/flag");
        assert_eq!(resolve_out(Some("/env"), Some(flag), &c, dir, Command::Eigen), PathBuf::from("/env"));
        assert_eq!(resolve_out(None, Some(flag), &c, dir, Command::Eigen), PathBuf::from("/flag"));
        assert_eq!(resolve_out(Some(""), None, &c, dir, Command::Eigen), PathBuf::from("out/eigen"));
        c.out = Some("res".into());
        assert_eq!(resolve_out(None, None, &c, dir, Command::Eigen), PathBuf::from("/cfg/res"));
    }
}
