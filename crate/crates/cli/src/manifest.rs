use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::commands::execute;
use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: ExperimentConfig,
    pub version: String,
    pub timestamp: String,
    pub seed: u64,
    pub files: Vec<FileDigest>,
}

/// The part of a run embedded in JSON data files. Timestamp and output
/// location are left out so the files depend on the experiment only.
fn run_echo(cfg: &ExperimentConfig) -> Value {
    let mut argv = cfg.to_argv();
    if let Some(i) = argv.iter().position(|a| a == "--output") {
        argv.drain(i..i + 2);
    }
    let mut config = serde_json::to_value(cfg).expect("serialisable");
    config.as_object_mut().expect("struct").remove("output");
    serde_json::json!({
        "command": cfg.command.name(),
        "argv": argv,
        "config": config,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
    })
}

fn write(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Runs the experiment and writes its data files and manifest.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest, CliError> {
    let tables = execute(cfg)?;
    fs::create_dir_all(&cfg.output)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", cfg.output.display())))?;
    let echo = run_echo(cfg);
    let mut files = Vec::with_capacity(tables.len());
    for table in &tables {
        let name = table.file_name(cfg.format);
        let body = table.render(cfg.format, &echo);
        write(&cfg.output.join(&name), body.as_bytes())?;
        files.push(FileDigest {
            name,
            sha256: hex::encode(Sha256::digest(body.as_bytes())),
            bytes: body.len() as u64,
        });
    }
    let manifest = RunManifest {
        command: cfg.command.name().to_string(),
        argv: cfg.to_argv(),
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        seed: cfg.seed,
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("serialisable");
    text.push('\n');
    write(&cfg.output.join(MANIFEST_FILE), text.as_bytes())?;
    Ok(manifest)
}
