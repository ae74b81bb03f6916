use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes via a temporary file in the target directory and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut tmp = NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Writes to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

pub fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

/// Collects written files and their digests for `manifest.json`.
pub struct Manifest {
    command: &'static str,
    config: Value,
    seed: u64,
    outputs: Map<String, Value>,
}

impl Manifest {
    pub fn new(command: &'static str, config: Value, seed: u64) -> Self {
        Manifest {
            command,
            config,
            seed,
            outputs: Map::new(),
        }
    }

    pub fn write_file(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&dir.join(name), bytes)?;
        self.outputs
            .insert(name.to_string(), json!(sha256_hex(bytes)));
        Ok(())
    }

    pub fn finish(self, dir: &Path) -> Result<(), CliError> {
        let config_bytes = scmkit::io::canonical_json(&self.config);
        let doc = json!({
            "tool_version": env!("CARGO_PKG_VERSION"),
            "format_version": scmkit::io::FORMAT_VERSION,
            "command": self.command,
            "config": self.config,
            "config_sha256": sha256_hex(&config_bytes),
            "seed": self.seed,
            "outputs": self.outputs,
        });
        write_atomic(
            &dir.join("manifest.json"),
            &scmkit::io::canonical_json(&doc),
        )
    }
}
