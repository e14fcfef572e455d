use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use certsum_core::Error;

use crate::{CliError, CliResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` and returns their SHA-256 digest.
pub fn write_digest(path: &Path, bytes: &[u8]) -> CliResult<String> {
    fs::write(path, bytes).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
    Ok(sha256_hex(bytes))
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())).into())
}

pub fn read_json(path: &Path) -> CliResult<Value> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())).into())
}

pub fn from_value<T: serde::de::DeserializeOwned>(value: Value, what: &str) -> CliResult<T> {
    serde_json::from_value(value).map_err(|e| Error::Format(format!("{what}: {e}")).into())
}

/// Prints a report and optionally stores it.
pub fn emit_report<T: Serialize>(report: &T, out: Option<&Path>) -> CliResult<()> {
    let bytes = to_json_bytes(report)?;
    if let Some(path) = out {
        write_digest(path, &bytes)?;
    }
    print!("{}", String::from_utf8_lossy(&bytes));
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

/// Inputs, outputs and timings of one `gen` run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub parameters: Value,
    pub seed: Option<u64>,
    pub threads: usize,
    pub outputs: Vec<OutputDigest>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], parameters: Value, seed: Option<u64>, threads: usize) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            argv: argv.to_vec(),
            parameters,
            seed,
            threads,
            outputs: Vec::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, path: &Path, digest: String) {
        self.outputs.push(OutputDigest {
            path: path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned()),
            sha256: digest,
        });
    }

    pub fn time(&mut self, label: &str, start: std::time::Instant) {
        self.timings_ms.insert(label.into(), start.elapsed().as_secs_f64() * 1e3);
    }
}
