//! Artifact encoding. All output is byte-deterministic: pretty JSON with a
//! trailing newline, CSV through shortest-round-trip float formatting.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use serde::Serialize;

use crate::CliError;

/// Output destination: a file when `--out` is given, stdout otherwise.
pub struct Sink {
    pub out: Option<PathBuf>,
}

impl Sink {
    pub fn write(&self, bytes: &[u8]) -> Result<(), CliError> {
        match &self.out {
            Some(path) => fs::write(path, bytes)
                .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
            None => {
                let mut stdout = io::stdout().lock();
                stdout
                    .write_all(bytes)
                    .and_then(|_| stdout.flush())
                    .map_err(|e| CliError::usage(format!("cannot write to stdout: {e}")))
            }
        }
    }
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::usage(format!("cannot encode artifact: {e}")))?;
    text.push('\n');
    Ok(text.into_bytes())
}

pub fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let encode = |e: csv::Error| CliError::usage(format!("cannot encode artifact: {e}"));
    w.write_record(header).map_err(encode)?;
    for row in rows {
        w.write_record(row).map_err(encode)?;
    }
    w.into_inner().map_err(|e| CliError::usage(format!("cannot encode artifact: {e}")))
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Snake-case tag of a unit enum variant, as serde serializes it.
pub fn tag<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}
