//! Report envelopes and CSV writing.
//!
//! JSON reports carry `"schema": "cploss/1"` and a `"command"` field; keys
//! are sorted and floats use shortest round-trip formatting. Non-finite
//! floats become `null`. CSV files have a header row and shortest round-trip `{:e}` floats.

use std::fs;
use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::commands::CliError;

pub const SCHEMA: &str = "cploss/1";

pub fn report(command: &str, payload: impl Serialize) -> Result<Value, CliError> {
    let mut body = match serde_json::to_value(payload).map_err(|e| CliError::Numeric(e.to_string()))? {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    body.insert("schema".into(), Value::from(SCHEMA));
    body.insert("command".into(), Value::from(command));
    Ok(Value::Object(body))
}

pub fn print_json(v: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).map_err(|e| CliError::Numeric(e.to_string()))?;
    emit_stdout(format!("{text}\n").as_bytes())
}

/// A closed pipe downstream (`| head`) is not an error worth reporting.
fn emit_stdout(bytes: &[u8]) -> Result<(), CliError> {
    match std::io::stdout().lock().write_all(bytes) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Usage(e.to_string())),
        _ => Ok(()),
    }
}

pub fn csv_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:e}")
    }
}

pub fn csv_text(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| csv_float(x)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Writes CSV to `out`, or to stdout when `out` is `None`.
pub fn write_csv(out: Option<&str>, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let text = csv_text(header, rows);
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Usage(format!("cannot write {path}: {e}"))),
        None => emit_stdout(text.as_bytes()),
    }
}
