//! Output formatting: JSON documents and CSV tables.
//!
//! Every run emits a single document with `params`, `results` and
//! `metadata` keys (JSON) or a header line plus one row per result record
//! (CSV, 12 significant digits, parameters echoed as columns). Output is
//! byte-deterministic for a given invocation and seed; timestamps only
//! appear when explicitly requested.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::CliError;

/// Format a float with 12 significant digits, positional where reasonable.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.11e}")
    }
}

/// A generic cell for CSV tables.
#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => fmt_sig(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// One CSV table: header plus rows.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&str>) -> Self {
        Table {
            header: header.into_iter().map(String::from).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new().from_writer(out);
        w.write_record(&self.header).map_err(CliError::io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))
                .map_err(CliError::io)?;
        }
        w.flush().map_err(CliError::io)?;
        Ok(())
    }
}

/// The JSON document every subcommand emits.
pub fn json_document<P: Serialize, R: Serialize>(
    command: &str,
    params: &P,
    results: &R,
    seed: Option<u64>,
    timestamp: Option<String>,
    config_file: Option<&str>,
) -> Value {
    let mut metadata = Map::new();
    metadata.insert("command".into(), json!(command));
    metadata.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    if let Some(s) = seed {
        metadata.insert("seed".into(), json!(s));
    }
    if let Some(t) = timestamp {
        metadata.insert("timestamp".into(), json!(t));
    }
    if let Some(c) = config_file {
        metadata.insert("config_file".into(), json!(c));
    }
    json!({
        "params": serde_json::to_value(params).expect("params serialize"),
        "results": serde_json::to_value(results).expect("results serialize"),
        "metadata": Value::Object(metadata),
    })
}

/// Write a JSON value with a trailing newline.
pub fn write_json<W: Write>(mut out: W, value: &Value) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::io_msg(e.to_string()))?;
    out.write_all(b"\n").map_err(CliError::io)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_sig_keeps_twelve_digits() {
        assert_eq!(fmt_sig(43.310264682651), "43.3102646827");
        assert_eq!(fmt_sig(2.0), "2.00000000000");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-0.089856), "-0.0898560000000");
        assert!(fmt_sig(1e-7).contains('e'));
        assert_eq!(fmt_sig(f64::NAN), "NaN");
    }
}
