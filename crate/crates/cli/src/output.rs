use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::args::Format;
use crate::commands::Outcome;
use crate::UsageError;

/// Shortest round-trip form; scientific notation for very large or small magnitudes.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:?}")
    }
}

/// A flat table for CSV output.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<const K: usize>(&mut self, row: [String; K]) {
        debug_assert_eq!(K, self.header.len());
        self.rows.push(row.to_vec());
    }

    fn to_csv(&self) -> anyhow::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        Ok(w.into_inner()?)
    }
}

#[derive(Serialize)]
struct Report<'a, C: Serialize> {
    command: &'a str,
    config: C,
    result: &'a serde_json::Value,
}

pub fn render<C: Serialize>(
    command: &str,
    config: C,
    outcome: &Outcome,
    format: Format,
) -> anyhow::Result<Vec<u8>> {
    match format {
        Format::Json => {
            let report = Report {
                command,
                config,
                result: &outcome.result,
            };
            let mut bytes = serde_json::to_vec_pretty(&report)?;
            bytes.push(b'\n');
            Ok(bytes)
        }
        Format::Csv => outcome.table.to_csv(),
        Format::Text => match &outcome.text {
            Some(t) => Ok(t.clone().into_bytes()),
            None => {
                Err(UsageError(format!("{command} has no text output; use json or csv")).into())
            }
        },
    }
}

pub fn emit(bytes: &[u8], out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}
