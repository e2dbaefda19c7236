//! Deterministic table emission.
//!
//! Every mode produces one rectangular table. Floats are printed with 17
//! significant digits so reruns are byte-identical and a round trip through
//! text recovers the exact f64. CSV uses a header row, '.' decimals, and one
//! line per row; complex quantities appear as paired `_re`/`_im` columns.

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("expected csv or json, got {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Empty,
}

pub struct Table {
    pub mode: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

/// 17 significant digits: enough to reproduce any f64 exactly. Negative
/// zero (a common leftover of exact cancellations in the linear solves) is
/// canonicalized so equal tables stay byte-equal.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 {
        format!("{:.16e}", 0.0)
    } else {
        format!("{x:.16e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(x) => fmt_float(*x),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Int(v) => serde_json::Value::from(*v),
            Cell::Float(x) => {
                let x = if *x == 0.0 { 0.0 } else { *x };
                match serde_json::Number::from_f64(x) {
                    Some(n) => serde_json::Value::Number(n),
                    None => serde_json::Value::String(fmt_float(x)),
                }
            }
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

impl Table {
    /// Renders the table; an abort record (from a sweep stopped by a failed
    /// value) is appended as a `# aborted:` comment line in CSV and an
    /// `aborted` key in JSON.
    pub fn render(&self, format: Format, aborted: Option<&serde_json::Value>) -> String {
        match format {
            Format::Csv => self.to_csv(aborted),
            Format::Json => self.to_json(aborted),
        }
    }

    fn to_csv(&self, aborted: Option<&serde_json::Value>) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        if let Some(record) = aborted {
            out.push_str("# aborted: ");
            out.push_str(&record.to_string());
            out.push('\n');
        }
        out
    }

    fn to_json(&self, aborted: Option<&serde_json::Value>) -> String {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| serde_json::Value::Array(row.iter().map(Cell::json).collect()))
            .collect();
        let mut doc = serde_json::json!({
            "mode": self.mode,
            "columns": self.columns,
            "rows": rows,
        });
        if let Some(record) = aborted {
            doc["aborted"] = record.clone();
        }
        let mut out = doc.to_string();
        out.push('\n');
        out
    }
}

/// Writes the rendered table to the chosen destination in one shot.
pub fn write_output(rendered: &str, path: Option<&std::path::Path>) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, rendered)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", p.display()))),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(rendered.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io(format!("cannot write to stdout: {e}")))
        }
    }
}
