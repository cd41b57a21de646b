//! Table reports rendered as commented CSV or as JSON.
//!
//! Floats use Rust's shortest round-trip formatting, switching to exponent
//! form outside `[1e-4, 1e15)`, so identical inputs give identical bytes.

use std::collections::BTreeMap;

use hexaproc::Complex64;
use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};

pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let a = x.abs();
    if x.is_finite() && (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// `a+bi` with both parts rounded to 12 significant digits of the larger one.
pub fn fmt_complex(z: Complex64) -> String {
    let big = z.re.abs().max(z.im.abs());
    let round = |x: f64| -> f64 {
        if big == 0.0 || !big.is_finite() {
            return x;
        }
        let digits = 11 - big.log10().floor() as i32;
        let scale = 10f64.powi(digits.clamp(-300, 300));
        (x * scale).round() / scale
    };
    let (re, im) = (round(z.re) + 0.0, round(z.im) + 0.0);
    match (re == 0.0, im == 0.0) {
        (true, true) => "0".to_string(),
        (true, false) => format!("{}i", fmt_f64(im)),
        (false, true) => fmt_f64(re),
        (false, false) if im < 0.0 => format!("{}-{}i", fmt_f64(re), fmt_f64(-im)),
        (false, false) => format!("{}+{}i", fmt_f64(re), fmt_f64(im)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => fmt_f64(*x),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(x) => Value::String(fmt_f64(*x)),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<i32> for Cell {
    fn from(x: i32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u8> for Cell {
    fn from(x: u8) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

/// One subcommand's result: a summary plus a table with frozen columns.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub summary: BTreeMap<String, String>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(command: &'static str, columns: &[&'static str]) -> Self {
        Report {
            command,
            summary: BTreeMap::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.summary.insert(key.to_string(), value.into());
    }

    fn meta(&self, cfg: &RunConfig) -> Vec<(String, String)> {
        let mut meta = vec![
            ("command".to_string(), self.command.to_string()),
            ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("seed".to_string(), cfg.seed.to_string()),
        ];
        meta.extend(cfg.echo.iter().filter(|(k, _)| k.as_str() != "seed").map(|(k, v)| (k.clone(), v.clone())));
        meta
    }

    pub fn render(&self, cfg: &RunConfig) -> String {
        match cfg.format {
            Format::Csv => self.render_csv(cfg),
            Format::Json => self.render_json(cfg),
        }
    }

    fn render_csv(&self, cfg: &RunConfig) -> String {
        let mut out = String::new();
        out.push_str("# hexaproc\n");
        for (k, v) in self.meta(cfg) {
            out.push_str(&format!("# {k}={v}\n"));
        }
        for (k, v) in &self.summary {
            out.push_str(&format!("# result.{k}={v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn render_json(&self, cfg: &RunConfig) -> String {
        let meta: Map<String, Value> = self.meta(cfg).into_iter().map(|(k, v)| (k, Value::String(v))).collect();
        let summary: Map<String, Value> =
            self.summary.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        let doc = json!({
            "meta": meta,
            "summary": summary,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("report serialises");
        s.push('\n');
        s
    }
}
