//! Deterministic CSV and JSON writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::Result;
use crate::linalg::CMat;
use crate::reduction::LindbladReport;

/// C-style `%.12e`: mantissa with 12 decimals, signed exponent of at least
/// two digits.
pub fn fmt_e(x: f64) -> String {
    fmt_prec(x, 12)
}

/// `%.{prec}e`.
pub fn fmt_prec(x: f64, prec: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.prec$e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    let sign = if e < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", e.abs())
}

pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

pub struct Csv {
    header: Vec<String>,
    body: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), body: String::new() }
    }

    pub fn with_header(header: Vec<String>) -> Self {
        Self { header, body: String::new() }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.header.len(), "csv row width");
        let parts: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::Num(x) => fmt_e(x),
                Cell::Int(i) => i.to_string(),
                Cell::Bool(b) => b.to_string(),
                Cell::Text(t) => t,
            })
            .collect();
        let _ = writeln!(self.body, "{}", parts.join(","));
    }

    pub fn render(&self) -> String {
        format!("{}\n{}", self.header.join(","), self.body)
    }
}

/// Pretty JSON with sorted keys (`serde_json::Map` is ordered by key).
pub fn to_sorted_json(v: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

pub fn complex_matrix(m: &CMat) -> Value {
    let re: Vec<Vec<f64>> = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].re).collect()).collect();
    let im: Vec<Vec<f64>> = (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].im).collect()).collect();
    json!({ "re": re, "im": im })
}

pub fn lindblad_report(r: &LindbladReport) -> Value {
    json!({
        "pass": r.ok,
        "min_conditional_eig": r.min_conditional_eig,
        "tp_residual": r.tp_residual,
        "herm_residual": r.herm_residual,
        "max_real_eig": r.max_real_eig,
    })
}

pub struct OutDir {
    pub path: PathBuf,
}

impl OutDir {
    pub fn new(path: &Path) -> Result<Self> {
        fs::create_dir_all(path)?;
        Ok(Self { path: path.to_path_buf() })
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let p = self.path.join(name);
        fs::write(&p, contents)?;
        eprintln!("wrote {}", p.display());
        Ok(p)
    }

    pub fn csv(&self, name: &str, csv: &Csv) -> Result<PathBuf> {
        self.write(name, &csv.render())
    }

    pub fn json(&self, name: &str, v: &Value) -> Result<PathBuf> {
        self.write(name, &to_sorted_json(v)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printf_style_exponent() {
        assert_eq!(fmt_e(1.2), "1.200000000000e+00");
        assert_eq!(fmt_e(-0.00072), "-7.200000000000e-04");
        assert_eq!(fmt_e(0.0), "0.000000000000e+00");
        assert_eq!(fmt_e(1.5e123), "1.500000000000e+123");
    }

    #[test]
    fn json_keys_sorted() {
        let v = json!({"b": 1, "a": {"d": 2, "c": 3}});
        let s = to_sorted_json(&v).unwrap();
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.find("\"c\"").unwrap() < s.find("\"d\"").unwrap());
    }
}
