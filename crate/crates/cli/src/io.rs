//! Dataset and tensor readers, CSV table and JSON summary writers.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3};
use serde::Serialize;
use skm_core::{Dataset, DissimilarityTensor};

use crate::error::{CliError, Result};

pub struct NamedDataset {
    pub names: Vec<String>,
    pub data: Dataset<f64>,
}

fn data_err(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {msg}", path.display()))
}

fn open(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path).map_err(|e| data_err(path, e))
}

/// Header row of feature names, then one row per observation.
pub fn read_dataset(path: &Path, bound: Option<f64>) -> Result<NamedDataset> {
    let mut rdr = open(path)?;
    let names: Vec<String> = rdr.headers().map_err(|e| data_err(path, e))?.iter().map(str::to_owned).collect();
    let mut values = Vec::new();
    let mut n = 0;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| data_err(path, e))?;
        if rec.len() != names.len() {
            return Err(data_err(
                path,
                format!("row {} has {} fields, header has {}", line + 1, rec.len(), names.len()),
            ));
        }
        for field in rec.iter() {
            let v: f64 =
                field.parse().map_err(|_| data_err(path, format!("row {}: '{field}' is not a number", line + 1)))?;
            values.push(v);
        }
        n += 1;
    }
    if n == 0 || names.is_empty() {
        return Err(data_err(path, "no observations"));
    }
    let x = Array2::from_shape_vec((n, names.len()), values).map_err(|e| data_err(path, e))?;
    let data = match bound {
        Some(m) => Dataset::with_bound(x, m),
        None => Dataset::new(x),
    }
    .map_err(|e| data_err(path, e))?;
    Ok(NamedDataset { names, data })
}

/// Rows `(i, i', j, value)`, 1-based. Every pair `i < i'` must appear for every feature;
/// rows with `i > i'` must repeat the mirrored value. The bound defaults to the largest entry.
pub fn read_tensor(path: &Path, bound: Option<f64>) -> Result<DissimilarityTensor<f64>> {
    let mut rdr = open(path)?;
    let mut entries = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| data_err(path, e))?;
        if rec.len() != 4 {
            return Err(data_err(path, format!("row {} needs 4 fields (i, i', j, value)", line + 1)));
        }
        let index = |f: usize| -> Result<usize> {
            rec[f]
                .parse::<usize>()
                .ok()
                .filter(|&v| v >= 1)
                .ok_or_else(|| data_err(path, format!("row {}: '{}' is not a 1-based index", line + 1, &rec[f])))
        };
        let (i, i2, j) = (index(0)?, index(1)?, index(2)?);
        let v: f64 =
            rec[3].parse().map_err(|_| data_err(path, format!("row {}: '{}' is not a number", line + 1, &rec[3])))?;
        entries.push((i - 1, i2 - 1, j - 1, v));
    }
    let n = entries.iter().map(|e| e.0.max(e.1) + 1).max().unwrap_or(0);
    let p = entries.iter().map(|e| e.2 + 1).max().unwrap_or(0);
    if n < 2 || p == 0 {
        return Err(data_err(path, "tensor needs at least two items and one feature"));
    }
    let mut d = Array3::from_elem((p, n, n), f64::NAN);
    for j in 0..p {
        for i in 0..n {
            d[[j, i, i]] = 0.0;
        }
    }
    for &(i, i2, j, v) in &entries {
        let (a, b) = (i.min(i2), i.max(i2));
        let prev = d[[j, a, b]];
        if i == i2 {
            if v != 0.0 {
                return Err(data_err(path, format!("nonzero diagonal at item {}, feature {}", i + 1, j + 1)));
            }
        } else if !prev.is_nan() && prev != v {
            return Err(data_err(path, format!("conflicting values for ({}, {}, {})", a + 1, b + 1, j + 1)));
        }
        d[[j, a, b]] = v;
        d[[j, b, a]] = v;
    }
    if let Some(((j, i, i2), _)) = d.indexed_iter().find(|(_, v)| v.is_nan()) {
        return Err(data_err(path, format!("missing entry ({}, {}, {})", i.min(i2) + 1, i.max(i2) + 1, j + 1)));
    }
    let bound = bound.unwrap_or_else(|| d.iter().copied().fold(0.0, f64::max));
    DissimilarityTensor::new(d, bound).map_err(|e| data_err(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Bool(bool),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}
impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Text(String::new()), Cell::Real)
    }
}
impl From<Option<bool>> for Cell {
    fn from(v: Option<bool>) -> Self {
        v.map_or(Cell::Text(String::new()), Cell::Bool)
    }
}

/// 17 significant digits: enough for an exact `f64` round trip.
pub fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => fmt_real(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|h| (*h).to_owned()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
    }
}

/// Everything one subcommand emits.
pub struct Output<C: Serialize, R: Serialize> {
    pub command: &'static str,
    pub config: C,
    pub result: R,
    pub passed: Option<bool>,
    pub tables: Vec<Table>,
}

#[derive(Serialize)]
struct Summary<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    seed: u64,
    config: &'a C,
    result: &'a R,
    #[serde(skip_serializing_if = "Option::is_none")]
    passed: Option<bool>,
    tables: Vec<String>,
}

/// Write `<prefix>_<table>.csv` for each table and `<prefix>_summary.json`; returns the paths.
pub fn write_output<C: Serialize, R: Serialize>(
    dir: &Path,
    prefix: &str,
    seed: u64,
    out: &Output<C, R>,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut names = Vec::new();
    for t in &out.tables {
        let file = format!("{prefix}_{}.csv", t.name);
        let path = dir.join(&file);
        fs::write(&path, t.to_csv()?)?;
        names.push(file);
        written.push(path);
    }
    let summary = Summary {
        command: out.command,
        seed,
        config: &out.config,
        result: &out.result,
        passed: out.passed,
        tables: names,
    };
    let mut json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    json.push('\n');
    let path = dir.join(format!("{prefix}_summary.json"));
    fs::write(&path, json)?;
    written.push(path);
    Ok(written)
}
