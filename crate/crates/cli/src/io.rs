use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use serde::Serialize;
use splcm_core::symvec::SymMatrix;

use crate::error::CliError;

/// A numeric table read from CSV.
#[derive(Clone, Debug)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub data: Array2<f64>,
}

/// Read a comma-separated numeric table. The first row is a header when any
/// of its fields fails to parse as a number.
pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if i == 0 => header = Some(rec.iter().map(str::to_string).collect()),
            Err(_) => {
                return Err(CliError::usage(format!("{}: non-numeric value on line {}", path.display(), i + 1)));
            }
        }
    }
    let cols = rows.first().map(Vec::len).or(header.as_ref().map(Vec::len)).unwrap_or(0);
    if rows.is_empty() || cols == 0 {
        return Err(CliError::usage(format!("{}: no numeric rows", path.display())));
    }
    if let Some(h) = &header {
        if h.len() != cols {
            return Err(CliError::usage(format!("{}: header has {} fields, rows have {cols}", path.display(), h.len())));
        }
    }
    let n = rows.len();
    let data = Array2::from_shape_vec((n, cols), rows.into_iter().flatten().collect())
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    Ok(Table { header, data })
}

/// Read a square symmetric matrix (averaged to remove round-off asymmetry).
pub fn read_sym(path: &Path) -> Result<SymMatrix, CliError> {
    let t = read_table(path)?;
    if t.data.nrows() != t.data.ncols() {
        return Err(CliError::usage(format!(
            "{}: expected a square matrix, got {}x{}",
            path.display(),
            t.data.nrows(),
            t.data.ncols()
        )));
    }
    for j in 0..t.data.nrows() {
        for k in 0..j {
            let (a, b) = (t.data[[j, k]], t.data[[k, j]]);
            if (a - b).abs() > 1e-8 * (1.0 + a.abs().max(b.abs())) {
                return Err(CliError::usage(format!("{}: matrix is not symmetric at ({j},{k})", path.display())));
            }
        }
    }
    SymMatrix::from_average(t.data).map_err(CliError::from)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

/// Write rows of already-formatted fields.
pub fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    if !header.is_empty() {
        w.write_record(header).map_err(|e| CliError::usage(e.to_string()))?;
    }
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::usage(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_matrix(path: &Path, header: Option<&[String]>, m: &Array2<f64>) -> Result<(), CliError> {
    let h: Vec<&str> = header.map(|h| h.iter().map(String::as_str).collect()).unwrap_or_default();
    write_rows(path, &h, m.rows().into_iter().map(|r| r.iter().map(|x| num(*x)).collect()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::usage(e.to_string()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

/// Shortest round-trip formatting.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
