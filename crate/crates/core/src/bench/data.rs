//! Numeric CSV matrices with a missing-value token.

use std::fs;
use std::path::Path;

use super::BenchError;
use crate::linalg::DenseMatrix;

pub const DEFAULT_MISSING_TOKEN: &str = "NA";

/// A parsed CSV matrix. Missing cells hold `0.0` in `matrix` and `true` in
/// the row-major `mask`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvMatrix {
    pub matrix: DenseMatrix,
    pub mask: Vec<bool>,
    pub header: Option<Vec<String>>,
}

impl CsvMatrix {
    pub fn missing_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }
}

pub fn load_csv_matrix(path: &Path, missing_token: &str) -> Result<CsvMatrix, BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse_csv_matrix(&text, missing_token).map_err(|e| e.with_path(path))
}

enum Cell {
    Value(f64),
    Missing,
    Text,
}

fn classify(cell: &str, missing_token: &str) -> Cell {
    let cell = cell.trim();
    if cell == missing_token {
        return Cell::Missing;
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Cell::Value(v),
        _ => Cell::Text,
    }
}

/// Parses CSV text. The first row is taken as a header when any of its
/// cells is neither a number nor the missing token.
pub fn parse_csv_matrix(text: &str, missing_token: &str) -> Result<CsvMatrix, BenchError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut header = None;
    let mut values = Vec::new();
    let mut mask = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| BenchError::data(None, e.position().map(|p| p.line()), e.to_string()))?;
        let line = rec.position().map(|p| p.line());
        if i == 0 && rec.iter().any(|c| matches!(classify(c, missing_token), Cell::Text)) {
            header = Some(rec.iter().map(str::to_string).collect::<Vec<_>>());
            width = Some(rec.len());
            continue;
        }
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(BenchError::data(
                None,
                line,
                format!("ragged row: {} fields, expected {w}", rec.len()),
            ));
        }
        for (c, cell) in rec.iter().enumerate() {
            match classify(cell, missing_token) {
                Cell::Value(v) => {
                    values.push(v);
                    mask.push(false);
                }
                Cell::Missing => {
                    values.push(0.0);
                    mask.push(true);
                }
                Cell::Text => {
                    return Err(BenchError::data(
                        None,
                        line,
                        format!("column {}: '{cell}' is neither a number nor '{missing_token}'", c + 1),
                    ))
                }
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(BenchError::data(None, None, "no data rows".into()));
    }
    let matrix = DenseMatrix::from_vec(rows, width.unwrap_or(0), values).expect("row widths checked");
    Ok(CsvMatrix { matrix, mask, header })
}

/// Renders a matrix as CSV; masked cells become `missing_token`.
pub fn format_csv_matrix(m: &DenseMatrix, mask: Option<&[bool]>, missing_token: &str, header: Option<&[String]>) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&h.join(","));
        out.push('\n');
    }
    for i in 0..m.rows() {
        let cells: Vec<String> = (0..m.cols())
            .map(|j| {
                if mask.is_some_and(|mk| mk[i * m.cols() + j]) {
                    missing_token.to_string()
                } else {
                    m[(i, j)].to_string()
                }
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv_matrix(path: &Path, m: &DenseMatrix, mask: Option<&[bool]>, missing_token: &str) -> Result<(), BenchError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    fs::write(path, format_csv_matrix(m, mask, missing_token, None)).map_err(|e| BenchError::io(path, e))
}
