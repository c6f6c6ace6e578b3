//! CSV matrices and label vectors, and atomic file output.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use rkpca_core::DataMatrix;

use crate::error::{CliError, CliResult};

/// How samples are laid out in a CSV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum SampleLayout {
    /// Each column is a sample; the file is the `d × n` matrix as written.
    #[default]
    Cols,
    /// Each row is a sample; the file is transposed on read and write.
    Rows,
}

/// A CSV parse failure, located by 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: u64,
    pub column: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.column {
            Some(c) => write!(f, "row {}, column {}: {}", self.line, c, self.message),
            None => write!(f, "row {}: {}", self.line, self.message),
        }
    }
}

impl std::error::Error for ParseError {}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn parse_cell(cell: &str, line: u64, column: usize) -> Result<f64, ParseError> {
    let value: f64 = cell.parse().map_err(|_| ParseError {
        line,
        column: Some(column),
        message: format!("cannot parse {cell:?} as a number"),
    })?;
    if !value.is_finite() {
        return Err(ParseError { line, column: Some(column), message: format!("non-finite value {cell:?}") });
    }
    Ok(value)
}

/// Parses a rectangular numeric CSV.
///
/// A first row containing any non-numeric cell is taken as a header and
/// skipped. Lines starting with `#` are ignored.
pub fn parse_matrix_csv(text: &str, layout: SampleLayout) -> Result<DataMatrix, ParseError> {
    let mut reader = csv_reader(text);
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ParseError {
            line: e.position().map_or(0, |p| p.line()),
            column: None,
            message: e.to_string(),
        })?;
        let line = record.position().map_or(index as u64 + 1, |p| p.line());
        if index == 0 && record.iter().any(|c| c.parse::<f64>().is_err()) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(ParseError {
                    line,
                    column: None,
                    message: format!("has {} fields, expected {w}", record.len()),
                });
            }
            Some(_) => {}
        }
        for (c, cell) in record.iter().enumerate() {
            values.push(parse_cell(cell, line, c + 1)?);
        }
        rows += 1;
    }
    let width = width.filter(|&w| w > 0 && rows > 0).ok_or(ParseError {
        line: 1,
        column: None,
        message: "no numeric data".into(),
    })?;
    let m = DataMatrix::from_row_major(rows, width, &values).expect("shape checked while parsing");
    Ok(match layout {
        SampleLayout::Cols => m,
        SampleLayout::Rows => m.transpose(),
    })
}

pub fn read_matrix_csv(path: &Path, layout: SampleLayout) -> CliResult<DataMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_matrix_csv(&text, layout)
        .map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

/// Formats a value with 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_matrix_csv(m: &DataMatrix, layout: SampleLayout) -> String {
    let m = match layout {
        SampleLayout::Cols => m.clone(),
        SampleLayout::Rows => m.transpose(),
    };
    let mut out = String::new();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_value(m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: &Path, m: &DataMatrix, layout: SampleLayout) -> CliResult<()> {
    write_atomic(path, format_matrix_csv(m, layout).as_bytes())
}

/// Reads integer labels, one per cell, in reading order. A non-numeric
/// first row is skipped as a header.
pub fn parse_labels(text: &str) -> Result<Vec<usize>, ParseError> {
    let mut reader = csv_reader(text);
    let mut labels = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ParseError {
            line: e.position().map_or(0, |p| p.line()),
            column: None,
            message: e.to_string(),
        })?;
        let line = record.position().map_or(index as u64 + 1, |p| p.line());
        if index == 0 && record.iter().any(|c| c.parse::<usize>().is_err()) {
            continue;
        }
        for (c, cell) in record.iter().enumerate() {
            labels.push(cell.parse().map_err(|_| ParseError {
                line,
                column: Some(c + 1),
                message: format!("cannot parse {cell:?} as a non-negative integer label"),
            })?);
        }
    }
    Ok(labels)
}

pub fn read_labels(path: &Path) -> CliResult<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_labels(&text).map_err(|e| CliError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

pub fn format_labels(labels: &[usize]) -> String {
    let mut out = String::new();
    for l in labels {
        let _ = writeln!(out, "{l}");
    }
    out
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}
