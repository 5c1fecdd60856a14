//! Dense matrix files: plain CSV (one row per line) and the little-endian
//! binary layout `"CFM1" | rows: u64 | cols: u64 | rows*cols f64 row-major`.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Dense, LinOpError};

const MAGIC: &[u8; 4] = b"CFM1";

/// Row-major dense matrix as read from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn into_operator(self) -> Result<Dense, LinOpError> {
        Dense::new(self.rows, self.cols, self.data)
    }
}

fn io_err(path: &Path, source: std::io::Error) -> LinOpError {
    LinOpError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn fmt_err(path: &Path, reason: impl Into<String>) -> LinOpError {
    LinOpError::Format {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix, LinOpError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => io_err(path, io),
            other => fmt_err(path, format!("{other:?}")),
        })?;
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| fmt_err(path, e.to_string()))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if *cols.get_or_insert(record.len()) != record.len() {
            return Err(fmt_err(path, format!("ragged row {}", rows + 1)));
        }
        for field in record.iter() {
            let v = field
                .parse::<f64>()
                .map_err(|_| fmt_err(path, format!("bad number {field:?} in row {}", rows + 1)))?;
            data.push(v);
        }
        rows += 1;
    }
    Ok(DenseMatrix {
        rows,
        cols: cols.unwrap_or(0),
        data,
    })
}

pub fn read_matrix_binary(path: &Path) -> Result<DenseMatrix, LinOpError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.len() < 20 || &bytes[..4] != MAGIC {
        return Err(fmt_err(path, "missing CFM1 header"));
    }
    let rows = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let body = &bytes[20..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| fmt_err(path, "dimensions overflow"))?;
    if body.len() != expected {
        return Err(fmt_err(
            path,
            format!("expected {expected} payload bytes, found {}", body.len()),
        ));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DenseMatrix { rows, cols, data })
}

/// Reads either format, sniffing the binary magic.
pub fn read_matrix(path: &Path) -> Result<DenseMatrix, LinOpError> {
    let head = fs::read(path).map_err(|e| io_err(path, e))?;
    if head.starts_with(MAGIC) {
        read_matrix_binary(path)
    } else {
        read_matrix_csv(path)
    }
}

pub fn write_matrix_binary(path: &Path, m: &DenseMatrix) -> Result<(), LinOpError> {
    let mut out = Vec::with_capacity(20 + 8 * m.data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(m.rows as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols as u64).to_le_bytes());
    for v in &m.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Writes CSV with 17 significant digits so values round-trip.
pub fn write_matrix_csv(path: &Path, m: &DenseMatrix) -> Result<(), LinOpError> {
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut text = String::new();
    for row in m.data.chunks(m.cols.max(1)) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}
