//! Binary matrix container and CSV import/export.
//!
//! MVMX layout (all little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic  b"MVMX"
//! 4       4     u32    format version (1)
//! 8       8     u64    rows
//! 16      8     u64    cols
//! 24      8·r·c f64    entries, row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const MATRIX_MAGIC: &[u8; 4] = b"MVMX";
pub const MATRIX_VERSION: u32 = 1;

/// Upper bound on entries accepted from a header, to fail fast on garbage.
const MAX_ENTRIES: u64 = 1 << 34;

pub(crate) fn truncated(err: std::io::Error, what: &str) -> Error {
    if err.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format(format!("truncated {what}"))
    } else {
        Error::Io(err)
    }
}

pub(crate) fn read_u32(r: &mut impl Read, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|e| truncated(e, what))?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_u64(r: &mut impl Read, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| truncated(e, what))?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_magic(r: &mut impl Read, expected: &[u8; 4]) -> Result<()> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| truncated(e, "header"))?;
    if &magic != expected {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&magic),
            String::from_utf8_lossy(expected)
        )));
    }
    Ok(())
}

pub(crate) fn write_string(w: &mut impl Write, s: &str) -> Result<()> {
    w.write_all(&(s.len() as u64).to_le_bytes())?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

pub(crate) fn read_string(r: &mut impl Read, what: &str) -> Result<String> {
    let len = read_u64(r, what)?;
    if len > MAX_ENTRIES {
        return Err(Error::Format(format!("{what}: implausible length {len}")));
    }
    let mut buf = vec![0u8; len as usize];
    r.read_exact(&mut buf).map_err(|e| truncated(e, what))?;
    String::from_utf8(buf).map_err(|_| Error::Format(format!("{what}: invalid UTF-8")))
}

/// Encode one matrix in MVMX form.
pub fn write_matrix(w: &mut impl Write, m: &Matrix) -> Result<()> {
    w.write_all(MATRIX_MAGIC)?;
    w.write_all(&MATRIX_VERSION.to_le_bytes())?;
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Decode one MVMX matrix, leaving the reader just past its payload.
pub fn read_matrix(r: &mut impl Read) -> Result<Matrix> {
    read_magic(r, MATRIX_MAGIC)?;
    let version = read_u32(r, "matrix header")?;
    if version != MATRIX_VERSION {
        return Err(Error::Format(format!("unsupported matrix format version {version}")));
    }
    let rows = read_u64(r, "matrix header")?;
    let cols = read_u64(r, "matrix header")?;
    let entries = rows.checked_mul(cols).filter(|&e| e <= MAX_ENTRIES);
    let Some(entries) = entries else {
        return Err(Error::Format(format!("implausible matrix shape {rows}x{cols}")));
    };
    let mut payload = vec![0u8; entries as usize * 8];
    r.read_exact(&mut payload).map_err(|e| truncated(e, "matrix payload"))?;
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Matrix::from_vec(rows as usize, cols as usize, data)
}

pub fn save_matrix(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(&mut w, m)?;
    w.flush()?;
    Ok(())
}

/// Read a standalone MVMX file; trailing bytes are an error.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let mut r = BufReader::new(File::open(path)?);
    let m = read_matrix(&mut r)?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after matrix payload".into()));
    }
    Ok(m)
}

/// A matrix read from CSV, plus the header row when one was present.
#[derive(Debug, Clone)]
pub struct CsvMatrix {
    pub header: Option<Vec<String>>,
    pub matrix: Matrix,
}

/// Parse CSV text as a matrix, one CSV record per matrix row. A first
/// record containing any non-numeric field is taken as the header.
pub fn read_csv_matrix(reader: impl Read) -> Result<CsvMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(format!("csv: {e}")))?;
        let parsed: Vec<Option<f64>> = rec.iter().map(|f| f.parse::<f64>().ok()).collect();
        if parsed.iter().all(Option::is_some) {
            rows.push(parsed.into_iter().flatten().collect());
        } else if line == 0 {
            header = Some(rec.iter().map(str::to_owned).collect());
        } else {
            return Err(Error::Format(format!("csv: non-numeric field on record {}", line + 1)));
        }
    }
    if let (Some(h), Some(first)) = (&header, rows.first()) {
        if h.len() != first.len() {
            return Err(Error::Format(format!("csv: header has {} fields, data has {}", h.len(), first.len())));
        }
    }
    Ok(CsvMatrix { header, matrix: Matrix::from_rows(&rows)? })
}

pub fn write_csv_matrix(writer: impl Write, m: &Matrix, header: Option<&[String]>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let fail = |e: csv::Error| Error::Format(format!("csv: {e}"));
    if let Some(h) = header {
        if h.len() != m.cols() {
            return Err(Error::Shape(format!("{} header fields for {} columns", h.len(), m.cols())));
        }
        w.write_record(h).map_err(fail)?;
    }
    for i in 0..m.rows() {
        // `{:?}` prints the shortest string that round-trips exactly.
        w.write_record(m.row(i).iter().map(|v| format!("{v:?}"))).map_err(fail)?;
    }
    w.flush()?;
    Ok(())
}
