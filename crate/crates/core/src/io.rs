//! On-disk formats.
//!
//! Codebooks are little-endian binary:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `CSVQCB\0\x01` |
//! | 4     | domain: 0 source, 1 measurement |
//! | 4     | dim |
//! | 4     | rate in bits |
//! | 8 each| `2^rate * dim` f64 values, row-major |
//!
//! Matrices are CSV: a `# rows=R,cols=C,seed=S` comment line (seed may be
//! `none`), then one comma-separated row per line with values printed in
//! shortest round-trip form.

use nalgebra::DMatrix;

use crate::codebook::{Codebook, Domain};
use crate::error::{Error, Result};

pub const CODEBOOK_MAGIC: &[u8; 8] = b"CSVQCB\0\x01";
const HEADER_LEN: usize = 20;
/// Largest codebook rate accepted by the decoder.
pub const MAX_FILE_RATE: u32 = 24;

fn parse_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse(msg.into()))
}

pub fn encode_codebook(cb: &Codebook) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + cb.as_slice().len() * 8);
    out.extend_from_slice(CODEBOOK_MAGIC);
    let domain: u32 = match cb.domain() {
        Domain::Source => 0,
        Domain::Measurement => 1,
    };
    out.extend_from_slice(&domain.to_le_bytes());
    out.extend_from_slice(&(cb.dim() as u32).to_le_bytes());
    out.extend_from_slice(&cb.rate_bits().to_le_bytes());
    for v in cb.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_codebook(bytes: &[u8]) -> Result<Codebook> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != CODEBOOK_MAGIC {
        return parse_err("not a codebook file (bad magic or truncated header)");
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let domain = match word(8) {
        0 => Domain::Source,
        1 => Domain::Measurement,
        d => return parse_err(format!("unknown domain tag {d}")),
    };
    let (dim, rate) = (word(12) as usize, word(16));
    if dim == 0 || rate > MAX_FILE_RATE {
        return parse_err(format!("unsupported shape: dim {dim}, rate {rate}"));
    }
    let payload = &bytes[HEADER_LEN..];
    let want = (dim as u128) << rate;
    if payload.len() as u128 != want * 8 {
        return parse_err(format!("payload holds {} bytes, header implies {}", payload.len(), want * 8));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Codebook::new(domain, dim, values).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_matrix_csv(m: &DMatrix<f64>, seed: Option<u64>) -> String {
    let seed = seed.map_or("none".to_string(), |s| s.to_string());
    let mut out = format!("# rows={},cols={},seed={seed}\n", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses [`write_matrix_csv`] output; returns the matrix and its seed.
pub fn parse_matrix_csv(text: &str) -> Result<(DMatrix<f64>, Option<u64>)> {
    let mut lines = text.lines();
    let Some(header) = lines.next().and_then(|h| h.strip_prefix("# ")) else {
        return parse_err("missing '# rows=..,cols=..,seed=..' header");
    };
    let (mut rows, mut cols, mut seed) = (None, None, None);
    for field in header.trim().split(',') {
        let Some((key, value)) = field.split_once('=') else {
            return parse_err(format!("bad header field {field:?}"));
        };
        let num = || value.parse::<usize>().map_err(|_| Error::Parse(format!("bad {key} {value:?}")));
        match key {
            "rows" => rows = Some(num()?),
            "cols" => cols = Some(num()?),
            "seed" if value == "none" => seed = Some(None),
            "seed" => seed = Some(Some(value.parse::<u64>().map_err(|_| Error::Parse(format!("bad seed {value:?}")))?)),
            _ => return parse_err(format!("unknown header key {key:?}")),
        }
    }
    let (Some(rows), Some(cols), Some(seed)) = (rows, cols, seed) else {
        return parse_err("header must give rows, cols and seed");
    };
    if rows == 0 || cols == 0 {
        return parse_err("matrix must be non-empty");
    }
    let mut values = Vec::new();
    let mut seen = 0;
    for line in lines.filter(|l| !l.trim().is_empty()) {
        seen += 1;
        if seen > rows {
            return parse_err(format!("more than {rows} rows"));
        }
        let before = values.len();
        for cell in line.split(',') {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number {cell:?} on row {seen}")))?;
            if !v.is_finite() {
                return parse_err(format!("non-finite value on row {seen}"));
            }
            values.push(v);
        }
        if values.len() - before != cols {
            return parse_err(format!("row {seen} has {} values, expected {cols}", values.len() - before));
        }
    }
    if seen != rows {
        return parse_err(format!("found {seen} rows, expected {rows}"));
    }
    Ok((DMatrix::from_row_slice(rows, cols, &values), seed))
}
