//! `NBALIST v1`, the text format for weighted parity-check matrices.
//!
//! ```text
//! NBALIST v1
//! <q> <w> <poly> <n> <m>
//! <col>:<weight> <col>:<weight> ...      (one line per row, m lines)
//! checksum sha256-64 <16 hex digits>
//! ```
//!
//! Columns are 0-indexed and written in increasing order; `poly` is the
//! decimal bit mask of the field's reduction polynomial. The checksum covers
//! every byte before the checksum line. Files end with a single newline.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::matrix::SparseParityCheck;
use super::CodeError;
use crate::gf::{GfError, GfTable, Symbol};
use crate::hash::{digest64, DIGEST_ALGORITHM};

pub const MAGIC: &str = "NBALIST";
pub const VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("not an NBALIST file (first line {0:?})")]
    WrongMagic(String),
    #[error("unsupported NBALIST version {0:?}")]
    UnsupportedVersion(String),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: malformed entry {token:?}")]
    MalformedEntry { line: usize, token: String },
    #[error("inconsistent dimensions: {0}")]
    InconsistentDimensions(String),
    #[error("line {line}: weight {weight} not a nonzero element of GF({q})")]
    WeightOutOfRange { line: usize, weight: usize, q: usize },
    #[error("missing checksum line")]
    MissingChecksum,
    #[error("malformed checksum line {0:?}")]
    MalformedChecksum(String),
    #[error("checksum mismatch: file says {expected:016x}, body hashes to {found:016x}")]
    ChecksumMismatch { expected: u64, found: u64 },
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Matrix(#[from] CodeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn serialize_code(h: &SparseParityCheck) -> String {
    let mut body = String::with_capacity(h.edge_count() * 8 + 64);
    let gf = h.gf();
    writeln!(body, "{MAGIC} {VERSION}").unwrap();
    writeln!(body, "{} {} {} {} {}", gf.q(), gf.w(), gf.poly(), h.n(), h.m()).unwrap();
    for row in h.rows() {
        for (k, (c, w)) in row.iter().enumerate() {
            if k > 0 {
                body.push(' ');
            }
            write!(body, "{c}:{w}").unwrap();
        }
        body.push('\n');
    }
    let sum = digest64(body.as_bytes());
    writeln!(body, "checksum {DIGEST_ALGORITHM} {sum:016x}").unwrap();
    body
}

pub fn parse_code(text: &str) -> Result<SparseParityCheck, FormatError> {
    let (body, checksum_line) = split_checksum(text)?;
    verify_checksum(body, checksum_line)?;

    let mut lines = body.lines();
    let first = lines.next().unwrap_or_default();
    let mut parts = first.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err(FormatError::WrongMagic(first.to_string()));
    }
    match parts.next() {
        Some(VERSION) => {}
        other => return Err(FormatError::UnsupportedVersion(other.unwrap_or("").to_string())),
    }

    let header = lines
        .next()
        .ok_or_else(|| FormatError::MalformedHeader("missing dimension line".into()))?;
    let fields: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| FormatError::MalformedHeader(format!("{header:?}: {e}")))?;
    let [q, w, poly, n, m] = fields[..] else {
        return Err(FormatError::MalformedHeader(format!(
            "expected 5 fields \"q w poly n m\", got {header:?}"
        )));
    };
    let gf = GfTable::with_poly(q, poly as u32)?;
    if gf.w() as usize != w {
        return Err(FormatError::InconsistentDimensions(format!("q={q} but w={w}")));
    }

    let mut rows = Vec::with_capacity(m);
    for (i, line) in lines.enumerate() {
        let line_no = i + 3;
        if rows.len() == m {
            return Err(FormatError::InconsistentDimensions(format!("more than m={m} rows")));
        }
        let mut row = Vec::new();
        for tok in line.split_whitespace() {
            let bad = || FormatError::MalformedEntry {
                line: line_no,
                token: tok.to_string(),
            };
            let (c, wt) = tok.split_once(':').ok_or_else(bad)?;
            let c: usize = c.parse().map_err(|_| bad())?;
            let wt: usize = wt.parse().map_err(|_| bad())?;
            if c >= n {
                return Err(FormatError::InconsistentDimensions(format!(
                    "line {line_no}: column {c} >= n={n}"
                )));
            }
            if wt == 0 || wt >= q {
                return Err(FormatError::WeightOutOfRange {
                    line: line_no,
                    weight: wt,
                    q,
                });
            }
            row.push((c as u32, wt as Symbol));
        }
        rows.push(row);
    }
    if rows.len() != m {
        return Err(FormatError::InconsistentDimensions(format!(
            "header says m={m}, found {} rows",
            rows.len()
        )));
    }
    Ok(SparseParityCheck::new(gf, n, rows)?)
}

fn split_checksum(text: &str) -> Result<(&str, &str), FormatError> {
    let trimmed = text.strip_suffix('\n').ok_or(FormatError::MissingChecksum)?;
    let start = trimmed.rfind('\n').map_or(0, |i| i + 1);
    let last = &trimmed[start..];
    if !last.starts_with("checksum") {
        return Err(FormatError::MissingChecksum);
    }
    Ok((&text[..start], last))
}

fn verify_checksum(body: &str, line: &str) -> Result<(), FormatError> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    let [_, alg, hex] = parts[..] else {
        return Err(FormatError::MalformedChecksum(line.to_string()));
    };
    if alg != DIGEST_ALGORITHM || hex.len() != 16 {
        return Err(FormatError::MalformedChecksum(line.to_string()));
    }
    let expected = u64::from_str_radix(hex, 16).map_err(|_| FormatError::MalformedChecksum(line.to_string()))?;
    let found = digest64(body.as_bytes());
    if expected != found {
        return Err(FormatError::ChecksumMismatch { expected, found });
    }
    Ok(())
}

pub fn write_code_file(h: &SparseParityCheck, path: impl AsRef<Path>) -> Result<(), FormatError> {
    std::fs::write(path, serialize_code(h))?;
    Ok(())
}

pub fn read_code_file(path: impl AsRef<Path>) -> Result<SparseParityCheck, FormatError> {
    parse_code(&std::fs::read_to_string(path)?)
}
