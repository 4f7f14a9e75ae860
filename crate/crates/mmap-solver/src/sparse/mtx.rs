//! Matrix Market reader and writer.
//!
//! Reading accepts `coordinate` (real, integer, pattern; general, symmetric,
//! skew-symmetric) and `array` (real, integer; general). Writing produces
//! `coordinate real general` for matrices and `array real general` for
//! vectors. Values are written with Rust's shortest round-trip formatting,
//! so a write followed by a read reproduces every bit.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::csr::{assemble, CsrMatrix};

/// Largest row or column count accepted from a header.
pub const MAX_DIM: usize = 1 << 24;

#[derive(Debug, Error)]
pub enum MtxError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("missing %%MatrixMarket header")]
    MissingHeader,
    #[error("line {line}: malformed header: {msg}")]
    BadHeader { line: usize, msg: String },
    #[error("unsupported Matrix Market variant: {0}")]
    Unsupported(String),
    #[error("line {line}: malformed size line")]
    BadSize { line: usize },
    #[error("line {line}: dimensions {rows} x {cols} exceed the limit {MAX_DIM}")]
    TooLarge {
        line: usize,
        rows: usize,
        cols: usize,
    },
    #[error("line {line}: malformed entry")]
    BadEntry { line: usize },
    #[error("line {line}: non-finite value")]
    NonFinite { line: usize },
    #[error("line {line}: index ({row}, {col}) out of range")]
    OutOfRange { line: usize, row: usize, col: usize },
    #[error("line {line}: entry ({row}, {col}) lies above the diagonal of a {symmetry} matrix")]
    UpperTriangle {
        line: usize,
        row: usize,
        col: usize,
        symmetry: &'static str,
    },
    #[error("expected {expected} entries, found {found}")]
    Count { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

/// Contents of a Matrix Market file.
#[derive(Debug, Clone, PartialEq)]
pub enum MtxData {
    Sparse(CsrMatrix),
    /// Dense data in the file's column-major order.
    Dense {
        rows: usize,
        cols: usize,
        values: Vec<f64>,
    },
}

struct Lines<R> {
    inner: R,
    buf: String,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    /// Next line that is neither blank nor a comment.
    fn next_data(&mut self) -> Result<Option<(usize, String)>, MtxError> {
        loop {
            self.buf.clear();
            if self.inner.read_line(&mut self.buf)? == 0 {
                return Ok(None);
            }
            self.line += 1;
            let t = self.buf.trim();
            if !t.is_empty() && !t.starts_with('%') {
                return Ok(Some((self.line, t.to_string())));
            }
        }
    }
}

fn parse_header(line: &str, n: usize) -> Result<(Layout, Field, Symmetry), MtxError> {
    let bad = |msg: &str| MtxError::BadHeader {
        line: n,
        msg: msg.to_string(),
    };
    let words: Vec<String> = line
        .split_whitespace()
        .map(|w| w.to_ascii_lowercase())
        .collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" {
        return Err(bad(
            "expected `%%MatrixMarket matrix <format> <field> <symmetry>`",
        ));
    }
    if words[1] != "matrix" {
        return Err(MtxError::Unsupported(format!("object `{}`", words[1])));
    }
    let layout = match words[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(MtxError::Unsupported(format!("format `{other}`"))),
    };
    let field = match words[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(MtxError::Unsupported(format!("field `{other}`"))),
    };
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(MtxError::Unsupported(format!("symmetry `{other}`"))),
    };
    if layout == Layout::Array && (field == Field::Pattern || symmetry != Symmetry::General) {
        return Err(MtxError::Unsupported(
            "array files must be real/integer general".into(),
        ));
    }
    Ok((layout, field, symmetry))
}

fn parse_value(tok: Option<&str>, field: Field, line: usize) -> Result<f64, MtxError> {
    let tok = tok.ok_or(MtxError::BadEntry { line })?;
    let v = match field {
        Field::Integer => tok
            .parse::<i64>()
            .map_err(|_| MtxError::BadEntry { line })? as f64,
        _ => tok
            .parse::<f64>()
            .map_err(|_| MtxError::BadEntry { line })?,
    };
    if !v.is_finite() {
        return Err(MtxError::NonFinite { line });
    }
    Ok(v)
}

fn parse_usize(tok: Option<&str>, err: MtxError) -> Result<usize, MtxError> {
    tok.and_then(|t| t.parse::<usize>().ok()).ok_or(err)
}

/// Reads a Matrix Market stream.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<MtxData, MtxError> {
    let mut lines = Lines {
        inner: reader,
        buf: String::new(),
        line: 0,
    };
    let mut first = String::new();
    if lines.inner.read_line(&mut first)? == 0 {
        return Err(MtxError::MissingHeader);
    }
    lines.line = 1;
    if !first.trim_start().starts_with("%%") {
        return Err(MtxError::MissingHeader);
    }
    let (layout, field, symmetry) = parse_header(&first, 1)?;

    let (ln, size_line) = lines.next_data()?.ok_or(MtxError::BadSize {
        line: lines.line + 1,
    })?;
    let mut it = size_line.split_whitespace();
    let rows = parse_usize(it.next(), MtxError::BadSize { line: ln })?;
    let cols = parse_usize(it.next(), MtxError::BadSize { line: ln })?;
    let declared = match layout {
        Layout::Coordinate => Some(parse_usize(it.next(), MtxError::BadSize { line: ln })?),
        Layout::Array => None,
    };
    if it.next().is_some() {
        return Err(MtxError::BadSize { line: ln });
    }
    if rows > MAX_DIM || cols > MAX_DIM {
        return Err(MtxError::TooLarge {
            line: ln,
            rows,
            cols,
        });
    }
    if symmetry != Symmetry::General && rows != cols {
        return Err(MtxError::BadSize { line: ln });
    }

    match layout {
        Layout::Array => {
            let expected = rows * cols;
            let mut values = Vec::new();
            while let Some((ln, l)) = lines.next_data()? {
                let mut toks = l.split_whitespace();
                let v = parse_value(toks.next(), field, ln)?;
                if toks.next().is_some() {
                    return Err(MtxError::BadEntry { line: ln });
                }
                if values.len() == expected {
                    return Err(MtxError::Count {
                        expected,
                        found: expected + 1,
                    });
                }
                values.push(v);
            }
            if values.len() != expected {
                return Err(MtxError::Count {
                    expected,
                    found: values.len(),
                });
            }
            Ok(MtxData::Dense { rows, cols, values })
        }
        Layout::Coordinate => {
            let expected = declared.unwrap_or(0);
            let mut triplets = Vec::new();
            let mut found = 0usize;
            while let Some((ln, l)) = lines.next_data()? {
                found += 1;
                if found > expected {
                    return Err(MtxError::Count { expected, found });
                }
                let mut toks = l.split_whitespace();
                let r = parse_usize(toks.next(), MtxError::BadEntry { line: ln })?;
                let c = parse_usize(toks.next(), MtxError::BadEntry { line: ln })?;
                let v = match field {
                    Field::Pattern => 1.0,
                    _ => parse_value(toks.next(), field, ln)?,
                };
                if toks.next().is_some() {
                    return Err(MtxError::BadEntry { line: ln });
                }
                if r == 0 || c == 0 || r > rows || c > cols {
                    return Err(MtxError::OutOfRange {
                        line: ln,
                        row: r,
                        col: c,
                    });
                }
                let (r, c) = (r - 1, c - 1);
                match symmetry {
                    Symmetry::General => triplets.push((r, c, v)),
                    Symmetry::Symmetric => {
                        if c > r {
                            return Err(MtxError::UpperTriangle {
                                line: ln,
                                row: r + 1,
                                col: c + 1,
                                symmetry: "symmetric",
                            });
                        }
                        triplets.push((r, c, v));
                        if r != c {
                            triplets.push((c, r, v));
                        }
                    }
                    Symmetry::Skew => {
                        if c >= r {
                            return Err(MtxError::UpperTriangle {
                                line: ln,
                                row: r + 1,
                                col: c + 1,
                                symmetry: "skew-symmetric",
                            });
                        }
                        triplets.push((r, c, v));
                        triplets.push((c, r, -v));
                    }
                }
            }
            if found != expected {
                return Err(MtxError::Count { expected, found });
            }
            let m = assemble(rows, cols, &triplets).expect("indices were range-checked");
            Ok(MtxData::Sparse(m))
        }
    }
}

/// Reads a file that must hold a sparse (coordinate) matrix.
pub fn read_csr<R: BufRead>(reader: R) -> Result<CsrMatrix, MtxError> {
    match read_matrix_market(reader)? {
        MtxData::Sparse(m) => Ok(m),
        MtxData::Dense { .. } => Err(MtxError::Unsupported("expected a coordinate matrix".into())),
    }
}

pub fn write_matrix_market<W: Write>(mut w: W, a: &CsrMatrix) -> io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for (r, c, v) in a.triplets() {
        writeln!(w, "{} {} {:e}", r + 1, c + 1, v)?;
    }
    Ok(())
}

pub fn write_vector<W: Write>(mut w: W, v: &[f64]) -> io::Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} 1", v.len())?;
    for x in v {
        writeln!(w, "{x:e}")?;
    }
    Ok(())
}
