//! Matrix Market reader and writer.
//!
//! Coordinate files become [`CsrMatrix`], array files become dense. Real,
//! integer and pattern fields are accepted with general, symmetric or
//! skew-symmetric storage; duplicate coordinate entries are summed.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{CsrMatrix, Dense, MatrixHandle};

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
    SkewSymmetric,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_header(line: &str) -> Result<(Layout, Field, Symmetry)> {
    let tokens: Vec<String> = line.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix <layout> <field> <symmetry>'"));
    }
    if tokens[1] != "matrix" {
        return Err(Error::UnsupportedFormat(format!("object '{}'", tokens[1])));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(1, format!("unknown layout '{other}'"))),
    };
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" if layout == Layout::Coordinate => Field::Pattern,
        other => return Err(Error::UnsupportedFormat(format!("{other} field"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(Error::UnsupportedFormat(format!("{other} symmetry"))),
    };
    Ok((layout, field, symmetry))
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{tok}'")))
}

fn parse_value(tok: Option<&str>, line: usize) -> Result<f64> {
    let v: f64 = parse_num(tok, line, "value")?;
    if !v.is_finite() {
        return Err(parse_err(line, "non-finite value"));
    }
    Ok(v)
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<MatrixHandle> {
    let file = File::open(path.as_ref())?;
    parse_matrix_market(BufReader::new(file))
}

pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<MatrixHandle> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let (layout, field, symmetry) = parse_header(&header?)?;

    let mut body = lines.filter_map(|(no, l)| match l {
        Ok(s) => {
            let t = s.trim();
            if t.is_empty() || t.starts_with('%') {
                None
            } else {
                Some(Ok((no, t.to_string())))
            }
        }
        Err(e) => Some(Err(Error::from(e))),
    });

    let (size_line, size) = body.next().ok_or_else(|| parse_err(1, "missing size line"))??;
    let mut it = size.split_whitespace();
    let nrows: usize = parse_num(it.next(), size_line, "row count")?;
    let ncols: usize = parse_num(it.next(), size_line, "column count")?;
    if symmetry != Symmetry::General && nrows != ncols {
        return Err(parse_err(size_line, "symmetric storage requires a square matrix"));
    }

    match layout {
        Layout::Coordinate => {
            let nnz: usize = parse_num(it.next(), size_line, "entry count")?;
            let mut triplets = Vec::with_capacity(if symmetry == Symmetry::General { nnz } else { 2 * nnz });
            let mut seen = 0usize;
            for entry in body {
                let (no, text) = entry?;
                if seen == nnz {
                    return Err(parse_err(no, format!("more than the declared {nnz} entries")));
                }
                let mut it = text.split_whitespace();
                let i: usize = parse_num(it.next(), no, "row index")?;
                let j: usize = parse_num(it.next(), no, "column index")?;
                if i == 0 || j == 0 || i > nrows || j > ncols {
                    return Err(parse_err(no, format!("index ({i}, {j}) outside {nrows}×{ncols}")));
                }
                let v = match field {
                    Field::Pattern => 1.0,
                    _ => parse_value(it.next(), no)?,
                };
                let (i, j) = (i - 1, j - 1);
                triplets.push((i, j, v));
                if i != j {
                    match symmetry {
                        Symmetry::General => {}
                        Symmetry::Symmetric => triplets.push((j, i, v)),
                        Symmetry::SkewSymmetric => triplets.push((j, i, -v)),
                    }
                } else if symmetry == Symmetry::SkewSymmetric && v != 0.0 {
                    return Err(parse_err(no, "nonzero diagonal in skew-symmetric storage"));
                }
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_err(size_line, format!("declared {nnz} entries, found {seen}")));
            }
            Ok(CsrMatrix::from_triplets(nrows, ncols, &triplets)?.into())
        }
        Layout::Array => {
            // Column-major; symmetric storage lists the lower triangle only.
            let positions: Vec<(usize, usize)> = (0..ncols)
                .flat_map(|j| {
                    let start = match symmetry {
                        Symmetry::General => 0,
                        Symmetry::Symmetric => j,
                        Symmetry::SkewSymmetric => j + 1,
                    };
                    (start..nrows).map(move |i| (i, j))
                })
                .collect();
            let mut a = Dense::zeros(nrows, ncols);
            let mut k = 0usize;
            for entry in body {
                let (no, text) = entry?;
                for tok in text.split_whitespace() {
                    let &(i, j) = positions
                        .get(k)
                        .ok_or_else(|| parse_err(no, format!("more than the expected {} values", positions.len())))?;
                    let v = parse_value(Some(tok), no)?;
                    a[(i, j)] = v;
                    match symmetry {
                        Symmetry::General => {}
                        Symmetry::Symmetric => a[(j, i)] = v,
                        Symmetry::SkewSymmetric => a[(j, i)] = -v,
                    }
                    k += 1;
                }
            }
            if k != positions.len() {
                return Err(parse_err(size_line, format!("expected {} values, found {k}", positions.len())));
            }
            Ok(a.into())
        }
    }
}

/// Writes sparse input in coordinate layout and dense input in array layout,
/// both `real general`.
pub fn write_matrix_market(path: impl AsRef<Path>, a: &MatrixHandle) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    write_matrix_market_to(&mut out, a)?;
    out.flush()?;
    Ok(())
}

pub fn write_matrix_market_to<W: Write>(out: &mut W, a: &MatrixHandle) -> Result<()> {
    match a {
        MatrixHandle::Csr(c) => {
            writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
            writeln!(out, "{} {} {}", c.nrows(), c.ncols(), c.nnz())?;
            for (i, j, v) in c.iter() {
                writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
            }
        }
        MatrixHandle::Dense(d) => {
            writeln!(out, "%%MatrixMarket matrix array real general")?;
            writeln!(out, "{} {}", d.nrows(), d.ncols())?;
            for v in d.iter() {
                writeln!(out, "{v:e}")?;
            }
        }
    }
    Ok(())
}
