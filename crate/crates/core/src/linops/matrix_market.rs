//! Reader for Matrix Market `matrix` files holding real symmetric data.
//!
//! Both `coordinate` and `array` layouts are accepted with `real`, `integer`
//! or `pattern` fields. `symmetric` files store the lower triangle only;
//! `general` files are checked for symmetry before use.

use std::io::BufRead;
use std::path::Path;

use super::{DenseSymmetricOperator, DiagonalOperator, SymmetricOperator, SYMMETRY_TOL};
use crate::error::{Error, Result};

/// Operator produced by the reader: diagonal when possible, dense otherwise.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedOperator {
    Diagonal(DiagonalOperator),
    Dense(DenseSymmetricOperator),
}

impl SymmetricOperator for LoadedOperator {
    fn dim(&self) -> usize {
        match self {
            Self::Diagonal(d) => d.dim(),
            Self::Dense(d) => d.dim(),
        }
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        match self {
            Self::Diagonal(d) => d.apply_into(v, out),
            Self::Dense(d) => d.apply_into(v, out),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
}

struct Header {
    layout: Layout,
    field: Field,
    symmetry: Symmetry,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_header(line: &str) -> Result<Header> {
    let toks: Vec<String> = line
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" {
        return Err(parse_err(
            1,
            "expected '%%MatrixMarket matrix <layout> <field> <symmetry>'",
        ));
    }
    let layout = match toks[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(1, format!("unsupported layout '{other}'"))),
    };
    let field = match toks[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(parse_err(1, format!("unsupported field '{other}'"))),
    };
    let symmetry = match toks[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry '{other}'"))),
    };
    if field == Field::Pattern && layout == Layout::Array {
        return Err(parse_err(1, "pattern field requires coordinate layout"));
    }
    Ok(Header {
        layout,
        field,
        symmetry,
    })
}

fn number<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{tok}'")))
}

/// Non-comment lines after the header, with 1-based line numbers.
fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, l)| match l {
        Err(e) => Some(Err(Error::Io(e))),
        Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('%') => None,
        Ok(s) => Some(Ok((i + 2, s))),
    })
}

/// Reads a dense `n × n` matrix in row-major order.
fn read_dense<R: BufRead>(mut reader: R) -> Result<(usize, Vec<f64>, Symmetry)> {
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let header = parse_header(&first)?;
    let mut lines = data_lines(reader);
    let (ln, size) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing size line"))??;
    let mut toks = size.split_whitespace();
    let rows: usize = number(toks.next(), ln, "row count")?;
    let cols: usize = number(toks.next(), ln, "column count")?;
    if rows != cols {
        return Err(parse_err(
            ln,
            format!("matrix is {rows}x{cols}, not square"),
        ));
    }
    let n = rows;
    let mut a = vec![0.0; n * n];
    let sym = header.symmetry == Symmetry::Symmetric;
    match header.layout {
        Layout::Coordinate => {
            let nnz: usize = number(toks.next(), ln, "entry count")?;
            let mut seen = 0;
            for item in lines.by_ref() {
                let (ln, line) = item?;
                let mut t = line.split_whitespace();
                let i: usize = number(t.next(), ln, "row index")?;
                let j: usize = number(t.next(), ln, "column index")?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(parse_err(ln, format!("index ({i}, {j}) outside 1..={n}")));
                }
                let v = match header.field {
                    Field::Pattern => 1.0,
                    Field::Integer => number::<i64>(t.next(), ln, "value")? as f64,
                    Field::Real => number::<f64>(t.next(), ln, "value")?,
                };
                if sym && j > i {
                    return Err(parse_err(
                        ln,
                        "symmetric storage must use the lower triangle",
                    ));
                }
                let (i, j) = (i - 1, j - 1);
                a[i * n + j] += v;
                if sym && i != j {
                    a[j * n + i] += v;
                }
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_err(
                    ln,
                    format!("expected {nnz} entries, found {seen}"),
                ));
            }
        }
        Layout::Array => {
            // column-major; symmetric files list the lower triangle by column
            let mut values = Vec::new();
            for item in lines {
                let (ln, line) = item?;
                for tok in line.split_whitespace() {
                    let v = match header.field {
                        Field::Integer => number::<i64>(Some(tok), ln, "value")? as f64,
                        _ => number::<f64>(Some(tok), ln, "value")?,
                    };
                    values.push(v);
                }
            }
            let expected = if sym { n * (n + 1) / 2 } else { n * n };
            if values.len() != expected {
                return Err(parse_err(
                    ln,
                    format!("expected {expected} values, found {}", values.len()),
                ));
            }
            let mut it = values.into_iter();
            for j in 0..n {
                let start = if sym { j } else { 0 };
                for i in start..n {
                    let v = it.next().unwrap_or_default();
                    a[i * n + j] = v;
                    if sym {
                        a[j * n + i] = v;
                    }
                }
            }
        }
    }
    Ok((n, a, header.symmetry))
}

/// Parses a symmetric operator from Matrix Market text.
pub fn read_operator<R: BufRead>(reader: R) -> Result<LoadedOperator> {
    let (n, a, _) = read_dense(reader)?;
    let dense = DenseSymmetricOperator::new(n, a, SYMMETRY_TOL)?;
    Ok(match dense.as_diagonal() {
        Some(d) => LoadedOperator::Diagonal(DiagonalOperator::new(d)),
        None => LoadedOperator::Dense(dense),
    })
}

pub fn read_operator_file(path: impl AsRef<Path>) -> Result<LoadedOperator> {
    let file = std::fs::File::open(path)?;
    read_operator(std::io::BufReader::new(file))
}

/// Parses a right-hand side stored as an `n × 1` array.
pub fn read_vector<R: BufRead>(mut reader: R) -> Result<Vec<f64>> {
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let header = parse_header(&first)?;
    if header.layout != Layout::Array || header.symmetry != Symmetry::General {
        return Err(parse_err(1, "vectors must use 'array ... general'"));
    }
    let mut lines = data_lines(reader);
    let (ln, size) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing size line"))??;
    let mut toks = size.split_whitespace();
    let rows: usize = number(toks.next(), ln, "row count")?;
    let cols: usize = number(toks.next(), ln, "column count")?;
    if cols != 1 {
        return Err(parse_err(
            ln,
            format!("expected a single column, found {cols}"),
        ));
    }
    let mut out = Vec::with_capacity(rows);
    for item in lines {
        let (ln, line) = item?;
        for tok in line.split_whitespace() {
            out.push(number::<f64>(Some(tok), ln, "value")?);
        }
    }
    if out.len() != rows {
        return Err(parse_err(
            ln,
            format!("expected {rows} values, found {}", out.len()),
        ));
    }
    Ok(out)
}

pub fn read_vector_file(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path)?;
    read_vector(std::io::BufReader::new(file))
}
