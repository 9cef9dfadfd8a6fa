use super::{atomic_write, HarnessError};
use crate::linalg::{c64, CsrMatrix};
use std::io::{BufRead, BufReader};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Field {
    Real,
    Integer,
    Complex,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
    Hermitian,
}

fn parse_header(line: &str) -> Result<(Field, Symmetry), String> {
    let lower = line.to_ascii_lowercase();
    let tok: Vec<&str> = lower.split_whitespace().collect();
    if tok.len() != 5 || tok[0] != "%%matrixmarket" || tok[1] != "matrix" {
        return Err(format!("expected '%%MatrixMarket matrix coordinate <field> <symmetry>', got '{line}'"));
    }
    if tok[2] != "coordinate" {
        return Err(format!("unsupported format '{}', only 'coordinate' is read", tok[2]));
    }
    let field = match tok[3] {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "complex" => Field::Complex,
        "pattern" => Field::Pattern,
        f => return Err(format!("unknown field '{f}'")),
    };
    let sym = match tok[4] {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        "hermitian" => Symmetry::Hermitian,
        s => return Err(format!("unknown symmetry '{s}'")),
    };
    if field == Field::Pattern && sym == Symmetry::Hermitian {
        return Err("pattern matrices cannot be hermitian".into());
    }
    Ok((field, sym))
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T, String> {
    let t = tok.ok_or_else(|| format!("missing {what}"))?;
    t.parse().map_err(|_| format!("cannot parse {what} '{t}'"))
}

/// Reads a coordinate-format Matrix Market file. Indices are converted to
/// 0-based, symmetric/skew/hermitian storage is expanded and duplicate
/// entries are summed.
pub fn read_matrix_market(path: &Path) -> Result<CsrMatrix, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_matrix_market_from(BufReader::new(file), path)
}

/// [`read_matrix_market`] from any reader; `path` is only used in errors.
pub fn read_matrix_market_from<R: BufRead>(reader: R, path: &Path) -> Result<CsrMatrix, HarnessError> {
    let err = |line: usize, message: String| HarnessError::Parse { path: path.to_path_buf(), line, message };
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = || -> Result<Option<(usize, String)>, HarnessError> {
        match lines.next() {
            None => Ok(None),
            Some((no, Ok(l))) => Ok(Some((no, l))),
            Some((_, Err(e))) => Err(HarnessError::io(path, e)),
        }
    };

    let (no, header) = next()?.ok_or_else(|| err(1, "empty file".into()))?;
    let (field, sym) = parse_header(&header).map_err(|m| err(no, m))?;

    let (rows, cols, nnz) = loop {
        let (no, l) = next()?.ok_or_else(|| err(no, "missing size line".into()))?;
        let t = l.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let mut it = t.split_whitespace();
        let r: usize = parse_num(it.next(), "row count").map_err(|m| err(no, m))?;
        let c: usize = parse_num(it.next(), "column count").map_err(|m| err(no, m))?;
        let z: usize = parse_num(it.next(), "entry count").map_err(|m| err(no, m))?;
        if it.next().is_some() {
            return Err(err(no, "trailing tokens on size line".into()));
        }
        if sym != Symmetry::General && r != c {
            return Err(err(no, format!("{r}x{c} matrix cannot be stored symmetrically")));
        }
        break (r, c, z);
    };

    let mut triplets = Vec::with_capacity(if sym == Symmetry::General { nnz } else { 2 * nnz });
    let mut seen = 0usize;
    while let Some((no, l)) = next()? {
        let t = l.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        if seen == nnz {
            return Err(err(no, format!("more than the declared {nnz} entries")));
        }
        let mut it = t.split_whitespace();
        let i: usize = parse_num(it.next(), "row index").map_err(|m| err(no, m))?;
        let j: usize = parse_num(it.next(), "column index").map_err(|m| err(no, m))?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err(err(no, format!("entry ({i}, {j}) outside 1..={rows} x 1..={cols}")));
        }
        let v = match field {
            Field::Pattern => c64::new(1.0, 0.0),
            Field::Real | Field::Integer => c64::new(parse_num(it.next(), "value").map_err(|m| err(no, m))?, 0.0),
            Field::Complex => c64::new(
                parse_num(it.next(), "real part").map_err(|m| err(no, m))?,
                parse_num(it.next(), "imaginary part").map_err(|m| err(no, m))?,
            ),
        };
        if it.next().is_some() {
            return Err(err(no, "trailing tokens after entry".into()));
        }
        let (i, j) = (i - 1, j - 1);
        if sym == Symmetry::SkewSymmetric && i == j {
            return Err(err(no, "skew-symmetric file stores a diagonal entry".into()));
        }
        triplets.push((i, j, v));
        if i != j {
            let mirrored = match sym {
                Symmetry::General => None,
                Symmetry::Symmetric => Some(v),
                Symmetry::SkewSymmetric => Some(-v),
                Symmetry::Hermitian => Some(v.conj()),
            };
            if let Some(m) = mirrored {
                triplets.push((j, i, m));
            }
        }
        seen += 1;
    }
    if seen != nnz {
        return Err(err(0, format!("declared {nnz} entries, found {seen}")));
    }
    CsrMatrix::from_triplets(rows, cols, &triplets).map_err(|e| err(0, e.to_string()))
}

/// Writes a general coordinate file, `real` when every stored value is
/// real and `complex` otherwise, values in round-trip precision.
pub fn write_matrix_market(a: &CsrMatrix, path: &Path) -> Result<(), HarnessError> {
    let complex = a.values().iter().any(|v| v.im != 0.0);
    atomic_write(path, |w| {
        writeln!(w, "%%MatrixMarket matrix coordinate {} general", if complex { "complex" } else { "real" })?;
        writeln!(w, "{} {} {}", a.rows(), a.cols(), a.nnz())?;
        for i in 0..a.rows() {
            for (j, v) in a.row(i) {
                if complex {
                    writeln!(w, "{} {} {:.17e} {:.17e}", i + 1, j + 1, v.re, v.im)?;
                } else {
                    writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v.re)?;
                }
            }
        }
        Ok(())
    })
}
