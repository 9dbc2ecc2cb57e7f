//! Matrix Market coordinate files and plain-text vectors.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::{DenseVector, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads a Matrix Market coordinate file (`real`, `integer` or `pattern`;
/// `general` or `symmetric`).
pub fn load_matrix(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    read_matrix_market(File::open(path)?)
}

/// Parses Matrix Market coordinate data. Symmetric storage is expanded,
/// duplicates are summed and explicit zeros dropped.
pub fn read_matrix_market<R: Read>(reader: R) -> Result<SparseMatrix> {
    let reader = BufReader::new(reader);
    let mut lines = reader.lines().enumerate();

    let (_, banner) = lines.next().ok_or_else(|| parse_error(1, "empty file"))?;
    let banner = banner?;
    let tokens: Vec<String> = banner.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_error(1, "missing %%MatrixMarket matrix banner"));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_error(1, format!("unsupported format '{}'", tokens[2])));
    }
    let pattern = match tokens[3].as_str() {
        "real" | "integer" => false,
        "pattern" => true,
        other => return Err(parse_error(1, format!("unsupported field '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(parse_error(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_error(line_no, "size line must have three integers"));
                }
                let parse = |s: &str| s.parse::<usize>().map_err(|_| parse_error(line_no, format!("bad integer '{s}'")));
                let (r, c, nnz) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                if symmetry == Symmetry::Symmetric && r != c {
                    return Err(parse_error(line_no, "symmetric matrix must be square"));
                }
                size = Some((r, c, nnz));
                triplets.reserve(nnz);
            }
            Some((rows, cols, _)) => {
                let want = if pattern { 2 } else { 3 };
                if fields.len() < want {
                    return Err(parse_error(line_no, format!("expected {want} fields")));
                }
                let index = |s: &str, bound: usize| -> Result<usize> {
                    let v = s.parse::<usize>().map_err(|_| parse_error(line_no, format!("bad index '{s}'")))?;
                    if v == 0 || v > bound {
                        return Err(parse_error(line_no, format!("index {v} out of range 1..={bound}")));
                    }
                    Ok(v - 1)
                };
                let i = index(fields[0], rows)?;
                let j = index(fields[1], cols)?;
                let value = if pattern {
                    1.0
                } else {
                    let v = fields[2]
                        .parse::<f64>()
                        .map_err(|_| parse_error(line_no, format!("bad value '{}'", fields[2])))?;
                    if !v.is_finite() {
                        return Err(parse_error(line_no, "non-finite value"));
                    }
                    v
                };
                triplets.push((i, j, value));
                if symmetry == Symmetry::Symmetric && i != j {
                    triplets.push((j, i, value));
                }
            }
        }
    }
    let (rows, cols, declared) = size.ok_or_else(|| parse_error(1, "missing size line"))?;
    let stored = match symmetry {
        Symmetry::General => triplets.len(),
        Symmetry::Symmetric => triplets.iter().filter(|t| t.0 >= t.1).count(),
    };
    if stored != declared {
        return Err(Error::DimensionMismatch {
            expected: declared,
            found: stored,
        });
    }
    SparseMatrix::from_triplets(rows, cols, &triplets)
}

/// Writes `a` as a general real coordinate file with 17 significant digits.
pub fn write_matrix_market<W: Write>(a: &SparseMatrix, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_matrix(a: &SparseMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_matrix_market(a, File::create(path)?)
}

/// Reads whitespace-separated reals (one per line by convention).
pub fn read_vector<R: Read>(reader: R) -> Result<DenseVector> {
    let reader = BufReader::new(reader);
    let mut values = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') || trimmed.starts_with('#') {
            continue;
        }
        for token in trimmed.split_whitespace() {
            let v = token
                .parse::<f64>()
                .map_err(|_| parse_error(idx + 1, format!("bad value '{token}'")))?;
            if !v.is_finite() {
                return Err(parse_error(idx + 1, "non-finite value"));
            }
            values.push(v);
        }
    }
    DenseVector::new(values)
}

pub fn load_vector(path: impl AsRef<Path>) -> Result<DenseVector> {
    read_vector(File::open(path)?)
}

/// Writes one value per line in shortest round-trip form.
pub fn write_vector<W: Write>(x: &[f64], writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for v in x {
        writeln!(w, "{v:e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_vector(x: &[f64], path: impl AsRef<Path>) -> Result<()> {
    write_vector(x, File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<SparseMatrix> {
        read_matrix_market(text.as_bytes())
    }

    #[test]
    fn two_by_two() {
        let m = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 1.0\n2 1 1.0\n").unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(1, 0), 1.0);
    }

    #[test]
    fn empty_coordinate_list() {
        let m = parse("%%MatrixMarket matrix coordinate real general\n% comment\n3 3 0\n").unwrap();
        assert_eq!((m.n_rows(), m.n_cols(), m.nnz()), (3, 3, 0));
    }

    #[test]
    fn symmetric_expanded() {
        let m = parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 4\n2 1 -1\n").unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 1), -1.0);
    }

    #[test]
    fn bad_value_reports_line() {
        let err = parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n\n1 x 1.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err:?}");
    }

    #[test]
    fn count_mismatch() {
        let err = parse("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.0\n").unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 3, found: 1 }));
    }

    #[test]
    fn round_trip() {
        let m = SparseMatrix::from_triplets(3, 2, &[(0, 1, 0.1), (2, 0, 1.0 / 3.0)]).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&m, &mut buf).unwrap();
        assert_eq!(read_matrix_market(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn vector_round_trip() {
        let x = vec![1.0, -0.1, 1e-300, 2.0 / 3.0];
        let mut buf = Vec::new();
        write_vector(&x, &mut buf).unwrap();
        assert_eq!(read_vector(buf.as_slice()).unwrap().as_slice(), x.as_slice());
    }
}
