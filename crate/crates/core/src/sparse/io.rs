//! Matrix Market reader/writer (coordinate and array, real, general).
//! Indices are 1-based on disk and 0-based in memory.

use std::io::{BufRead, Write};

use crate::error::{Result, SolverError};
use crate::sparse::CsrMatrix;

fn mm_err(line: usize, msg: impl std::fmt::Display) -> SolverError {
    SolverError::MatrixMarket(format!("line {line}: {msg}"))
}

/// Writes `a` in coordinate real general format with 17 significant digits.
pub fn write_matrix<W: Write>(mut w: W, a: &CsrMatrix) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for i in 0..a.nrows() {
        let (c, v) = a.row(i);
        for (&j, &x) in c.iter().zip(v) {
            writeln!(w, "{} {} {:.16e}", i + 1, j + 1, x)?;
        }
    }
    Ok(())
}

/// Writes a dense vector in array real general format (one column).
pub fn write_vector<W: Write>(mut w: W, v: &[f64]) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} 1", v.len())?;
    for x in v {
        writeln!(w, "{x:.16e}")?;
    }
    Ok(())
}

struct Header {
    array: bool,
    symmetric: bool,
}

fn parse_header(line: &str) -> Result<Header> {
    let toks: Vec<String> = line.split_whitespace().map(|t| t.to_lowercase()).collect();
    if toks.len() < 5 || toks[0] != "%%matrixmarket" || toks[1] != "matrix" {
        return Err(mm_err(1, "missing %%MatrixMarket matrix header"));
    }
    let array = match toks[2].as_str() {
        "coordinate" => false,
        "array" => true,
        other => return Err(mm_err(1, format!("unsupported format '{other}'"))),
    };
    if toks[3] != "real" && toks[3] != "integer" {
        return Err(mm_err(1, format!("unsupported field '{}'", toks[3])));
    }
    let symmetric = match toks[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(mm_err(1, format!("unsupported symmetry '{other}'"))),
    };
    Ok(Header { array, symmetric })
}

/// Data lines with their 1-based line numbers, skipping comments and blanks.
fn data_lines<R: BufRead>(r: R) -> Result<(String, Vec<(usize, String)>)> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| mm_err(1, "empty file"))??;
    let mut out = Vec::new();
    for (k, l) in lines.enumerate() {
        let l = l?;
        let t = l.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        out.push((k + 2, t.to_string()));
    }
    Ok((header, out))
}

fn parse_usize(tok: Option<&str>, line: usize) -> Result<usize> {
    tok.ok_or_else(|| mm_err(line, "missing integer"))?
        .parse::<usize>()
        .map_err(|e| mm_err(line, e))
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    tok.ok_or_else(|| mm_err(line, "missing value"))?
        .parse::<f64>()
        .map_err(|e| mm_err(line, e))
}

pub fn read_matrix<R: BufRead>(r: R) -> Result<CsrMatrix> {
    let (header, lines) = data_lines(r)?;
    let h = parse_header(&header)?;
    let (size_line, size) = lines.first().ok_or_else(|| mm_err(2, "missing size line"))?;
    let mut it = size.split_whitespace();
    let nrows = parse_usize(it.next(), *size_line)?;
    let ncols = parse_usize(it.next(), *size_line)?;
    let mut trip = Vec::new();
    if h.array {
        let body = &lines[1..];
        if body.len() != nrows * ncols {
            return Err(mm_err(
                *size_line,
                format!("expected {} values, found {}", nrows * ncols, body.len()),
            ));
        }
        // column-major on disk
        for (k, (ln, t)) in body.iter().enumerate() {
            let v = parse_f64(t.split_whitespace().next(), *ln)?;
            if v != 0.0 {
                trip.push((k % nrows, k / nrows, v));
            }
        }
    } else {
        let nnz = parse_usize(it.next(), *size_line)?;
        let body = &lines[1..];
        if body.len() != nnz {
            return Err(mm_err(
                *size_line,
                format!("expected {nnz} entries, found {}", body.len()),
            ));
        }
        for (ln, t) in body {
            let mut it = t.split_whitespace();
            let i = parse_usize(it.next(), *ln)?;
            let j = parse_usize(it.next(), *ln)?;
            let v = parse_f64(it.next(), *ln)?;
            if i == 0 || j == 0 || i > nrows || j > ncols {
                return Err(mm_err(*ln, format!("index ({i}, {j}) out of range")));
            }
            trip.push((i - 1, j - 1, v));
            if h.symmetric && i != j {
                trip.push((j - 1, i - 1, v));
            }
        }
    }
    CsrMatrix::from_triplets(nrows, ncols, &trip)
}

/// Reads a vector stored either as an `n x 1` array or an `n x 1` coordinate matrix.
pub fn read_vector<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let (header, lines) = data_lines(r)?;
    let h = parse_header(&header)?;
    let (size_line, size) = lines.first().ok_or_else(|| mm_err(2, "missing size line"))?;
    let mut it = size.split_whitespace();
    let nrows = parse_usize(it.next(), *size_line)?;
    let ncols = parse_usize(it.next(), *size_line)?;
    if ncols != 1 {
        return Err(mm_err(*size_line, "vector must have exactly one column"));
    }
    let mut v = vec![0.0; nrows];
    let body = &lines[1..];
    if h.array {
        if body.len() != nrows {
            return Err(mm_err(
                *size_line,
                format!("expected {nrows} values, found {}", body.len()),
            ));
        }
        for (k, (ln, t)) in body.iter().enumerate() {
            v[k] = parse_f64(t.split_whitespace().next(), *ln)?;
        }
    } else {
        for (ln, t) in body {
            let mut it = t.split_whitespace();
            let i = parse_usize(it.next(), *ln)?;
            let _j = parse_usize(it.next(), *ln)?;
            let x = parse_f64(it.next(), *ln)?;
            if i == 0 || i > nrows {
                return Err(mm_err(*ln, format!("index {i} out of range")));
            }
            v[i - 1] += x;
        }
    }
    Ok(v)
}

pub fn read_matrix_file(path: impl AsRef<std::path::Path>) -> Result<CsrMatrix> {
    let f =
        std::fs::File::open(path.as_ref()).map_err(|e| SolverError::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_matrix(std::io::BufReader::new(f))
}

pub fn read_vector_file(path: impl AsRef<std::path::Path>) -> Result<Vec<f64>> {
    let f =
        std::fs::File::open(path.as_ref()).map_err(|e| SolverError::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_vector(std::io::BufReader::new(f))
}

pub fn write_matrix_file(path: impl AsRef<std::path::Path>, a: &CsrMatrix) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_matrix(&mut w, a)?;
    w.flush()?;
    Ok(())
}

pub fn write_vector_file(path: impl AsRef<std::path::Path>, v: &[f64]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_vector(&mut w, v)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_roundtrip_is_bit_exact() {
        let a = CsrMatrix::from_dense(&[
            vec![0.1, 0.0, -1.0 / 3.0],
            vec![0.0, 1e-300, 0.0],
            vec![std::f64::consts::PI, 0.0, 7.0],
        ]);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &a).unwrap();
        let b = read_matrix(buf.as_slice()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn vector_roundtrip_and_coordinate_vectors() {
        let v = vec![1.0 / 7.0, -2.5e-17, 3.0];
        let mut buf = Vec::new();
        write_vector(&mut buf, &v).unwrap();
        assert_eq!(read_vector(buf.as_slice()).unwrap(), v);
        let txt = "%%MatrixMarket matrix coordinate real general\n3 1 1\n2 1 4.5\n";
        assert_eq!(read_vector(txt.as_bytes()).unwrap(), vec![0.0, 4.5, 0.0]);
    }

    #[test]
    fn symmetric_files_are_expanded() {
        let txt = "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 2\n2 1 -1\n";
        let a = read_matrix(txt.as_bytes()).unwrap();
        assert_eq!(a.to_dense(), vec![vec![2.0, -1.0], vec![-1.0, 0.0]]);
    }

    #[test]
    fn malformed_input_reports_line() {
        let txt = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        let e = read_matrix(txt.as_bytes()).unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        assert!(read_matrix("garbage\n".as_bytes()).is_err());
    }
}
