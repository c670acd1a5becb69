//! MatrixMarket coordinate format (`real general`), for offline debugging.

use std::fmt::Write as _;
use std::path::Path;

use super::csr::CsrMatrix;
use crate::error::{Error, Result};

pub fn to_matrix_market(a: &CsrMatrix) -> String {
    let mut s = String::new();
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for (i, j, v) in a.triplets() {
        let _ = writeln!(s, "{} {} {:.16e}", i + 1, j + 1, v);
    }
    s
}

pub fn from_matrix_market(text: &str) -> Result<CsrMatrix> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty MatrixMarket input".into()))?;
    let lower = header.to_ascii_lowercase();
    if !lower.starts_with("%%matrixmarket matrix coordinate real") {
        return Err(Error::InvalidInput(format!("unsupported MatrixMarket header: {header}")));
    }
    let symmetric = lower.contains("symmetric");
    let mut body = lines.filter(|l| !l.trim().is_empty() && !l.starts_with('%'));
    let size = body
        .next()
        .ok_or_else(|| Error::InvalidInput("missing MatrixMarket size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::InvalidInput(format!("bad size line: {size}"))))
        .collect::<Result<_>>()?;
    let [nrows, ncols, nnz] = dims[..] else {
        return Err(Error::InvalidInput(format!("bad size line: {size}")));
    };
    let mut entries = Vec::with_capacity(nnz);
    for line in body {
        let mut it = line.split_whitespace();
        let parse_err = || Error::InvalidInput(format!("bad entry line: {line}"));
        let i: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(parse_err)?;
        let j: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(parse_err)?;
        let v: f64 = it.next().and_then(|t| t.parse().ok()).ok_or_else(parse_err)?;
        if i == 0 || j == 0 || i > nrows || j > ncols {
            return Err(Error::InvalidInput(format!("entry out of range: {line}")));
        }
        entries.push((i - 1, j - 1, v));
        if symmetric && i != j {
            entries.push((j - 1, i - 1, v));
        }
    }
    if !symmetric && entries.len() != nnz {
        return Err(Error::InvalidInput(format!(
            "expected {nnz} entries, found {}",
            entries.len()
        )));
    }
    Ok(CsrMatrix::from_triplets(nrows, ncols, entries))
}

pub fn write_matrix_market(a: &CsrMatrix, path: &Path) -> Result<()> {
    std::fs::write(path, to_matrix_market(a)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_market(path: &Path) -> Result<CsrMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_matrix_market(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let a = CsrMatrix::from_triplets(
            3,
            4,
            vec![(0, 0, 1.0 / 3.0), (1, 3, -2.5e-300), (2, 1, std::f64::consts::PI)],
        );
        let b = from_matrix_market(&to_matrix_market(&a)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn symmetric_storage_is_expanded() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 2\n2 1 -1\n";
        let a = from_matrix_market(text).unwrap();
        assert_eq!(a.to_dense(), vec![vec![2.0, -1.0], vec![-1.0, 0.0]]);
    }
}
