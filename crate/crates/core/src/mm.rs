//! Matrix Market coordinate reader/writer (real, general and symmetric).
//!
//! Symmetric files are expanded to full storage on load. Vectors travel as
//! n-by-1 coordinate matrices.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::{SparseColumnMatrix, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn parse_header(line: &str) -> Result<Symmetry> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%MatrixMarket" {
        return Err(Error::MatrixMarket(
            "header must start with %%MatrixMarket".into(),
        ));
    }
    if fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(Error::MatrixMarket(
            "only 'matrix coordinate' files are supported".into(),
        ));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(Error::MatrixMarket(format!(
            "unsupported field type '{}'; expected real",
            fields[3]
        )));
    }
    match fields[4] {
        "general" => Ok(Symmetry::General),
        "symmetric" => Ok(Symmetry::Symmetric),
        other => Err(Error::MatrixMarket(format!(
            "unsupported symmetry '{other}'; expected general or symmetric"
        ))),
    }
}

/// Reads a sparse matrix from a Matrix Market coordinate file.
pub fn read_matrix(path: &Path) -> Result<SparseColumnMatrix> {
    let file = File::open(path)?;
    let mut lines = BufReader::new(file).lines();

    let header = lines
        .next()
        .ok_or_else(|| Error::MatrixMarket("empty file".into()))??;
    let symmetry = parse_header(&header)?;

    let mut dims: Option<(usize, usize, usize)> = None;
    let mut triples: Vec<(usize, usize, f64)> = Vec::new();

    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if dims.is_none() {
            if fields.len() != 3 {
                return Err(Error::MatrixMarket(format!(
                    "malformed size line: '{trimmed}'"
                )));
            }
            let rows = fields[0]
                .parse::<usize>()
                .map_err(|_| Error::MatrixMarket("cannot parse row count".into()))?;
            let cols = fields[1]
                .parse::<usize>()
                .map_err(|_| Error::MatrixMarket("cannot parse column count".into()))?;
            let nnz = fields[2]
                .parse::<usize>()
                .map_err(|_| Error::MatrixMarket("cannot parse nonzero count".into()))?;
            if rows == 0 || cols == 0 {
                return Err(Error::MatrixMarket("zero dimension".into()));
            }
            dims = Some((rows, cols, nnz));
            triples.reserve(nnz);
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::MatrixMarket(format!(
                "malformed entry line: '{trimmed}'"
            )));
        }
        let i = fields[0]
            .parse::<usize>()
            .map_err(|_| Error::MatrixMarket("cannot parse row index".into()))?;
        let j = fields[1]
            .parse::<usize>()
            .map_err(|_| Error::MatrixMarket("cannot parse column index".into()))?;
        let v = fields[2]
            .parse::<f64>()
            .map_err(|_| Error::MatrixMarket("cannot parse value".into()))?;
        let (rows, cols, _) = dims.expect("size line parsed before entries");
        if i < 1 || i > rows || j < 1 || j > cols {
            return Err(Error::MatrixMarket(format!(
                "entry ({i}, {j}) outside {rows}x{cols}"
            )));
        }
        triples.push((i - 1, j - 1, v));
    }

    let (rows, cols, declared_nnz) = dims.ok_or_else(|| Error::MatrixMarket("missing size line".into()))?;
    if triples.len() != declared_nnz {
        return Err(Error::MatrixMarket(format!(
            "declared {declared_nnz} entries, found {}",
            triples.len()
        )));
    }

    let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); cols];
    for &(i, j, v) in &triples {
        per_col[j].push((i, v));
        if symmetry == Symmetric && i != j {
            per_col[i].push((j, v));
        }
    }
    use Symmetry::Symmetric;

    let columns: Vec<SparseVector> = per_col
        .into_iter()
        .enumerate()
        .map(|(j, pairs)| {
            SparseVector::from_pairs(rows, pairs).map_err(|e| {
                Error::MatrixMarket(format!("column {}: {e}", j + 1))
            })
        })
        .collect::<Result<_>>()?;

    let m = SparseColumnMatrix::new(rows, columns)?;
    if symmetry == Symmetric {
        m.with_symmetric_flag()
    } else {
        Ok(m)
    }
}

/// Writes a sparse matrix in Matrix Market coordinate format.
///
/// Matrices flagged symmetric are written as their lower triangle with the
/// `symmetric` qualifier; everything else is written `general`.
pub fn write_matrix(path: &Path, m: &SparseColumnMatrix) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    let symmetric = m.is_symmetric_flagged();

    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for j in 0..m.cols() {
        for (&i, &v) in m.col(j).iter() {
            if symmetric && i < j {
                continue;
            }
            entries.push((i, j, v));
        }
    }

    writeln!(
        w,
        "%%MatrixMarket matrix coordinate real {}",
        if symmetric { "symmetric" } else { "general" }
    )?;
    writeln!(w, "{} {} {}", m.rows(), m.cols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an n-by-1 coordinate file as a sparse vector.
pub fn read_vector(path: &Path) -> Result<SparseVector> {
    let m = read_matrix(path)?;
    if m.cols() != 1 {
        return Err(Error::MatrixMarket(format!(
            "expected a single-column vector, got {} columns",
            m.cols()
        )));
    }
    Ok(m.col(0).clone())
}

/// Writes a sparse vector as an n-by-1 coordinate file.
pub fn write_vector(path: &Path, x: &SparseVector) -> Result<()> {
    let m = SparseColumnMatrix::new(x.dim(), vec![x.clone()])?;
    write_matrix(path, &m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::col_norm1;

    #[test]
    fn roundtrip_general() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.mtx");
        let cols = vec![
            SparseVector::new(3, vec![0, 2], vec![1.5, -2.0]).unwrap(),
            SparseVector::new(3, vec![1], vec![0.25]).unwrap(),
        ];
        let m = SparseColumnMatrix::new(3, cols).unwrap();
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn symmetric_expands_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.mtx");
        std::fs::write(
            &path,
            "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 3\n1 1 2.0\n3 1 -1.0\n2 2 4.0\n",
        )
        .unwrap();
        let m = read_matrix(&path).unwrap();
        assert!(m.is_symmetric_flagged());
        assert_eq!(m.col(0).to_dense(), vec![2.0, 0.0, -1.0]);
        assert_eq!(m.col(2).to_dense(), vec![-1.0, 0.0, 0.0]);
    }

    #[test]
    fn symmetric_roundtrip_preserves_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.mtx");
        let cols = vec![
            SparseVector::new(2, vec![0, 1], vec![1.0, 3.0]).unwrap(),
            SparseVector::new(2, vec![0, 1], vec![3.0, 2.0]).unwrap(),
        ];
        let m = SparseColumnMatrix::new(2, cols)
            .unwrap()
            .with_symmetric_flag()
            .unwrap();
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn vector_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.mtx");
        let x = SparseVector::new(10, vec![2, 7], vec![0.5, -0.125]).unwrap();
        write_vector(&path, &x).unwrap();
        let back = read_vector(&path).unwrap();
        assert_eq!(back, x);
        assert_eq!(col_norm1(&back), 0.625);
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.mtx");
        std::fs::write(&path, "not a matrix\n").unwrap();
        assert!(read_matrix(&path).is_err());

        std::fs::write(
            &path,
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
        )
        .unwrap();
        assert!(read_matrix(&path).is_err());
    }
}
