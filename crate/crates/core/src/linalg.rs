//! Small dense factorizations backing the k-by-k solves.
//!
//! Thin wrappers over nalgebra so the rest of the crate works in terms of
//! [`DenseMatrix`]. Everything here targets k <= ~10 projected matrices plus
//! the dense reference eigensolver.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sparse::DenseMatrix;

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

pub fn from_na(m: &DMatrix<f64>) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.set(i, j, m[(i, j)]);
        }
    }
    out
}

/// Extreme singular values (min, max).
pub fn singular_value_range(m: &DenseMatrix) -> Result<(f64, f64)> {
    let sv = to_na(m).singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !min.is_finite() || !max.is_finite() {
        return Err(Error::InvalidArgument("SVD produced non-finite values".into()));
    }
    Ok((min, max))
}

/// Solves `A X = B` by LU with partial pivoting.
pub fn lu_solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let lu = to_na(a).lu();
    match lu.solve(&to_na(b)) {
        Some(x) => Ok(from_na(&x)),
        None => Err(Error::InvalidArgument("singular system in lu_solve".into())),
    }
}

pub fn invert(a: &DenseMatrix) -> Result<DenseMatrix> {
    match to_na(a).try_inverse() {
        Some(inv) => Ok(from_na(&inv)),
        None => Err(Error::InvalidArgument("matrix not invertible".into())),
    }
}

/// QR factorization returning R with a positive diagonal (uniqueness
/// convention for reproducible trajectories).
pub fn qr_positive_r(m: &DenseMatrix) -> Result<DenseMatrix> {
    let qr = to_na(m).qr();
    let mut r = qr.r();
    for j in 0..r.nrows().min(r.ncols()) {
        if r[(j, j)] < 0.0 {
            for c in 0..r.ncols() {
                r[(j, c)] = -r[(j, c)];
            }
        }
    }
    Ok(from_na(&r))
}

/// Inverse of an upper-triangular matrix by back substitution.
pub fn invert_upper_triangular(r: &DenseMatrix) -> Result<DenseMatrix> {
    let k = r.rows();
    if k != r.cols() {
        return Err(Error::DimensionMismatch("triangular inverse needs square input".into()));
    }
    let mut inv = DenseMatrix::zeros(k, k);
    for j in (0..k).rev() {
        let d = r.get(j, j);
        if d == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "zero diagonal at {j} in triangular inverse"
            )));
        }
        inv.set(j, j, 1.0 / d);
        for i in (0..j).rev() {
            let mut s = 0.0;
            for l in (i + 1)..=j {
                s += r.get(i, l) * inv.get(l, j);
            }
            inv.set(i, j, -s / r.get(i, i));
        }
    }
    Ok(inv)
}

/// Eigenvalues of a general real square matrix, as (re, im) pairs in the
/// order nalgebra's Schur reduction produces them.
pub fn complex_eigenvalues(m: &DenseMatrix) -> Vec<(f64, f64)> {
    let eig = to_na(m).complex_eigenvalues();
    eig.iter().map(|c| (c.re, c.im)).collect()
}

/// Right eigenvector for an approximately known real eigenvalue of `m`,
/// computed by shifted inverse iteration. Deterministic start vector.
pub fn inverse_iteration(m: &DenseMatrix, lambda: f64, sweeps: usize) -> Result<Vec<f64>> {
    let k = m.rows();
    let a = to_na(m);
    let scale = a.amax().max(1.0);
    // Tiny relative shift keeps the factorization well defined when lambda
    // is exact to machine precision.
    let mut shift = lambda;
    let mut lu = (a.clone() - DMatrix::identity(k, k) * shift).lu();
    if lu.determinant().abs() < f64::MIN_POSITIVE * 1e3 {
        shift = lambda + scale * 1e-12;
        lu = (a.clone() - DMatrix::identity(k, k) * shift).lu();
    }
    let mut v = DVector::from_fn(k, |i, _| 1.0 + (i as f64 + 1.0) * 1e-3);
    v /= v.norm();
    for _ in 0..sweeps {
        let w = lu
            .solve(&v)
            .ok_or_else(|| Error::InvalidArgument("inverse iteration hit a singular shift".into()))?;
        let n = w.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::InvalidArgument(
                "inverse iteration produced a degenerate vector".into(),
            ));
        }
        v = w / n;
    }
    Ok(v.iter().cloned().collect())
}

/// Full spectrum of a symmetric matrix, eigenvalues ascending.
pub fn symmetric_eigen(m: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let eig = to_na(m).symmetric_eigen();
    let k = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("finite eigenvalues")
    });
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DenseMatrix::zeros(eig.eigenvectors.nrows(), k);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..eig.eigenvectors.nrows() {
            vectors.set(i, dst, eig.eigenvectors[(i, src)]);
        }
    }
    Ok((values, vectors))
}

/// Cholesky factor L (lower) of a symmetric positive definite matrix.
pub fn cholesky(m: &DenseMatrix) -> Result<DenseMatrix> {
    match to_na(m).cholesky() {
        Some(c) => Ok(from_na(&c.l())),
        None => Err(Error::InvalidArgument(
            "matrix not positive definite in cholesky".into(),
        )),
    }
}
