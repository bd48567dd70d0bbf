//! Sparse vector/matrix types and the exact linear-algebra kernels used by
//! every other module.
//!
//! Storage is strictly ordered coordinate-per-column: indices strictly
//! increasing, no stored zeros, all values finite. Duplicate indices are
//! rejected at construction so that merge-based addition and deterministic
//! iteration order stay trivial. All arithmetic is f64.

use crate::error::{Error, Result};

/// A sparse vector: ordered (index, value) pairs over a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Builds a vector from parallel index/value arrays.
    ///
    /// Indices must be strictly increasing and in `[0, dim)`; values must be
    /// finite. Explicit zeros are dropped.
    pub fn new(dim: usize, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidStructure("dimension must be positive".into()));
        }
        if indices.len() != values.len() {
            return Err(Error::InvalidStructure(format!(
                "index/value length mismatch: {} vs {}",
                indices.len(),
                values.len()
            )));
        }
        let mut out_idx = Vec::with_capacity(indices.len());
        let mut out_val = Vec::with_capacity(values.len());
        let mut prev: Option<usize> = None;
        for (&i, &v) in indices.iter().zip(values.iter()) {
            if i >= dim {
                return Err(Error::InvalidStructure(format!(
                    "index {i} out of range for dimension {dim}"
                )));
            }
            if let Some(p) = prev {
                if i == p {
                    return Err(Error::InvalidStructure(format!("duplicate index {i}")));
                }
                if i < p {
                    return Err(Error::InvalidStructure(format!(
                        "indices not strictly increasing at {i}"
                    )));
                }
            }
            prev = Some(i);
            if !v.is_finite() {
                return Err(Error::InvalidStructure(format!(
                    "non-finite value {v} at index {i}"
                )));
            }
            if v != 0.0 {
                out_idx.push(i);
                out_val.push(v);
            }
        }
        Ok(Self {
            dim,
            indices: out_idx,
            values: out_val,
        })
    }

    /// Empty (all-zero) vector of the given dimension.
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a vector from possibly unordered pairs. Duplicates are rejected.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        pairs.sort_by_key(|&(i, _)| i);
        let (indices, values) = pairs.into_iter().unzip();
        Self::new(dim, indices, values)
    }

    /// Accumulates contributions that may repeat indices, summing duplicates.
    /// Entries whose sum is exactly zero are dropped. Contributions with the
    /// same index are summed in their original order (stable sort), so the
    /// result is deterministic for a fixed input order.
    pub fn accumulate(dim: usize, mut contributions: Vec<(usize, f64)>) -> Self {
        contributions.sort_by_key(|&(i, _)| i);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, v) in contributions {
            if let Some(&last) = indices.last() {
                if last == i {
                    *values.last_mut().expect("parallel arrays") += v;
                    continue;
                }
            }
            indices.push(i);
            values.push(v);
        }
        // Cancellation can produce exact zeros; the invariant forbids them.
        let mut out_idx = Vec::with_capacity(indices.len());
        let mut out_val = Vec::with_capacity(values.len());
        for (i, v) in indices.into_iter().zip(values) {
            if v != 0.0 {
                out_idx.push(i);
                out_val.push(v);
            }
        }
        Self {
            dim,
            indices: out_idx,
            values: out_val,
        }
    }

    pub fn from_dense(dense: &[f64]) -> Self {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, &v) in dense.iter().enumerate() {
            if v != 0.0 {
                indices.push(i);
                values.push(v);
            }
        }
        Self {
            dim: dense.len(),
            indices,
            values,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (&i, &v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&usize, &f64)> {
        self.indices.iter().zip(self.values.iter())
    }

    /// Value at `i` (zero if not stored).
    pub fn get(&self, i: usize) -> f64 {
        match self.indices.binary_search(&i) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    /// Returns `self * factor`. A zero factor yields the zero vector.
    pub fn scaled(&self, factor: f64) -> Self {
        if factor == 0.0 {
            return Self::zeros(self.dim);
        }
        Self {
            dim: self.dim,
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Sum of absolute values of the stored entries.
pub fn col_norm1(x: &SparseVector) -> f64 {
    x.values.iter().map(|v| v.abs()).sum()
}

/// Euclidean norm of the stored entries.
pub fn col_norm2(x: &SparseVector) -> f64 {
    x.values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Dot product of two sparse vectors over the same dimension.
pub fn sparse_dot(a: &SparseVector, b: &SparseVector) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch(format!(
            "dot: {} vs {}",
            a.dim, b.dim
        )));
    }
    let mut acc = 0.0;
    let (mut ia, mut ib) = (0usize, 0usize);
    while ia < a.indices.len() && ib < b.indices.len() {
        match a.indices[ia].cmp(&b.indices[ib]) {
            std::cmp::Ordering::Less => ia += 1,
            std::cmp::Ordering::Greater => ib += 1,
            std::cmp::Ordering::Equal => {
                acc += a.values[ia] * b.values[ib];
                ia += 1;
                ib += 1;
            }
        }
    }
    Ok(acc)
}

/// Column-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseColumnMatrix {
    rows: usize,
    cols: usize,
    columns: Vec<SparseVector>,
    symmetric: bool,
}

impl SparseColumnMatrix {
    pub fn new(rows: usize, columns: Vec<SparseVector>) -> Result<Self> {
        if rows == 0 || columns.is_empty() {
            return Err(Error::InvalidStructure(
                "matrix dimensions must be positive".into(),
            ));
        }
        for (j, c) in columns.iter().enumerate() {
            if c.dim() != rows {
                return Err(Error::InvalidStructure(format!(
                    "column {j} has dimension {} but matrix has {rows} rows",
                    c.dim()
                )));
            }
        }
        Ok(Self {
            cols: columns.len(),
            rows,
            columns,
            symmetric: false,
        })
    }

    /// Identity matrix of order `n`.
    pub fn identity(n: usize) -> Self {
        let columns = (0..n)
            .map(|j| SparseVector::new(n, vec![j], vec![1.0]).expect("valid unit column"))
            .collect();
        Self {
            rows: n,
            cols: n,
            columns,
            symmetric: true,
        }
    }

    /// Diagonal matrix from the given entries.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let columns = (0..n)
            .map(|j| SparseVector::new(n, vec![j], vec![diag[j]]).expect("valid diagonal column"))
            .collect();
        let mut m = Self::new(n, columns).expect("valid diagonal matrix");
        m.symmetric = true;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn col(&self, j: usize) -> &SparseVector {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[SparseVector] {
        &self.columns
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(SparseVector::nnz).sum()
    }

    pub fn max_col_nnz(&self) -> usize {
        self.columns.iter().map(SparseVector::nnz).max().unwrap_or(0)
    }

    pub fn is_symmetric_flagged(&self) -> bool {
        self.symmetric
    }

    /// Marks the matrix as symmetric. Verifies entry-level symmetry before
    /// accepting the flag.
    pub fn with_symmetric_flag(mut self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::InvalidStructure(
                "symmetric flag requires a square matrix".into(),
            ));
        }
        let t = self.transpose();
        for j in 0..self.cols {
            if self.columns[j] != t.columns[j] {
                return Err(Error::InvalidStructure(format!(
                    "matrix is not symmetric at column {j}"
                )));
            }
        }
        self.symmetric = true;
        Ok(self)
    }

    pub fn transpose(&self) -> Self {
        let mut rows_acc: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.rows];
        for (j, col) in self.columns.iter().enumerate() {
            for (&i, &v) in col.iter() {
                rows_acc[i].push((j, v));
            }
        }
        let columns = rows_acc
            .into_iter()
            .map(|pairs| {
                // Row scans emit ascending column indices already.
                SparseVector::accumulate(self.cols, pairs)
            })
            .collect();
        Self {
            rows: self.cols,
            cols: self.rows,
            columns,
            symmetric: self.symmetric,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut data = vec![0.0; self.rows * self.cols];
        for (j, col) in self.columns.iter().enumerate() {
            for (&i, &v) in col.iter() {
                data[i * self.cols + j] = v;
            }
        }
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }
}

/// Row-major dense matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidStructure(
                "matrix dimensions must be positive".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidStructure(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidStructure("non-finite value".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.data[i * self.cols + l];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[l * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Exact sparse matrix-vector product `A x`.
///
/// Cost is proportional to the sum over nonzero entries of `x` of the
/// corresponding column's nonzero count.
pub fn spmv(a: &SparseColumnMatrix, x: &SparseVector) -> Result<SparseVector> {
    if a.cols() != x.dim() {
        return Err(Error::DimensionMismatch(format!(
            "spmv: matrix has {} columns, vector has dimension {}",
            a.cols(),
            x.dim()
        )));
    }
    let mut contributions = Vec::new();
    for (&j, &xv) in x.iter() {
        for (&i, &av) in a.col(j).iter() {
            contributions.push((i, av * xv));
        }
    }
    Ok(SparseVector::accumulate(a.rows(), contributions))
}

/// Exact projection `Udag * x` of a sparse vector onto `k` dense rows.
///
/// `udag` is the k-by-n adjoint of the trial matrix; cost is proportional to
/// `k * nnz(x)`.
pub fn project(udag: &DenseMatrix, x: &SparseVector) -> Result<Vec<f64>> {
    if udag.cols() != x.dim() {
        return Err(Error::DimensionMismatch(format!(
            "project: {} columns vs vector dimension {}",
            udag.cols(),
            x.dim()
        )));
    }
    let k = udag.rows();
    let mut out = vec![0.0; k];
    for (kk, slot) in out.iter_mut().enumerate() {
        let row = udag.row(kk);
        let mut acc = 0.0;
        for (&i, &v) in x.iter() {
            acc += row[i] * v;
        }
        *slot = acc;
    }
    Ok(out)
}

/// Spectral transform `A = I - eps * H`.
///
/// Diagonal entries are materialized even where the diagonal of `H` is zero
/// (they carry the identity's 1), except where the result is exactly zero.
pub fn shift_scale(h: &SparseColumnMatrix, eps: f64) -> Result<SparseColumnMatrix> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive and finite, got {eps}"
        )));
    }
    if h.rows() != h.cols() {
        return Err(Error::DimensionMismatch(format!(
            "shift_scale requires a square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let n = h.rows();
    let columns: Vec<SparseVector> = (0..n)
        .map(|j| {
            let mut contributions: Vec<(usize, f64)> =
                h.col(j).iter().map(|(&i, &v)| (i, -eps * v)).collect();
            contributions.push((j, 1.0));
            SparseVector::accumulate(n, contributions)
        })
        .collect();
    let mut a = SparseColumnMatrix::new(n, columns)?;
    a.symmetric = h.symmetric;
    Ok(a)
}

/// Recovers an eigenvalue of `H` from an eigenvalue of `A = I - eps H`.
pub fn eigenvalue_from_shifted(lambda: f64, eps: f64) -> f64 {
    (1.0 - lambda) / eps
}
