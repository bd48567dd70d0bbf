//! Brute-force reference implementations: dense eigensolver, deterministic
//! subspace iteration, exhaustive sampler enumeration, and synthetic test
//! matrices with planted spectra.
//!
//! These back the test suites and the workbench's `oracle` command. They are
//! deliberately independent of the iteration engine's code paths and only
//! target desk-scale problems.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{purpose, substream};
use crate::sparse::{DenseMatrix, SparseColumnMatrix, SparseVector};

/// Dense-solver dimension guard.
pub const DENSE_LIMIT: usize = 5000;
/// Enumeration guard; branch count grows exponentially with entries.
pub const ENUM_LIMIT: usize = 12;

/// Full spectrum of a symmetric matrix: eigenvalues ascending with matched
/// eigenvector columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

impl Spectrum {
    /// Largest `k` eigenvalues (descending) with their eigenvectors as an
    /// n-by-k matrix. These are the dominant eigenpairs.
    pub fn dominant(&self, k: usize) -> (Vec<f64>, DenseMatrix) {
        let n = self.eigenvectors.rows();
        let total = self.eigenvalues.len();
        let k = k.min(total);
        let mut values = Vec::with_capacity(k);
        let mut vectors = DenseMatrix::zeros(n, k);
        for j in 0..k {
            let src = total - 1 - j;
            values.push(self.eigenvalues[src]);
            for i in 0..n {
                vectors.set(i, j, self.eigenvectors.get(i, src));
            }
        }
        (values, vectors)
    }
}

fn check_symmetric(a: &SparseColumnMatrix) -> Result<()> {
    if a.rows() != a.cols() {
        return Err(Error::InvalidArgument("matrix not square".into()));
    }
    let t = a.transpose();
    let scale = a
        .columns()
        .iter()
        .flat_map(|c| c.values())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    for j in 0..a.cols() {
        let (ca, cb) = (a.col(j), t.col(j));
        if ca.indices() != cb.indices() {
            return Err(Error::InvalidArgument(format!(
                "matrix not symmetric at column {j}"
            )));
        }
        for (va, vb) in ca.values().iter().zip(cb.values()) {
            if (va - vb).abs() > 1e-12 * scale.max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "matrix not symmetric at column {j}"
                )));
            }
        }
    }
    Ok(())
}

/// Full dense eigendecomposition of a small symmetric sparse matrix.
pub fn dense_eigh(a: &SparseColumnMatrix) -> Result<Spectrum> {
    if a.rows() > DENSE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "dense eigensolver limited to n <= {DENSE_LIMIT}, got {}",
            a.rows()
        )));
    }
    check_symmetric(a)?;
    let (eigenvalues, eigenvectors) = linalg::symmetric_eigen(&a.to_dense())?;
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// One instantaneous Ritz trace entry: eigenvalue estimates sorted by
/// descending real part.
pub type RitzTraceRow = Vec<f64>;

/// Deterministic non-standard subspace iteration, implemented densely.
///
/// Mirrors the randomized engine with compression disabled: projected
/// estimates from the trial pencil, geometric-average normalization of
/// column one-norms, periodic orthogonalization through the projected QR.
/// Used to validate the engine's deterministic limit.
pub fn deterministic_subspace_iteration(
    a: &SparseColumnMatrix,
    u: &DenseMatrix,
    x0: &DenseMatrix,
    iters: usize,
    alpha: f64,
    ortho_period: usize,
) -> Result<Vec<RitzTraceRow>> {
    let n = a.rows();
    let k = u.cols();
    if u.rows() != n || x0.rows() != n || x0.cols() != k {
        return Err(Error::DimensionMismatch(
            "trial/iterate dimensions inconsistent".into(),
        ));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument("alpha must lie in [0, 1]".into()));
    }

    // Dense A once; this oracle is desk-scale only.
    let ad = a.to_dense();
    let ut = u.transpose();

    let mut x = x0.clone();
    let mut norm_state = vec![1.0_f64; k];
    let mut trace = Vec::with_capacity(iters);

    for i in 0..iters {
        let norms_x: Vec<f64> = (0..k)
            .map(|j| (0..n).map(|r| x.get(r, j).abs()).sum())
            .collect();
        if norms_x.iter().any(|&v| v <= 0.0) {
            return Err(Error::DeadColumn {
                column: norms_x.iter().position(|&v| v <= 0.0).unwrap_or(0),
                iteration: i,
            });
        }

        let ax = ad.matmul(&x)?;
        let s = ut.matmul(&ax)?;
        let t = ut.matmul(&x)?;

        // Instantaneous Ritz values of the pencil (S, T).
        let tinv_s = linalg::lu_solve(&t, &s)?;
        let mut eigs: Vec<f64> = linalg::complex_eigenvalues(&tinv_s)
            .iter()
            .map(|&(re, _)| re)
            .collect();
        eigs.sort_by(|p, q| q.partial_cmp(p).expect("finite eigenvalues"));
        trace.push(eigs);

        let norms_ax: Vec<f64> = (0..k)
            .map(|j| (0..n).map(|r| ax.get(r, j).abs()).sum())
            .collect();
        let mut new_state = Vec::with_capacity(k);
        for j in 0..k {
            let ratio = norms_ax[j] / norms_x[j];
            new_state.push(ratio.powf(alpha) * norm_state[j].powf(1.0 - alpha));
        }
        norm_state = new_state;

        let ortho = ortho_period > 0 && (i + 1) % ortho_period == 0;
        if ortho {
            let r = linalg::qr_positive_r(&s)?;
            let rinv = linalg::invert_upper_triangular(&r)?;
            let x_rinv = x.matmul(&rinv)?;
            let ax_rinv = ax.matmul(&rinv)?;
            let mut next = DenseMatrix::zeros(n, k);
            for j in 0..k {
                let col_norm: f64 = (0..n).map(|r| x_rinv.get(r, j).abs()).sum();
                let d = col_norm / norms_x[j];
                for r in 0..n {
                    next.set(r, j, ax_rinv.get(r, j) / (d * norm_state[j]));
                }
            }
            x = next;
        } else {
            let mut next = DenseMatrix::zeros(n, k);
            for j in 0..k {
                for r in 0..n {
                    next.set(r, j, ax.get(r, j) / norm_state[j]);
                }
            }
            x = next;
        }
    }
    Ok(trace)
}

/// Exact marginal inclusion probabilities of the pivotal sampler, by
/// exhaustive enumeration of the recursion's random branches with exact
/// branch weights. Every enumerated branch selects exactly `g` indices.
pub fn enumerate_pivotal(p: &[f64], g: usize) -> Result<Vec<f64>> {
    if p.len() > ENUM_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "enumeration limited to {ENUM_LIMIT} entries, got {}",
            p.len()
        )));
    }
    let mut sum = 0.0;
    for &pi in p {
        if !(0.0..=1.0).contains(&pi) || !pi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "inclusion probability {pi} outside [0, 1]"
            )));
        }
        sum += pi;
    }
    if (sum - g as f64).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "probabilities sum to {sum} but budget is {g}"
        )));
    }

    let mut marginals = vec![0.0_f64; p.len()];
    let mut work: Vec<(usize, f64)> = Vec::new();
    let mut need = g;
    for (i, &pi) in p.iter().enumerate() {
        if pi >= 1.0 - crate::compress::CERTAINTY_GUARD {
            marginals[i] = 1.0;
            if need == 0 {
                return Err(Error::InvalidArgument("certain entries exceed budget".into()));
            }
            need -= 1;
        } else if pi > 0.0 {
            work.push((i, pi));
        }
    }

    walk_branches(&work, need, 1.0, &mut marginals)?;
    Ok(marginals)
}

fn walk_branches(
    list: &[(usize, f64)],
    need: usize,
    weight: f64,
    marginals: &mut [f64],
) -> Result<()> {
    if need == 0 {
        return Ok(());
    }
    if weight == 0.0 {
        return Ok(());
    }

    let mut prefix_sum = 0.0;
    let mut s = 0usize;
    let mut boundary: Option<(usize, f64)> = None;
    for &(idx, prob) in list {
        if prefix_sum + prob < 1.0 {
            prefix_sum += prob;
            s += 1;
        } else {
            boundary = Some((idx, prob));
            break;
        }
    }

    let Some((boundary_idx, boundary_prob)) = boundary else {
        if need != 1 {
            return Err(Error::InvalidArgument(
                "branch enumeration ran out of probability mass".into(),
            ));
        }
        if prefix_sum <= 0.0 {
            return Err(Error::InvalidArgument(
                "no probability mass left for the final selection".into(),
            ));
        }
        for &(idx, prob) in list {
            marginals[idx] += weight * prob / prefix_sum;
        }
        return Ok(());
    };

    let a = 1.0 - prefix_sum;
    let b = (boundary_prob - a).max(0.0);
    let keep_winner = 1.0 - a / (1.0 - b);

    for (pos, &(winner_idx, winner_prob)) in list.iter().take(s).enumerate() {
        if winner_prob <= 0.0 {
            continue;
        }
        let select_w = weight * winner_prob / prefix_sum;

        // Branch 1: the provisional winner is committed.
        let w1 = select_w * keep_winner;
        if w1 > 0.0 {
            marginals[winner_idx] += w1;
            let mut rest: Vec<(usize, f64)> = Vec::with_capacity(list.len() - s);
            if b > 0.0 {
                rest.push((boundary_idx, b));
            }
            rest.extend_from_slice(&list[s + 1..]);
            walk_branches(&rest, need - 1, w1, marginals)?;
        }

        // Branch 2: the boundary entry displaces the winner.
        let w2 = select_w * (1.0 - keep_winner);
        if w2 > 0.0 {
            marginals[boundary_idx] += w2;
            let mut rest: Vec<(usize, f64)> = Vec::with_capacity(list.len() - s);
            if b > 0.0 {
                rest.push((winner_idx, b));
            }
            rest.extend_from_slice(&list[s + 1..]);
            walk_branches(&rest, need - 1, w2, marginals)?;
        }
        let _ = pos;
    }
    Ok(())
}

/// Builds a sparse symmetric matrix with a planted spectrum by applying
/// random plane rotations to a diagonal matrix, plus the exact spectrum.
///
/// `eigenvalues[i]` is planted at diagonal position `i` before mixing; the
/// returned spectrum carries the exact eigenpairs (eigenvalues ascending).
/// `nnz_per_col <= 1` yields exactly the diagonal matrix. Mixing stops once
/// the mean column occupancy reaches the target, which lands within a factor
/// of two of it for targets well below `n`.
pub fn synthesize_test_matrix(
    eigenvalues: &[f64],
    nnz_per_col: usize,
    seed: u64,
) -> Result<(SparseColumnMatrix, Spectrum)> {
    let n = eigenvalues.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    if n > 2000 {
        return Err(Error::InvalidArgument(
            "synthesis uses dense intermediates; limited to n <= 2000".into(),
        ));
    }
    if nnz_per_col > n {
        return Err(Error::InvalidArgument(format!(
            "cannot reach {nnz_per_col} nonzeros per column at dimension {n}"
        )));
    }
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite eigenvalue".into()));
    }

    let mut a = vec![0.0_f64; n * n];
    for i in 0..n {
        a[i * n + i] = eigenvalues[i];
    }
    // Eigenvector matrix: A stays V D V^T throughout, so each rotation
    // updates V <- G^T V (rows i and j mix).
    let mut v = vec![0.0_f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let mut rng = substream(seed, &[purpose::SYNTH]);
    if nnz_per_col > 1 && n > 1 {
        let max_rotations = 60 * n;
        let mut applied = 0usize;
        let mut nnz: usize = a.iter().filter(|&&x| x != 0.0).count();
        while nnz < nnz_per_col * n && applied < max_rotations {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let theta = rng.random_range(0.3..1.2_f64);
            let (c, s) = (theta.cos(), theta.sin());
            nnz -= region_nnz(&a, n, i, j);
            apply_rotation(&mut a, n, i, j, c, s);
            nnz += region_nnz(&a, n, i, j);
            for col in 0..n {
                let vi = v[i * n + col];
                let vj = v[j * n + col];
                v[i * n + col] = c * vi - s * vj;
                v[j * n + col] = s * vi + c * vj;
            }
            applied += 1;
        }
    }

    let columns: Vec<SparseVector> = (0..n)
        .map(|j| {
            let pairs: Vec<(usize, f64)> = (0..n)
                .filter_map(|i| {
                    let v = a[i * n + j];
                    (v != 0.0).then_some((i, v))
                })
                .collect();
            SparseVector::from_pairs(n, pairs)
        })
        .collect::<Result<_>>()?;
    let matrix = SparseColumnMatrix::new(n, columns)?.with_symmetric_flag()?;

    // Sort the planted pairs ascending for the Spectrum convention.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eigenvalues[x].partial_cmp(&eigenvalues[y]).expect("finite"));
    let sorted_values: Vec<f64> = order.iter().map(|&i| eigenvalues[i]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, dst, v[r * n + src]);
        }
    }

    Ok((
        matrix,
        Spectrum {
            eigenvalues: sorted_values,
            eigenvectors: vectors,
        },
    ))
}

/// Nonzero count of the region a rotation in plane (i, j) can touch: rows
/// i and j plus their mirrored columns.
fn region_nnz(a: &[f64], n: usize, i: usize, j: usize) -> usize {
    let mut count = 0usize;
    for col in 0..n {
        if a[i * n + col] != 0.0 {
            count += 1;
        }
        if a[j * n + col] != 0.0 {
            count += 1;
        }
    }
    for row in 0..n {
        if row == i || row == j {
            continue;
        }
        if a[row * n + i] != 0.0 {
            count += 1;
        }
        if a[row * n + j] != 0.0 {
            count += 1;
        }
    }
    count
}

/// Symmetric two-sided plane rotation `A <- G^T A G`, with the touched
/// row/column pair mirrored explicitly so the result stays bit-symmetric.
fn apply_rotation(a: &mut [f64], n: usize, i: usize, j: usize, c: f64, s: f64) {
    // Columns i, j.
    for r in 0..n {
        let ai = a[r * n + i];
        let aj = a[r * n + j];
        a[r * n + i] = c * ai - s * aj;
        a[r * n + j] = s * ai + c * aj;
    }
    // Rows i, j.
    for col in 0..n {
        let ai = a[i * n + col];
        let aj = a[j * n + col];
        a[i * n + col] = c * ai - s * aj;
        a[j * n + col] = s * ai + c * aj;
    }
    // Mirror the touched rows onto the columns.
    for r in 0..n {
        a[r * n + i] = a[i * n + r];
        a[r * n + j] = a[j * n + r];
    }
}

/// Geometric helper for planted spectra: `top` values first (descending
/// dominant eigenvalues), then a gap `lambda_{k+1} = gap_ratio * lambda_k`,
/// then geometric decay of the remainder.
pub fn planted_spectrum(n: usize, top: &[f64], gap_ratio: f64, tail_decay: f64) -> Result<Vec<f64>> {
    if top.is_empty() || top.len() > n {
        return Err(Error::InvalidArgument(
            "planted spectrum needs 1..=n dominant values".into(),
        ));
    }
    if !(0.0 < gap_ratio && gap_ratio < 1.0) || !(0.0 < tail_decay && tail_decay <= 1.0) {
        return Err(Error::InvalidArgument(
            "gap ratio in (0,1), tail decay in (0,1]".into(),
        ));
    }
    let mut values = top.to_vec();
    for w in values.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::InvalidArgument(
                "dominant values must be strictly decreasing".into(),
            ));
        }
    }
    let mut cur = gap_ratio * *top.last().expect("nonempty");
    while values.len() < n {
        values.push(cur);
        cur *= tail_decay;
    }
    Ok(values)
}
