//! The randomized subspace iteration trajectory.
//!
//! Each step compresses the iterate columns, records the projected k-by-k
//! matrices against the fixed trial subspace, multiplies by the target
//! matrix, and renormalizes through a damped geometric average of column
//! growth. Periodically the iterate basis is conditioned by a QR of the
//! low-variance projected product instead of the noisy iterate itself.

use crate::compress::{compress_block, CompressionBudget};
use crate::error::{Error, Result};
use crate::linalg;
use crate::sharded::{partition_contiguous, sharded_compress};
use crate::sparse::{col_norm1, project, spmv, DenseMatrix, SparseColumnMatrix, SparseVector};

/// The constant trial matrix `U` and the precomputed adjoint product `A* U`
/// used by every projected estimator.
#[derive(Debug, Clone)]
pub struct TrialSubspace {
    u: DenseMatrix,
    adj_u: DenseMatrix,
    /// k-by-n transposes kept for cheap sparse projections.
    udag: DenseMatrix,
    adj_udag: DenseMatrix,
}

impl TrialSubspace {
    /// Builds the trial subspace for `a`, verifying full column rank through
    /// the k-by-k Gram matrix.
    pub fn new(a: &SparseColumnMatrix, u: DenseMatrix) -> Result<Self> {
        let n = a.rows();
        let k = u.cols();
        if a.cols() != n {
            return Err(Error::DimensionMismatch("matrix must be square".into()));
        }
        if u.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "trial matrix has {} rows but the operator has {n}",
                u.rows()
            )));
        }
        if k == 0 || k > n {
            return Err(Error::RankDeficientTrial(format!(
                "need 1 <= k <= n trial columns, got {k}"
            )));
        }

        let udag = u.transpose();
        let gram = udag.matmul(&u)?;
        let (gmin, gmax) = linalg::singular_value_range(&gram)?;
        if gmax <= 0.0 || gmin < 1e-12 * gmax {
            return Err(Error::RankDeficientTrial(format!(
                "gram matrix condition {:.3e} exceeds tolerance",
                gmax / gmin.max(f64::MIN_POSITIVE)
            )));
        }

        // adj_u[i][j] = (A^T u_j)_i = A.col(i) . u_j; exact sparse product.
        let mut adj_u = DenseMatrix::zeros(n, k);
        for i in 0..n {
            for (&row, &av) in a.col(i).iter() {
                for j in 0..k {
                    let cur = adj_u.get(i, j);
                    adj_u.set(i, j, cur + av * u.get(row, j));
                }
            }
        }
        let adj_udag = adj_u.transpose();

        Ok(Self {
            u,
            adj_u,
            udag,
            adj_udag,
        })
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }

    pub fn adj_u(&self) -> &DenseMatrix {
        &self.adj_u
    }

    pub fn k(&self) -> usize {
        self.u.cols()
    }

    pub fn dim(&self) -> usize {
        self.u.rows()
    }

    /// `U* x` for one sparse column.
    pub fn project_u(&self, x: &SparseVector) -> Result<Vec<f64>> {
        project(&self.udag, x)
    }

    /// `(A* U)* x = U* A x` for one sparse column.
    pub fn project_adj(&self, x: &SparseVector) -> Result<Vec<f64>> {
        project(&self.adj_udag, x)
    }
}

/// Unit trial vectors at the indices of the `k` largest diagonal entries of
/// `a`; the standard determinant-style trial choice when nothing better is
/// known. Ties break by ascending index.
pub fn diagonal_rule_trial(a: &SparseColumnMatrix, k: usize) -> Result<DenseMatrix> {
    let n = a.rows();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (di, dj) = (a.col(i).get(i), a.col(j).get(j));
        dj.partial_cmp(&di).expect("finite diagonal").then(i.cmp(&j))
    });
    let mut u = DenseMatrix::zeros(n, k);
    for (j, &i) in order.iter().take(k).enumerate() {
        u.set(i, j, 1.0);
    }
    Ok(u)
}

/// The n-by-k iterate as sparse columns plus its normalization state.
#[derive(Debug, Clone)]
pub struct IterateBlock {
    pub columns: Vec<SparseVector>,
    /// Diagonal of the running normalization matrix N.
    pub norm_state: Vec<f64>,
    pub iteration_index: usize,
}

impl IterateBlock {
    pub fn k(&self) -> usize {
        self.columns.len()
    }
}

/// Per-iteration norm update: a geometric average of the fresh growth ratio
/// against the previous factor, damped by `alpha`.
///
/// `norms_curr` are the one-norms of the freshly multiplied columns and
/// `norms_prev` those of the iterate they grew from, so with `alpha = 1`
/// dividing by the result pins column norms at the previous iteration's.
pub fn update_norm_state(
    n_prev: &[f64],
    norms_curr: &[f64],
    norms_prev: &[f64],
    alpha: f64,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    if n_prev.len() != norms_curr.len() || n_prev.len() != norms_prev.len() {
        return Err(Error::DimensionMismatch("norm vectors differ in length".into()));
    }
    let mut out = Vec::with_capacity(n_prev.len());
    for ((&np, &nc), &pv) in n_prev.iter().zip(norms_curr).zip(norms_prev) {
        if !(nc > 0.0 && pv > 0.0 && np > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "norms must be positive: curr {nc}, prev {pv}, state {np}"
            )));
        }
        let v = (nc / pv).powf(alpha) * np.powf(1.0 - alpha);
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "norm update produced {v}"
            )));
        }
        out.push(v);
    }
    Ok(out)
}

/// The per-iteration normalization/orthogonalization factor.
#[derive(Debug, Clone)]
pub enum GMatrix {
    /// Diagonal normalization only.
    Plain { n: Vec<f64> },
    /// N * D * R: diagonal normalization, norm-restoring diagonal, and the
    /// upper-triangular factor from the projected QR.
    Orthogonalizing {
        n: Vec<f64>,
        d: Vec<f64>,
        r: DenseMatrix,
    },
}

/// Diagonal G equal to the running normalization.
pub fn build_g_plain(n: &[f64]) -> Result<GMatrix> {
    if n.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(Error::InvalidArgument("normalization must be positive".into()));
    }
    Ok(GMatrix::Plain { n: n.to_vec() })
}

/// Orthogonalizing G = N D R.
///
/// `R` is the positive-diagonal QR factor of the projected product `s`
/// (k-by-k, low variance), and `D` rescales so the columns of
/// `phi * (D R)^-1` keep the one-norms of `phi`: normalization stays the
/// sole business of `N`.
pub fn build_g_orthogonalizing(
    s: &DenseMatrix,
    phi: &[SparseVector],
    n: &[f64],
) -> Result<GMatrix> {
    let k = s.rows();
    if s.cols() != k || phi.len() != k || n.len() != k {
        return Err(Error::DimensionMismatch(
            "projected matrix, block, and norm state must share k".into(),
        ));
    }
    let r = linalg::qr_positive_r(s)?;
    let rmax = (0..k).map(|j| r.get(j, j)).fold(0.0_f64, f64::max);
    let rmin = (0..k).map(|j| r.get(j, j)).fold(f64::INFINITY, f64::min);
    if !(rmin > 1e-13 * rmax.max(f64::MIN_POSITIVE)) {
        let (sigma_min, sigma_max) = linalg::singular_value_range(s)?;
        return Err(Error::InsufficientSampling {
            context: "projected product singular at orthogonalization".into(),
            sigma_min,
            sigma_max,
        });
    }
    let rinv = linalg::invert_upper_triangular(&r)?;
    let mut d = Vec::with_capacity(k);
    for j in 0..k {
        let combo = column_combination(phi, &rinv, j)?;
        let base = col_norm1(&phi[j]);
        if base <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "zero column {j} in orthogonalization"
            )));
        }
        d.push(col_norm1(&combo) / base);
    }
    if d.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(Error::InvalidArgument("degenerate norm-restoring diagonal".into()));
    }
    Ok(GMatrix::Orthogonalizing { n: n.to_vec(), d, r })
}

/// Column `j` of `cols * coeff` for upper-triangular-structured
/// coefficients: sum over l <= j of coeff[l][j] * cols[l], merged in fixed
/// order for bit reproducibility.
fn column_combination(
    cols: &[SparseVector],
    coeff: &DenseMatrix,
    j: usize,
) -> Result<SparseVector> {
    let dim = cols[0].dim();
    let mut contributions: Vec<(usize, f64)> = Vec::new();
    for (l, col) in cols.iter().enumerate().take(j + 1) {
        let c = coeff.get(l, j);
        if c == 0.0 {
            continue;
        }
        for (&i, &v) in col.iter() {
            contributions.push((i, c * v));
        }
    }
    Ok(SparseVector::accumulate(dim, contributions))
}

impl GMatrix {
    /// Applies `G^-1` on the right of a block of sparse columns.
    pub fn apply_inverse(&self, cols: &[SparseVector]) -> Result<Vec<SparseVector>> {
        match self {
            GMatrix::Plain { n } => cols
                .iter()
                .zip(n.iter())
                .map(|(c, &nj)| {
                    if nj == 0.0 {
                        return Err(Error::InvalidArgument("zero normalization factor".into()));
                    }
                    Ok(c.scaled(1.0 / nj))
                })
                .collect(),
            GMatrix::Orthogonalizing { n, d, r } => {
                let rinv = linalg::invert_upper_triangular(r)?;
                (0..cols.len())
                    .map(|j| {
                        let combo = column_combination(cols, &rinv, j)?;
                        Ok(combo.scaled(1.0 / (d[j] * n[j])))
                    })
                    .collect()
            }
        }
    }
}

/// One logged iteration: the projected matrices and the pre-compression
/// column norms.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub s: DenseMatrix,
    pub t: DenseMatrix,
    pub norms: Vec<f64>,
}

/// Running sums of the projected matrices plus the full per-iteration log.
#[derive(Debug, Clone)]
pub struct TrajectoryAccumulator {
    sum_s: DenseMatrix,
    sum_t: DenseMatrix,
    count: usize,
    burn_in: usize,
    log: Vec<IterationRecord>,
}

impl TrajectoryAccumulator {
    pub fn new(k: usize, burn_in: usize) -> Self {
        Self {
            sum_s: DenseMatrix::zeros(k, k),
            sum_t: DenseMatrix::zeros(k, k),
            count: 0,
            burn_in,
            log: Vec::new(),
        }
    }

    /// Appends one iteration; accumulates it when past burn-in. Summation is
    /// in iteration order, elementwise row-major.
    pub fn record(&mut self, iteration: usize, record: IterationRecord) {
        if iteration >= self.burn_in {
            let k = self.sum_s.rows();
            for i in 0..k {
                for j in 0..k {
                    self.sum_s.set(i, j, self.sum_s.get(i, j) + record.s.get(i, j));
                    self.sum_t.set(i, j, self.sum_t.get(i, j) + record.t.get(i, j));
                }
            }
            self.count += 1;
        }
        self.log.push(record);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn log(&self) -> &[IterationRecord] {
        &self.log
    }

    pub fn into_log(self) -> Vec<IterationRecord> {
        self.log
    }

    /// Elementwise mean of the accumulated `S` matrices.
    pub fn mean_s(&self) -> Result<DenseMatrix> {
        self.mean_of(&self.sum_s)
    }

    /// Elementwise mean of the accumulated `T` matrices.
    pub fn mean_t(&self) -> Result<DenseMatrix> {
        self.mean_of(&self.sum_t)
    }

    fn mean_of(&self, sum: &DenseMatrix) -> Result<DenseMatrix> {
        if self.count == 0 {
            return Err(Error::InvalidArgument(
                "no post-burn-in iterations accumulated".into(),
            ));
        }
        let k = sum.rows();
        let mut out = DenseMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                out.set(i, j, sum.get(i, j) / self.count as f64);
            }
        }
        Ok(out)
    }
}

/// Knobs of a trajectory run.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    /// Compression budget per column.
    pub m: usize,
    /// Damping of the norm update, in [0, 1].
    pub alpha: f64,
    /// Orthogonalize every this many iterations (0 disables).
    pub ortho_period: usize,
    /// Iterations excluded from averaging.
    pub burn_in: usize,
    pub total_iters: usize,
    pub seed: u64,
    /// Shard count for compression; 1 means the serial path.
    pub shards: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            m: 1,
            alpha: 0.5,
            ortho_period: 1000,
            burn_in: 0,
            total_iters: 0,
            seed: 0,
            shards: 1,
        }
    }
}

/// A live trajectory: the operator, the trial subspace, the current iterate
/// block, and the accumulator.
pub struct Trajectory<'a> {
    a: &'a SparseColumnMatrix,
    trial: &'a TrialSubspace,
    config: EngineConfig,
    block: IterateBlock,
    accumulator: TrajectoryAccumulator,
}

/// Validates inputs and produces the iteration-zero state: normalization at
/// the identity, adjoint products precomputed.
pub fn init_trajectory<'a>(
    a: &'a SparseColumnMatrix,
    trial: &'a TrialSubspace,
    x0: Vec<SparseVector>,
    config: EngineConfig,
) -> Result<Trajectory<'a>> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch("operator must be square".into()));
    }
    if trial.dim() != a.rows() {
        return Err(Error::DimensionMismatch(
            "trial subspace dimension differs from the operator".into(),
        ));
    }
    let k = trial.k();
    if x0.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "initial block has {} columns but the trial subspace has {k}",
            x0.len()
        )));
    }
    for (j, col) in x0.iter().enumerate() {
        if col.dim() != a.rows() {
            return Err(Error::DimensionMismatch(format!(
                "initial column {j} has dimension {}",
                col.dim()
            )));
        }
        if col.is_zero() {
            return Err(Error::InvalidArgument(format!(
                "initial column {j} is zero"
            )));
        }
    }
    if config.m < 1 {
        return Err(Error::InvalidArgument("compression budget must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&config.alpha) {
        return Err(Error::InvalidArgument("alpha must lie in [0, 1]".into()));
    }
    if config.burn_in > config.total_iters {
        return Err(Error::InvalidArgument(
            "burn-in cannot exceed total iterations".into(),
        ));
    }
    if config.shards < 1 {
        return Err(Error::InvalidArgument("shard count must be >= 1".into()));
    }

    let accumulator = TrajectoryAccumulator::new(k, config.burn_in);
    Ok(Trajectory {
        a,
        trial,
        config,
        block: IterateBlock {
            columns: x0,
            norm_state: vec![1.0; k],
            iteration_index: 0,
        },
        accumulator,
    })
}

/// The default initial block: the trial columns themselves, which guarantees
/// nonzero overlap with the target space whenever the trial matrix does.
pub fn default_initial_block(trial: &TrialSubspace) -> Vec<SparseVector> {
    (0..trial.k())
        .map(|j| SparseVector::from_dense(&trial.u().column(j)))
        .collect()
}

impl<'a> Trajectory<'a> {
    pub fn block(&self) -> &IterateBlock {
        &self.block
    }

    pub fn accumulator(&self) -> &TrajectoryAccumulator {
        &self.accumulator
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Compresses the current block column-wise with the configured budget,
    /// serial or sharded depending on configuration.
    fn compress_current(&self) -> Result<Vec<SparseVector>> {
        let m = CompressionBudget::new(self.config.m)?;
        let iter = self.block.iteration_index as u64;
        if self.config.shards <= 1 {
            compress_block(&self.block.columns, m, self.config.seed, iter)
        } else {
            self.block
                .columns
                .iter()
                .enumerate()
                .map(|(j, col)| {
                    let shards = partition_contiguous(col, self.config.shards)?;
                    sharded_compress(&shards, m, self.config.seed, iter, j as u64)
                })
                .collect()
        }
    }

    /// Advances one full iteration.
    pub fn step(&mut self) -> Result<()> {
        let i = self.block.iteration_index;
        let k = self.block.k();

        let norms_x: Vec<f64> = self.block.columns.iter().map(col_norm1).collect();
        if let Some(j) = norms_x.iter().position(|&v| v <= 0.0) {
            return Err(Error::DeadColumn {
                column: j,
                iteration: i,
            });
        }

        let phi = self.compress_current()?;

        // Projected matrices for this iteration: s = U* A phi, t = U* x.
        let mut s = DenseMatrix::zeros(k, k);
        let mut t = DenseMatrix::zeros(k, k);
        for j in 0..k {
            let s_col = self.trial.project_adj(&phi[j])?;
            let t_col = self.trial.project_u(&self.block.columns[j])?;
            for r in 0..k {
                s.set(r, j, s_col[r]);
                t.set(r, j, t_col[r]);
            }
        }
        self.accumulator.record(
            i,
            IterationRecord {
                s: s.clone(),
                t,
                norms: norms_x.clone(),
            },
        );

        // Multiply, then renormalize by the damped growth ratio.
        let products: Vec<SparseVector> = phi
            .iter()
            .map(|col| spmv(self.a, col))
            .collect::<Result<_>>()?;
        let norms_prod: Vec<f64> = products.iter().map(col_norm1).collect();
        if let Some(j) = norms_prod.iter().position(|&v| v <= 0.0) {
            return Err(Error::DeadColumn {
                column: j,
                iteration: i,
            });
        }
        let new_state = update_norm_state(&self.block.norm_state, &norms_prod, &norms_x, self.config.alpha)?;

        let orthogonalize =
            self.config.ortho_period > 0 && (i + 1) % self.config.ortho_period == 0;
        let g = if orthogonalize {
            build_g_orthogonalizing(&s, &phi, &new_state)?
        } else {
            build_g_plain(&new_state)?
        };
        let next_columns = g.apply_inverse(&products)?;

        self.block = IterateBlock {
            columns: next_columns,
            norm_state: new_state,
            iteration_index: i + 1,
        };
        Ok(())
    }

    /// Runs the configured number of iterations.
    pub fn run(&mut self) -> Result<()> {
        while self.block.iteration_index < self.config.total_iters {
            self.step()?;
        }
        Ok(())
    }
}

/// Convenience wrapper: initialize from the trial columns and run to
/// completion, returning the accumulator and the final block.
pub fn run(
    a: &SparseColumnMatrix,
    trial: &TrialSubspace,
    x0: Option<Vec<SparseVector>>,
    config: EngineConfig,
) -> Result<(TrajectoryAccumulator, IterateBlock)> {
    let x0 = x0.unwrap_or_else(|| default_initial_block(trial));
    let mut traj = init_trajectory(a, trial, x0, config)?;
    traj.run()?;
    let Trajectory {
        accumulator, block, ..
    } = traj;
    Ok((accumulator, block))
}
