//! Multi-shard compression: distributed identification of preserved
//! entries, apportionment of the sampling budget across shards, and
//! per-shard probability adjustment.
//!
//! The pipeline is simulated in a single process as a deterministic
//! multi-shard computation: reductions (global tail sums, the budget draw)
//! are synchronization points, per-shard sampling uses independent streams
//! keyed by (iteration, column, shard), and results are schedule-independent.

use rand::Rng;

use crate::compress::{
    finalize_probabilities, pivotal_sample, CompressionBudget, BUDGET_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::rng::{budget_stream, compression_stream};
use crate::sparse::SparseVector;

/// One shard of a distributed vector: a slice of (global index, value)
/// entries, in ascending index order.
#[derive(Debug, Clone)]
pub struct Shard {
    shard_id: usize,
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl Shard {
    pub fn new(shard_id: usize, dim: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_unstable_by_key(|&(i, _)| i);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidStructure(format!(
                    "duplicate index {} in shard {shard_id}",
                    w[0].0
                )));
            }
        }
        for &(i, v) in &entries {
            if i >= dim {
                return Err(Error::InvalidStructure(format!(
                    "index {i} out of range for dimension {dim} in shard {shard_id}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidStructure(format!(
                    "non-finite value at index {i} in shard {shard_id}"
                )));
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        Ok(Self {
            shard_id,
            dim,
            entries,
        })
    }

    pub fn shard_id(&self) -> usize {
        self.shard_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn norm1(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v.abs()).sum()
    }
}

/// Splits a vector into `shard_count` shards owning contiguous index blocks.
pub fn partition_contiguous(x: &SparseVector, shard_count: usize) -> Result<Vec<Shard>> {
    if shard_count == 0 {
        return Err(Error::InvalidArgument("shard count must be >= 1".into()));
    }
    let dim = x.dim();
    let block = dim.div_ceil(shard_count);
    let mut buckets: Vec<Vec<(usize, f64)>> = vec![Vec::new(); shard_count];
    for (&i, &v) in x.iter() {
        buckets[(i / block).min(shard_count - 1)].push((i, v));
    }
    buckets
        .into_iter()
        .enumerate()
        .map(|(s, entries)| Shard::new(s, dim, entries))
        .collect()
}

/// Reassembles the global vector from shards (validates the partition).
fn merge_shards(shards: &[Shard]) -> Result<SparseVector> {
    if shards.is_empty() {
        return Err(Error::InvalidArgument("no shards".into()));
    }
    let dim = shards[0].dim;
    let mut pairs = Vec::new();
    for s in shards {
        if s.dim != dim {
            return Err(Error::DimensionMismatch(format!(
                "shard {} has dimension {} but shard {} has {dim}",
                s.shard_id, s.dim, shards[0].shard_id
            )));
        }
        pairs.extend_from_slice(&s.entries);
    }
    SparseVector::from_pairs(dim, pairs)
}

/// Identifies the exactly-preserved set across shards.
///
/// Runs adaptive rounds: every shard tests its largest remaining entries
/// against a frozen snapshot of the global tail sum and preserved count,
/// qualifying entries are committed, and the snapshot is refreshed once all
/// shards exhaust their qualifying prefix. Terminates when a full round adds
/// nothing. The result is set-equal to the serial selection rule applied to
/// the concatenated vector.
pub fn distributed_select_preserved(
    shards: &[Shard],
    m: CompressionBudget,
) -> Result<(Vec<usize>, usize)> {
    if shards.is_empty() {
        return Err(Error::InvalidArgument("no shards".into()));
    }
    let m = m.get();

    // Fits-budget case decided by integer comparison, as in the serial rule.
    let total_nnz: usize = shards.iter().map(|s| s.entries.len()).sum();
    if total_nnz <= m {
        let mut preserved: Vec<usize> = shards
            .iter()
            .flat_map(|s| s.entries.iter().map(|&(i, _)| i))
            .collect();
        preserved.sort_unstable();
        let d = preserved.len();
        return Ok((preserved, d));
    }

    // Local max-magnitude orderings (ties by ascending global index).
    let sorted: Vec<Vec<(usize, f64)>> = shards
        .iter()
        .map(|s| {
            let mut v = s.entries.clone();
            v.sort_by(|a, b| {
                b.1.abs()
                    .partial_cmp(&a.1.abs())
                    .expect("finite values")
                    .then(a.0.cmp(&b.0))
            });
            v
        })
        .collect();
    let mut cursors = vec![0usize; shards.len()];

    let mut tail: f64 = shards.iter().map(Shard::norm1).sum();
    let mut preserved: Vec<usize> = Vec::new();

    loop {
        let d_frozen = preserved.len();
        if d_frozen >= m {
            break;
        }
        let tail_frozen = tail;
        let budget_left = (m - d_frozen) as f64;
        let mut added = false;
        for (s, local) in sorted.iter().enumerate() {
            let cur = &mut cursors[s];
            while *cur < local.len() {
                let (idx, val) = local[*cur];
                if val.abs() * budget_left >= tail_frozen {
                    preserved.push(idx);
                    tail -= val.abs();
                    *cur += 1;
                    added = true;
                } else {
                    break;
                }
            }
        }
        debug_assert!(preserved.len() <= m, "round overshot the budget");
        if !added {
            break;
        }
    }

    preserved.sort_unstable();
    let d = preserved.len();
    Ok((preserved, d))
}

/// Random integer budgets per shard with the prescribed expectations.
#[derive(Debug, Clone)]
pub struct BudgetAssignment {
    /// E[g_k] = g * mass_k / total mass.
    pub expected: Vec<f64>,
    /// Floor of each expectation.
    pub floors: Vec<usize>,
    /// Fractional parts; the +1 winners are drawn from these pivotally.
    pub residuals: Vec<f64>,
    /// Number of +1 winners, g - sum(floors).
    pub carry: usize,
    /// Realized budgets; sums to g exactly on every draw.
    pub realized: Vec<usize>,
}

/// Apportions the sampling budget `g` across shards with probability masses
/// `masses` (and `counts` candidates each).
pub fn apportion_budget<R: Rng + ?Sized>(
    masses: &[f64],
    counts: &[usize],
    g: usize,
    rng: &mut R,
) -> Result<BudgetAssignment> {
    if masses.len() != counts.len() {
        return Err(Error::DimensionMismatch(
            "masses/counts length mismatch".into(),
        ));
    }
    let total_candidates: usize = counts.iter().sum();
    if g > total_candidates {
        return Err(Error::InvalidArgument(format!(
            "budget {g} exceeds {total_candidates} candidates"
        )));
    }
    if masses.iter().any(|&m| m < 0.0 || !m.is_finite()) {
        return Err(Error::InvalidArgument("negative shard mass".into()));
    }
    let total: f64 = masses.iter().sum();
    if g > 0 && total <= 0.0 {
        return Err(Error::InvalidArgument(
            "zero total mass with nonzero budget".into(),
        ));
    }

    let expected: Vec<f64> = masses
        .iter()
        .map(|&mk| if g == 0 { 0.0 } else { g as f64 * mk / total })
        .collect();
    let floors: Vec<usize> = expected.iter().map(|&e| e.floor() as usize).collect();
    let residuals: Vec<f64> = expected
        .iter()
        .zip(floors.iter())
        .map(|(&e, &f)| e - f as f64)
        .collect();
    let floor_sum: usize = floors.iter().sum();
    if floor_sum > g {
        return Err(Error::InvalidArgument(
            "floor budgets exceed total budget".into(),
        ));
    }
    let carry = g - floor_sum;

    let winners = pivotal_sample(&residuals, carry, rng)?;
    let mut realized = floors.clone();
    for w in &winners {
        realized[*w] += 1;
    }
    debug_assert_eq!(realized.iter().sum::<usize>(), g);

    Ok(BudgetAssignment {
        expected,
        floors,
        residuals,
        carry,
        realized,
    })
}

/// Adjusts a shard's inclusion probabilities so they sum exactly to the
/// realized budget `g_k`.
///
/// Only a prefix of the entries is modified: entries beyond the pivot index
/// are returned untouched, bit for bit. The pivot entry absorbs whatever is
/// needed for exact conservation.
pub fn adjust_probabilities(q: &[f64], t: f64, g_k: usize, expected: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0 + BUDGET_TOLERANCE).contains(&t) {
        return Err(Error::InvalidArgument(format!(
            "residual {t} outside [0, 1)"
        )));
    }
    let floor = expected.floor() as usize;
    if g_k != floor && g_k != floor + 1 {
        return Err(Error::InvalidArgument(format!(
            "realized budget {g_k} not within one of expectation {expected}"
        )));
    }
    // Integer expectation (or numerically so): nothing to adjust. This also
    // covers the residual-of-one drift case, where the budget is certain.
    if t <= BUDGET_TOLERANCE || t >= 1.0 - BUDGET_TOLERANCE {
        return Ok(q.to_vec());
    }
    let raised = g_k as f64 > expected;

    let e_k = q.len();
    if e_k == 0 {
        if g_k == 0 {
            return Ok(Vec::new());
        }
        return Err(Error::InvalidArgument(
            "nonzero budget for an empty shard".into(),
        ));
    }

    // Suffix sums of the untouched probabilities.
    let mut suffix = vec![0.0_f64; e_k + 1];
    for j in (0..e_k).rev() {
        suffix[j] = suffix[j + 1] + q[j];
    }

    let y = |qi: f64| -> f64 {
        if raised {
            (qi / t).min(1.0)
        } else {
            ((qi - t) / (1.0 - t)).max(0.0)
        }
    };

    // The crossing exists analytically but can sit on an exact boundary
    // (e.g. sum of adjusted entries equal to the budget), so compare with a
    // small slack and fall back to the last entry.
    let slack = 1e-12 * (1.0 + g_k as f64);
    let mut prefix_y = 0.0_f64;
    let mut pivot: Option<usize> = None;
    for j in 0..e_k {
        let z_j = prefix_y + y(q[j]) + suffix[j + 1];
        let crossed = if raised {
            z_j >= g_k as f64 - slack
        } else {
            z_j <= g_k as f64 + slack
        };
        if crossed {
            pivot = Some(j);
            break;
        }
        prefix_y += y(q[j]);
    }
    let h = pivot.unwrap_or(e_k - 1);

    let mut out = Vec::with_capacity(e_k);
    for &qi in q.iter().take(h) {
        out.push(y(qi));
    }
    let pivot_value = g_k as f64 - prefix_y - suffix[h + 1];
    if !(-1e-9..=1.0 + 1e-9).contains(&pivot_value) {
        return Err(Error::InvalidArgument(format!(
            "pivot probability {pivot_value} outside [0, 1]: malformed input"
        )));
    }
    out.push(pivot_value.clamp(0.0, 1.0));
    out.extend_from_slice(&q[h + 1..]);
    Ok(out)
}

/// End-to-end sharded compression of a vector given as shards.
///
/// Composition of preserved-set identification, budget apportionment,
/// probability adjustment, and per-shard pivotal sampling. Selected entries
/// are reweighted by the inverse of their global inclusion probability, so
/// the output is unbiased: E[output] = input. A single shard reproduces
/// unsharded `compress` bit for bit.
pub fn sharded_compress(
    shards: &[Shard],
    m: CompressionBudget,
    seed: u64,
    iteration: u64,
    column: u64,
) -> Result<SparseVector> {
    let x = merge_shards(shards)?;
    if x.is_zero() || x.nnz() <= m.get() {
        return Ok(x);
    }

    let (preserved, _d) = distributed_select_preserved(shards, m)?;

    // Global candidate magnitudes, ascending index. The normalizing tail is
    // summed in the same order the serial planner uses, so plans agree bit
    // for bit across shard layouts.
    let mut candidate_mags: Vec<(usize, f64)> = Vec::new();
    for s in shards {
        for &(i, v) in s.entries() {
            if preserved.binary_search(&i).is_err() {
                candidate_mags.push((i, v.abs()));
            }
        }
    }
    candidate_mags.sort_unstable_by_key(|&(i, _)| i);
    let tail: f64 = candidate_mags.iter().map(|&(_, mag)| mag).sum();

    let plan = finalize_probabilities(x.dim(), m.get(), preserved, candidate_mags, tail);
    let g = plan.sample_count();
    let mut pairs: Vec<(usize, f64)> = plan.preserved().iter().map(|&i| (i, x.get(i))).collect();

    if g > 0 {
        // Shard-local probability vectors, ascending global index.
        let mut per_shard_q: Vec<Vec<(usize, f64)>> = vec![Vec::new(); shards.len()];
        for &(i, p) in plan.candidates() {
            let owner = shards
                .iter()
                .position(|s| s.entries.binary_search_by_key(&i, |&(j, _)| j).is_ok())
                .expect("candidate belongs to a shard");
            per_shard_q[owner].push((i, p));
        }
        let masses: Vec<f64> = per_shard_q
            .iter()
            .map(|q| q.iter().map(|&(_, p)| p).sum())
            .collect();
        let counts: Vec<usize> = per_shard_q.iter().map(Vec::len).collect();

        let mut coordinator = budget_stream(seed, iteration, column);
        let budget = apportion_budget(&masses, &counts, g, &mut coordinator)?;

        for (k, shard) in shards.iter().enumerate() {
            let g_k = budget.realized[k];
            let local = &per_shard_q[k];
            if local.is_empty() {
                continue;
            }
            let q: Vec<f64> = local.iter().map(|&(_, p)| p).collect();
            let adjusted = adjust_probabilities(&q, budget.residuals[k], g_k, budget.expected[k])?;
            let mut stream = compression_stream(seed, iteration, column, shard.shard_id as u64);
            let chosen = pivotal_sample(&adjusted, g_k, &mut stream)?;
            for pos in chosen {
                let (i, p_global) = local[pos];
                pairs.push((i, x.get(i) / p_global));
            }
        }
    }

    SparseVector::from_pairs(x.dim(), pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compress::{compress, select_preserved};
    use crate::rng::substream;
    use rand::Rng;

    fn vec4() -> SparseVector {
        SparseVector::new(4, vec![0, 1, 2, 3], vec![4.0, 2.0, 1.0, 1.0]).unwrap()
    }

    fn budget(m: usize) -> CompressionBudget {
        CompressionBudget::new(m).unwrap()
    }

    #[test]
    fn single_shard_selection_matches_serial() {
        let mut rng = substream(3, &[100]);
        for _ in 0..50 {
            let n = rng.random_range(4..40);
            let mut pairs = Vec::new();
            for i in 0..n {
                if rng.random::<f64>() < 0.8 {
                    pairs.push((i, rng.random_range(-2.0..2.0_f64)));
                }
            }
            let x = SparseVector::from_pairs(n, pairs).unwrap();
            if x.is_zero() {
                continue;
            }
            let m = rng.random_range(1..=n);
            let shards = partition_contiguous(&x, 1).unwrap();
            let (dist, d) = distributed_select_preserved(&shards, budget(m)).unwrap();
            let serial = select_preserved(&x, budget(m)).unwrap();
            assert_eq!(dist, serial.preserved());
            assert_eq!(d, serial.preserved_count());
        }
    }

    #[test]
    fn hand_case_split_selection() {
        let x = vec4();
        // split [4,2] | [1,1]
        let shards = vec![
            Shard::new(0, 4, vec![(0, 4.0), (1, 2.0)]).unwrap(),
            Shard::new(1, 4, vec![(2, 1.0), (3, 1.0)]).unwrap(),
        ];
        let (d_set, d) = distributed_select_preserved(&shards, budget(2)).unwrap();
        assert_eq!(d_set, vec![0]);
        assert_eq!(d, 1);
        let serial = select_preserved(&x, budget(2)).unwrap();
        assert_eq!(d_set, serial.preserved());
    }

    #[test]
    fn random_sharding_matches_serial_selection() {
        let mut rng = substream(5, &[101]);
        for trial in 0..100 {
            let n = rng.random_range(8..60);
            let mut pairs = Vec::new();
            for i in 0..n {
                if rng.random::<f64>() < 0.7 {
                    // Mix scales so preserved sets are nontrivial.
                    let scale = if rng.random::<f64>() < 0.2 { 50.0 } else { 1.0 };
                    pairs.push((i, scale * rng.random_range(-1.0..1.0_f64)));
                }
            }
            let x = SparseVector::from_pairs(n, pairs).unwrap();
            if x.is_zero() {
                continue;
            }
            let m = rng.random_range(1..=n);
            // Random 4-way ownership, not necessarily contiguous.
            let mut buckets: Vec<Vec<(usize, f64)>> = vec![Vec::new(); 4];
            for (&i, &v) in x.iter() {
                buckets[rng.random_range(0..4)].push((i, v));
            }
            let shards: Vec<Shard> = buckets
                .into_iter()
                .enumerate()
                .map(|(s, e)| Shard::new(s, n, e).unwrap())
                .collect();
            let (dist, _) = distributed_select_preserved(&shards, budget(m)).unwrap();
            let serial = select_preserved(&x, budget(m)).unwrap();
            assert_eq!(dist, serial.preserved(), "trial {trial}");
        }
    }

    #[test]
    fn budget_integer_expectations_deterministic() {
        // Masses 3 and 2 of total 5 with g = 5: E = (3, 2) exactly.
        let mut rng = substream(7, &[102]);
        for _ in 0..200 {
            let b = apportion_budget(&[3.0, 2.0], &[10, 10], 5, &mut rng).unwrap();
            assert_eq!(b.realized, vec![3, 2]);
            assert_eq!(b.carry, 0);
        }
    }

    #[test]
    fn budget_half_split_frequencies() {
        let mut rng = substream(9, &[103]);
        let trials = 100_000usize;
        let mut first_won = 0usize;
        for _ in 0..trials {
            let b = apportion_budget(&[0.5, 0.5], &[5, 5], 5, &mut rng).unwrap();
            assert_eq!(b.realized.iter().sum::<usize>(), 5);
            assert_eq!(b.carry, 1);
            match (b.realized[0], b.realized[1]) {
                (3, 2) => first_won += 1,
                (2, 3) => {}
                other => panic!("unexpected outcome {other:?}"),
            }
        }
        let freq = first_won as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.005, "frequency {freq}");
    }

    #[test]
    fn budget_empty_shard_gets_zero() {
        let mut rng = substream(11, &[104]);
        for _ in 0..100 {
            let b = apportion_budget(&[0.0, 1.3, 0.7], &[0, 4, 3], 2, &mut rng).unwrap();
            assert_eq!(b.realized[0], 0);
            assert_eq!(b.realized.iter().sum::<usize>(), 2);
        }
    }

    #[test]
    fn budget_rejects_overflow() {
        let mut rng = substream(1, &[105]);
        assert!(apportion_budget(&[1.0], &[2], 3, &mut rng).is_err());
    }

    #[test]
    fn adjust_no_op_for_integer_expectation() {
        let q = [0.25, 0.5, 0.25];
        let out = adjust_probabilities(&q, 0.0, 1, 1.0).unwrap();
        assert_eq!(out, q.to_vec());
    }

    #[test]
    fn adjust_hand_case_raised() {
        let q = [0.5, 0.5, 0.5];
        let out = adjust_probabilities(&q, 0.5, 2, 1.5).unwrap();
        assert_eq!(out, vec![1.0, 0.5, 0.5]);
        assert_eq!(out.iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn adjust_hand_case_lowered() {
        let q = [0.5, 0.5, 0.5];
        let out = adjust_probabilities(&q, 0.5, 1, 1.5).unwrap();
        assert_eq!(out, vec![0.0, 0.5, 0.5]);
        assert_eq!(out.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn adjust_conserves_sum_and_prefix_locality() {
        let mut rng = substream(13, &[106]);
        for _ in 0..500 {
            let n = rng.random_range(2..12);
            let q: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.99)).collect();
            let mass: f64 = q.iter().sum();
            let t = mass - mass.floor();
            if t <= 1e-9 || t >= 1.0 - 1e-9 {
                continue;
            }
            for raised in [false, true] {
                let g_k = if raised {
                    mass.floor() as usize + 1
                } else {
                    mass.floor() as usize
                };
                if !raised && g_k == 0 {
                    continue;
                }
                let out = adjust_probabilities(&q, t, g_k, mass).unwrap();
                let sum: f64 = out.iter().sum();
                assert!(
                    (sum - g_k as f64).abs() < 1e-10,
                    "sum {sum} vs {g_k} (raised {raised})"
                );
                assert!(out.iter().all(|&p| (-1e-12..=1.0 + 1e-12).contains(&p)));
                // Entries beyond the pivot must be untouched bit-exactly.
                let changed: Vec<usize> = (0..n).filter(|&i| out[i] != q[i]).collect();
                if let Some(&last_changed) = changed.last() {
                    for i in (last_changed + 1)..n {
                        assert!(out[i] == q[i]);
                    }
                }
            }
        }
    }

    #[test]
    fn marginal_identity_over_budget_outcomes() {
        // t * q_plus + (1 - t) * q_minus == q, elementwise: the adjustment
        // preserves marginals by the law of total probability.
        let mut rng = substream(15, &[107]);
        for _ in 0..200 {
            let n = rng.random_range(2..10);
            let q: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..0.99)).collect();
            let mass: f64 = q.iter().sum();
            let t = mass - mass.floor();
            if t <= 1e-9 || t >= 1.0 - 1e-9 || mass.floor() == 0.0 {
                continue;
            }
            let up = adjust_probabilities(&q, t, mass.floor() as usize + 1, mass).unwrap();
            let down = adjust_probabilities(&q, t, mass.floor() as usize, mass).unwrap();
            for i in 0..n {
                let mix = t * up[i] + (1.0 - t) * down[i];
                assert!(
                    (mix - q[i]).abs() < 1e-10,
                    "marginal {i}: {mix} vs {}",
                    q[i]
                );
            }
        }
    }

    #[test]
    fn single_shard_bit_equals_compress() {
        let x = vec4();
        for iter in 0..20u64 {
            let shards = partition_contiguous(&x, 1).unwrap();
            let sharded = sharded_compress(&shards, budget(2), 17, iter, 3).unwrap();
            let mut rng = compression_stream(17, iter, 3, 0);
            let serial = compress(&x, budget(2), &mut rng).unwrap();
            assert_eq!(sharded, serial);
        }
    }

    #[test]
    fn sharded_budget_conservation_every_draw() {
        let x = vec4();
        let shards = vec![
            Shard::new(0, 4, vec![(0, 4.0), (2, 1.0)]).unwrap(),
            Shard::new(1, 4, vec![(1, 2.0), (3, 1.0)]).unwrap(),
        ];
        for iter in 0..10_000u64 {
            let out = sharded_compress(&shards, budget(2), 23, iter, 0).unwrap();
            assert_eq!(out.nnz(), 2, "iteration {iter}");
        }
        let _ = x;
    }

    #[test]
    fn sharded_empirical_mean_unbiased() {
        let x = vec4();
        let shards = partition_contiguous(&x, 2).unwrap();
        let trials = 100_000usize;
        let mut mean = vec![0.0_f64; 4];
        let mut m2 = vec![0.0_f64; 4];
        for t in 0..trials {
            let out = sharded_compress(&shards, budget(2), 29, t as u64, 0)
                .unwrap()
                .to_dense();
            for i in 0..4 {
                let delta = out[i] - mean[i];
                mean[i] += delta / (t + 1) as f64;
                m2[i] += delta * (out[i] - mean[i]);
            }
        }
        let xd = x.to_dense();
        for i in 0..4 {
            let se = (m2[i] / (trials as f64 - 1.0) / trials as f64).sqrt();
            assert!(
                (mean[i] - xd[i]).abs() <= 4.0 * se.max(1e-12),
                "entry {i}: mean {} vs {} (se {se})",
                mean[i],
                xd[i]
            );
        }
    }

    #[test]
    fn sharded_marginals_match_global_probabilities() {
        // 12-entry vector, 3 shards: end-to-end inclusion frequency of each
        // candidate equals its global probability.
        let pairs: Vec<(usize, f64)> = (0..12).map(|i| (i, 1.0 + 0.3 * i as f64)).collect();
        let x = SparseVector::from_pairs(12, pairs).unwrap();
        let shards = partition_contiguous(&x, 3).unwrap();
        let m = budget(5);
        let plan = select_preserved(&x, m).unwrap();
        let trials = 100_000usize;
        let mut counts = vec![0usize; 12];
        for t in 0..trials {
            let out = sharded_compress(&shards, m, 31, t as u64, 1).unwrap();
            for (&i, _) in out.iter() {
                counts[i] += 1;
            }
        }
        for i in 0..12 {
            let p = plan.probability_of(i);
            let freq = counts[i] as f64 / trials as f64;
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            assert!(
                (freq - p).abs() <= 4.0 * se.max(1e-12),
                "index {i}: freq {freq} vs p {p} (se {se})"
            );
        }
    }
}
