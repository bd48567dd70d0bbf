//! Stochastic vector compression: exact preservation of dominant entries
//! plus pivotal sampling of the remainder.
//!
//! `compress` maps a sparse vector to a random sparse vector with at most
//! `m` nonzeros and elementwise expectation equal to the input. The
//! largest-magnitude entries are kept exactly; the rest are sampled without
//! replacement with inclusion probabilities proportional to magnitude, and
//! survivors are reweighted by the inverse probability.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::compression_stream;
use crate::sparse::SparseVector;

/// Probabilities this close to one are treated as certain. Guards the
/// sampler against floating-point drift; the selection rule keeps exact
/// probabilities strictly below one analytically.
pub const CERTAINTY_GUARD: f64 = 1e-12;

/// Tolerance on `sum(p) == g` accepted by the sampler.
pub const BUDGET_TOLERANCE: f64 = 1e-9;

/// Maximum number of nonzero elements allowed in a compressed vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompressionBudget(usize);

impl CompressionBudget {
    pub fn new(m: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidArgument("compression budget must be >= 1".into()));
        }
        Ok(Self(m))
    }

    pub fn get(&self) -> usize {
        self.0
    }
}

/// The deterministic part of a compression: which entries are preserved
/// exactly, how many are sampled, and with what inclusion probabilities.
#[derive(Debug, Clone)]
pub struct CompressionPlan {
    dim: usize,
    /// Indices preserved exactly, ascending.
    preserved: Vec<usize>,
    /// Number of entries drawn from the candidates.
    sample_count: usize,
    /// (index, inclusion probability) for non-preserved nonzeros, ascending
    /// by index. Probabilities sum to `sample_count` and lie in (0, 1).
    candidates: Vec<(usize, f64)>,
}

impl CompressionPlan {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn preserved(&self) -> &[usize] {
        &self.preserved
    }

    pub fn preserved_count(&self) -> usize {
        self.preserved.len()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn candidates(&self) -> &[(usize, f64)] {
        &self.candidates
    }

    /// Inclusion probability of a global index: 1 for preserved entries,
    /// the planned probability for candidates, 0 otherwise.
    pub fn probability_of(&self, index: usize) -> f64 {
        if self.preserved.binary_search(&index).is_ok() {
            return 1.0;
        }
        match self.candidates.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.candidates[pos].1,
            Err(_) => 0.0,
        }
    }
}

/// Splits the entries of `x` into exactly-preserved and sampled parts for a
/// budget of `m` nonzeros.
///
/// An entry joins the preserved set while its magnitude times the remaining
/// budget is at least the remaining tail mass; every entry left outside
/// satisfies the strict converse, which bounds its inclusion probability
/// below one. Ties in magnitude are broken by ascending index.
pub fn select_preserved(x: &SparseVector, m: CompressionBudget) -> Result<CompressionPlan> {
    if x.is_zero() {
        return Err(Error::InvalidArgument("cannot plan compression of a zero vector".into()));
    }
    let m = m.get();

    // Everything fits: preserve all nonzeros, nothing sampled. Decided by
    // integer comparison so no accumulated-rounding chain can drop the last
    // entry at the equality boundary.
    if x.nnz() <= m {
        return Ok(CompressionPlan {
            dim: x.dim(),
            preserved: x.indices().to_vec(),
            sample_count: 0,
            candidates: Vec::new(),
        });
    }

    let mut order: Vec<usize> = (0..x.nnz()).collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (x.values()[a].abs(), x.values()[b].abs());
        vb.partial_cmp(&va)
            .expect("finite values")
            .then(x.indices()[a].cmp(&x.indices()[b]))
    });

    let mut tail: f64 = x.values().iter().map(|v| v.abs()).sum();
    let mut preserved_pos: Vec<usize> = Vec::new();
    let mut cut = 0usize;
    for &pos in &order {
        if preserved_pos.len() >= m {
            break;
        }
        let mag = x.values()[pos].abs();
        let d = preserved_pos.len();
        if mag * (m - d) as f64 >= tail {
            preserved_pos.push(pos);
            tail -= mag;
            cut += 1;
        } else {
            break;
        }
    }

    let _ = tail;
    let preserved: Vec<usize> = preserved_pos.iter().map(|&p| x.indices()[p]).collect();
    let mut candidate_mags: Vec<(usize, f64)> = order[cut..]
        .iter()
        .map(|&pos| (x.indices()[pos], x.values()[pos].abs()))
        .collect();
    candidate_mags.sort_unstable_by_key(|&(i, _)| i);
    // Normalize over the candidates in index order; the sharded pipeline
    // sums the same terms in the same order, so plans agree bit for bit
    // across shard layouts.
    let tail: f64 = candidate_mags.iter().map(|&(_, mag)| mag).sum();

    Ok(finalize_probabilities(
        x.dim(),
        m,
        preserved,
        candidate_mags,
        tail,
    ))
}

/// Turns a preserved/candidate split into a plan with probabilities.
///
/// Candidates whose probability rounds to one (floating-point drift; the
/// selection rule keeps them below one analytically) are promoted into the
/// preserved set and the probabilities are recomputed. Shared by the serial
/// and sharded pipelines so a single-shard run is bit-identical to serial.
pub(crate) fn finalize_probabilities(
    dim: usize,
    m: usize,
    mut preserved: Vec<usize>,
    mut candidate_mags: Vec<(usize, f64)>,
    mut tail: f64,
) -> CompressionPlan {
    loop {
        let d = preserved.len();
        let g = (m - d).min(candidate_mags.len());
        if g == 0 {
            preserved.sort_unstable();
            return CompressionPlan {
                dim,
                preserved,
                sample_count: 0,
                candidates: Vec::new(),
            };
        }
        let mut promoted = false;
        let mut keep = Vec::with_capacity(candidate_mags.len());
        for &(i, mag) in &candidate_mags {
            let p = g as f64 * mag / tail;
            if p >= 1.0 - CERTAINTY_GUARD && preserved.len() < m {
                tail -= mag;
                preserved.push(i);
                promoted = true;
            } else {
                keep.push((i, mag));
            }
        }
        candidate_mags = keep;
        if !promoted {
            preserved.sort_unstable();
            let candidates: Vec<(usize, f64)> = candidate_mags
                .iter()
                .map(|&(i, mag)| (i, g as f64 * mag / tail))
                .collect();
            return CompressionPlan {
                dim,
                preserved,
                sample_count: g,
                candidates,
            };
        }
    }
}

/// Selects exactly `g` positions from `p` without replacement such that
/// position `i` is included with probability `p[i]`.
///
/// Entries numerically certain (>= 1 - guard) are peeled off
/// deterministically; zero entries can never be selected. The remaining
/// entries are consumed in their given order by the recursive pivotal rule:
/// take the longest prefix with total probability below one, pick a
/// provisional winner within it proportionally to probability, then either
/// commit the winner or displace it in favor of the entry that crossed the
/// unit boundary, carrying the leftover probability forward.
pub fn pivotal_sample<R: Rng + ?Sized>(p: &[f64], g: usize, rng: &mut R) -> Result<Vec<usize>> {
    let mut sum = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        if !(0.0..=1.0 + CERTAINTY_GUARD).contains(&pi) || !pi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "inclusion probability {pi} at position {i} outside [0, 1]"
            )));
        }
        sum += pi;
    }
    if (sum - g as f64).abs() > BUDGET_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "probabilities sum to {sum} but budget is {g}"
        )));
    }

    let mut selected: Vec<usize> = Vec::with_capacity(g);
    let mut work: Vec<(usize, f64)> = Vec::with_capacity(p.len());
    for (i, &pi) in p.iter().enumerate() {
        if pi >= 1.0 - CERTAINTY_GUARD {
            selected.push(i);
        } else if pi > 0.0 {
            work.push((i, pi));
        }
    }
    if selected.len() > g {
        return Err(Error::InvalidArgument(format!(
            "{} certain entries exceed budget {g}",
            selected.len()
        )));
    }
    let mut need = g - selected.len();

    let mut pos = 0usize;
    let mut carry: Option<(usize, f64)> = None;
    while need > 0 {
        // Effective list: carry entry (if any) followed by work[pos..].
        let head: Vec<(usize, f64)> = carry.iter().cloned().collect();
        let effective = || head.iter().chain(work[pos..].iter());

        let mut prefix_sum = 0.0;
        let mut s = 0usize;
        let mut boundary: Option<(usize, f64)> = None;
        for &(idx, prob) in effective() {
            if prefix_sum + prob < 1.0 {
                prefix_sum += prob;
                s += 1;
            } else {
                boundary = Some((idx, prob));
                break;
            }
        }

        let Some((boundary_idx, boundary_prob)) = boundary else {
            // Whole remainder sums below one: only a final draw is left.
            if need != 1 {
                return Err(Error::InvalidArgument(format!(
                    "pivotal sampler ran out of mass with {need} selections pending"
                )));
            }
            if prefix_sum <= 0.0 {
                return Err(Error::InvalidArgument(
                    "no probability mass left for the final selection".into(),
                ));
            }
            let u = rng.random::<f64>() * prefix_sum;
            let mut cum = 0.0;
            let mut chosen = None;
            for &(idx, prob) in effective() {
                cum += prob;
                if u < cum {
                    chosen = Some(idx);
                    break;
                }
            }
            let fallback = effective().filter(|e| e.1 > 0.0).last().map(|e| e.0);
            selected.push(chosen.or(fallback).expect("positive mass present"));
            need -= 1;
            break;
        };

        debug_assert!(s >= 1, "first entry always fits below unit mass");
        if prefix_sum <= 0.0 {
            return Err(Error::InvalidArgument(
                "zero-mass prefix in pivotal recursion".into(),
            ));
        }

        // Provisional winner h, proportional to probability within the prefix.
        let u = rng.random::<f64>() * prefix_sum;
        let mut cum = 0.0;
        let mut winner: Option<usize> = None;
        for &(idx, prob) in effective().take(s) {
            cum += prob;
            if u < cum {
                winner = Some(idx);
                break;
            }
        }
        let winner = winner
            .or_else(|| {
                effective()
                    .take(s)
                    .filter(|e| e.1 > 0.0)
                    .last()
                    .map(|e| e.0)
            })
            .expect("prefix has positive mass");

        let a = 1.0 - prefix_sum;
        let b = (boundary_prob - a).clamp(0.0, 1.0);
        let keep_winner_prob = (1.0 - a / (1.0 - b)).clamp(0.0, 1.0);

        let consumed_from_work = s + 1 - head.len();
        pos += consumed_from_work;

        if rng.random::<f64>() < keep_winner_prob {
            selected.push(winner);
            carry = (b > 0.0).then_some((boundary_idx, b));
        } else {
            selected.push(boundary_idx);
            carry = (b > 0.0).then_some((winner, b));
        }
        need -= 1;
    }

    selected.sort_unstable();
    Ok(selected)
}

/// Compresses `x` to at most `m` nonzeros with elementwise expectation `x`.
///
/// A vector that already fits the budget is returned unchanged, bit for bit.
pub fn compress<R: Rng + ?Sized>(
    x: &SparseVector,
    m: CompressionBudget,
    rng: &mut R,
) -> Result<SparseVector> {
    if x.is_zero() || x.nnz() <= m.get() {
        return Ok(x.clone());
    }
    let plan = select_preserved(x, m)?;
    compress_with_plan(x, &plan, rng)
}

/// Applies a precomputed plan; separated out so callers can inspect the plan.
pub fn compress_with_plan<R: Rng + ?Sized>(
    x: &SparseVector,
    plan: &CompressionPlan,
    rng: &mut R,
) -> Result<SparseVector> {
    let probs: Vec<f64> = plan.candidates.iter().map(|&(_, p)| p).collect();
    let chosen = pivotal_sample(&probs, plan.sample_count, rng)?;

    let mut pairs: Vec<(usize, f64)> = Vec::with_capacity(plan.preserved.len() + chosen.len());
    for &i in &plan.preserved {
        pairs.push((i, x.get(i)));
    }
    for pos in chosen {
        let (i, p) = plan.candidates[pos];
        pairs.push((i, x.get(i) / p));
    }
    SparseVector::from_pairs(x.dim(), pairs)
}

/// Compresses each column independently with its own derived stream.
///
/// Column `j` of iteration `iteration` always sees the same stream for a
/// given seed, so results do not depend on evaluation order.
pub fn compress_block(
    columns: &[SparseVector],
    m: CompressionBudget,
    seed: u64,
    iteration: u64,
) -> Result<Vec<SparseVector>> {
    columns
        .iter()
        .enumerate()
        .map(|(j, col)| {
            let mut stream = compression_stream(seed, iteration, j as u64, 0);
            compress(col, m, &mut stream)
        })
        .collect()
}
