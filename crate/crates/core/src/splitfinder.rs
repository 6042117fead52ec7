//! Optimal greedy L2 split of one node and its change-point p-value.
//!
//! For covariate `j` with responses ordered by `x_j`, a split at rank `r`
//! leaves within-group sums of squares `S_le(r)` and `S_gt(r)`. The scaled
//! improvement
//!
//! ```text
//! U_j = max_r (S - S_le(r) - S_gt(r)) / (S / n)
//! ```
//!
//! is a change-point statistic for a mean shift along `x_j`, and
//! `U_max = max_j U_j` is the statistic whose Bonferroni p-value is attached to
//! each split.
//!
//! The scan sorts every covariate once and makes one pass with prefix sums of
//! the node-centred responses, using
//! `S - S_le - S_gt = r (n - r) / n * (mean_le - mean_gt)^2`.

use crate::data::NodeData;
use crate::error::{Error, Result};
use crate::numerics::{bonferroni_p, PValueParams};

/// Sentinel p-value for nodes too small for the tail approximation.
pub const SMALL_NODE_P_VALUE: f64 = 1.0;

/// Relative margin a later `(j, r)` must win by to displace the incumbent.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// Best split of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitCandidate {
    /// Covariate index, 0-based.
    pub j_star: usize,
    /// Number of rows sent left, `1 <= r_star <= n - 1`.
    pub r_star: usize,
    /// Midpoint between the two covariate values straddling the split.
    pub threshold: f64,
    /// `U_max = n * rel_improvement`.
    pub u_scaled: f64,
    pub rel_improvement: f64,
    /// `d * p_n(U_max)`, or [`SMALL_NODE_P_VALUE`] when `n < 20`.
    pub p_value: f64,
    pub left_mean: f64,
    pub right_mean: f64,
}

/// Why a node cannot be split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoSplitReason {
    /// All responses are equal, so `S = 0`.
    ConstantResponse,
    /// `n < 2 * min_leaf`.
    TooFewRows,
    /// No covariate has an admissible boundary between distinct values.
    NoAdmissibleBoundary,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitOutcome {
    Split(SplitCandidate),
    NoSplit(NoSplitReason),
}

impl SplitOutcome {
    pub fn candidate(&self) -> Option<&SplitCandidate> {
        match self {
            SplitOutcome::Split(c) => Some(c),
            SplitOutcome::NoSplit(_) => None,
        }
    }

    pub fn into_candidate(self) -> Option<SplitCandidate> {
        match self {
            SplitOutcome::Split(c) => Some(c),
            SplitOutcome::NoSplit(_) => None,
        }
    }
}

/// `(S_le(r), S_gt(r), S)` for responses already in covariate order.
pub fn s_sums(y_sorted: &[f64], r: usize) -> Result<(f64, f64, f64)> {
    let n = y_sorted.len();
    if r == 0 || r >= n {
        return Err(Error::domain(format!(
            "split rank must lie in 1..={}, got {r}",
            n.saturating_sub(1)
        )));
    }
    Ok((
        sum_sq_dev(&y_sorted[..r]),
        sum_sq_dev(&y_sorted[r..]),
        sum_sq_dev(y_sorted),
    ))
}

fn sum_sq_dev(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|y| (y - mean) * (y - mean)).sum()
}

/// Whether `candidate` beats `incumbent` under the deterministic tie-break.
///
/// Scans run in ascending `(j, r)`, so keeping the incumbent on near-ties
/// selects the smallest `j`, then the smallest `r`.
pub fn improves_on(candidate: f64, incumbent: f64) -> bool {
    candidate > incumbent + TIE_TOLERANCE * incumbent.abs()
}

/// Split p-value with node size `n` and global covariate count `d`.
pub fn split_p_value(u_scaled: f64, n: usize, d: usize) -> f64 {
    match PValueParams::new(n, d) {
        Ok(params) => bonferroni_p(u_scaled.max(0.0), params).unwrap_or(SMALL_NODE_P_VALUE),
        Err(_) => SMALL_NODE_P_VALUE,
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    // Adjacent floats: keep `hi` strictly on the right.
    if mid >= hi {
        lo
    } else {
        mid
    }
}

/// Row positions (into the node) sorted by covariate `j`, ties by position.
pub(crate) fn sorted_positions(node: &NodeData<'_>, j: usize) -> Vec<usize> {
    let col = node.dataset().column(j);
    let rows = node.row_ids();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_unstable_by(|&a, &b| col[rows[a]].total_cmp(&col[rows[b]]).then(a.cmp(&b)));
    order
}

/// Optimal split over all covariates and admissible ranks.
///
/// A rank is admissible when both children hold at least `min_leaf` rows and
/// it falls between two distinct covariate values.
pub fn best_split(node: &NodeData<'_>, min_leaf: usize) -> SplitOutcome {
    let n = node.n();
    let min_leaf = min_leaf.max(1);
    if n < 2 * min_leaf {
        return SplitOutcome::NoSplit(NoSplitReason::TooFewRows);
    }
    let ys = node.responses();
    let (lo, hi) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
        (lo.min(y), hi.max(y))
    });
    if lo == hi {
        return SplitOutcome::NoSplit(NoSplitReason::ConstantResponse);
    }

    let nf = n as f64;
    let mean = ys.iter().sum::<f64>() / nf;
    let centred: Vec<f64> = ys.iter().map(|y| y - mean).collect();
    let total: f64 = centred.iter().sum();
    let s_total: f64 = centred.iter().map(|c| c * c).sum();

    // (j, r, rel, left_sum, order)
    let mut best: Option<(usize, usize, f64, f64, Vec<usize>)> = None;
    for j in 0..node.d() {
        let order = sorted_positions(node, j);
        let col = node.dataset().column(j);
        let rows = node.row_ids();
        let mut left_sum = 0.0;
        let mut best_here: Option<(usize, f64, f64)> = None;
        for r in 1..n {
            left_sum += centred[order[r - 1]];
            if r < min_leaf || n - r < min_leaf {
                continue;
            }
            if col[rows[order[r - 1]]] >= col[rows[order[r]]] {
                continue;
            }
            let rf = r as f64;
            let diff = left_sum / rf - (total - left_sum) / (nf - rf);
            let gain = rf * (nf - rf) / nf * diff * diff;
            let rel = (gain / s_total).min(1.0);
            let incumbent = best_here.map(|b| b.1).or(best.as_ref().map(|b| b.2));
            if incumbent.is_none_or(|inc| improves_on(rel, inc)) {
                best_here = Some((r, rel, left_sum));
            }
        }
        if let Some((r, rel, left_sum)) = best_here {
            best = Some((j, r, rel, left_sum, order));
        }
    }

    let Some((j, r, rel, left_sum, order)) = best else {
        return SplitOutcome::NoSplit(NoSplitReason::NoAdmissibleBoundary);
    };
    let col = node.dataset().column(j);
    let rows = node.row_ids();
    let threshold = midpoint(col[rows[order[r - 1]]], col[rows[order[r]]]);
    let u_scaled = nf * rel;
    let rf = r as f64;
    SplitOutcome::Split(SplitCandidate {
        j_star: j,
        r_star: r,
        threshold,
        u_scaled,
        rel_improvement: rel,
        p_value: split_p_value(u_scaled, n, node.d()),
        left_mean: mean + left_sum / rf,
        right_mean: mean + (total - left_sum) / (nf - rf),
    })
}
