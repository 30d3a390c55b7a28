//! Relation between the score gap after rank `h` and stage-1 recall.

use super::index::HybridIndex;
use super::topk::top_k_by;
use crate::data::{hybrid_dot, HybridDataset, HybridVectorRef};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport {
    /// Exact score of rank `h` minus exact score of rank `ceil(alpha·h)`.
    pub gap: f64,
    /// Fraction of points whose stage-1 error is below `gap / 2`.
    pub small_error_fraction: f64,
    /// Recall@h of the stage-1 candidate set.
    pub recall: f64,
    /// `gap ≤ 0`: the inequality carries no information.
    pub degenerate: bool,
}

impl GapReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.degenerate || self.recall >= self.small_error_fraction - slack
    }
}

/// Compares the stage-1 approximation of `idx` against exact scores on
/// `data`, which must be the (weighted) dataset the index was built from.
pub fn gap_recall_check(
    idx: &HybridIndex,
    data: &HybridDataset,
    q: HybridVectorRef<'_>,
    h: usize,
    alpha: f64,
) -> Result<GapReport> {
    let n = idx.len();
    if data.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: data.len(),
        });
    }
    if h == 0 || alpha.is_nan() || alpha < 1.0 {
        return Err(Error::config("need h >= 1 and alpha >= 1"));
    }
    let exact: Vec<f64> = (0..n).map(|i| hybrid_dot(q, data.point(i))).collect::<Result<_>>()?;
    let n_alpha = ((alpha * h as f64).ceil() as usize).min(n);
    let h = h.min(n);
    let ranked = top_k_by(n, n_alpha, |i| (exact[i], i as u32));
    let gap = exact[ranked[h - 1]] - exact[ranked[n_alpha - 1]];

    let approx = idx.stage1_scores(q)?;
    let perm = idx.sparse_index().permutation();
    let mut small = 0usize;
    for (p, &a) in approx.iter().enumerate() {
        let id = perm.to_original(p) as usize;
        if (exact[id] - a as f64).abs() < gap / 2.0 {
            small += 1;
        }
    }
    let cand = top_k_by(n, n_alpha, |p| (approx[p] as f64, perm.to_original(p)));
    let mut in_cand = vec![false; n];
    for &p in &cand {
        in_cand[perm.to_original(p) as usize] = true;
    }
    let hits = ranked[..h].iter().filter(|&&i| in_cand[i]).count();
    Ok(GapReport {
        gap,
        small_error_fraction: small as f64 / n as f64,
        recall: hits as f64 / h as f64,
        degenerate: gap <= 0.0,
    })
}
