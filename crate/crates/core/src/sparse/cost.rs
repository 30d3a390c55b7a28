//! Accumulator cache-line cost model: closed-form expectations for random
//! and cache-sorted layouts, and direct measurement on a built index.

use super::inverted::InvertedIndex;
use crate::data::{SparseMatrix, SynthConfig};
use crate::par::{self, Execution};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CostModelParams {
    p: Vec<f64>,
    q: Vec<f64>,
    n: usize,
    b: usize,
}

impl CostModelParams {
    /// `p` must be non-increasing; `p` and `q` are probabilities of equal length.
    pub fn new(p: Vec<f64>, q: Vec<f64>, n: usize, b: usize) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                found: q.len(),
            });
        }
        if b == 0 {
            return Err(Error::config("line capacity must be > 0"));
        }
        let prob = |v: &f64| (0.0..=1.0).contains(v);
        if !p.iter().all(prob) || !q.iter().all(prob) {
            return Err(Error::config("activity probabilities must lie in [0, 1]"));
        }
        if p.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::config("data activity must be non-increasing"));
        }
        Ok(Self { p, q, n, b })
    }

    pub fn from_synth(cfg: &SynthConfig, b: usize) -> Result<Self> {
        Self::new(cfg.data_activity(), cfg.query_activity(), cfg.n, b)
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b(&self) -> usize {
        self.b
    }

    /// Expected lines of dimension `j` (0-based) under a random layout.
    pub fn unsorted_term(&self, j: usize) -> f64 {
        let lines = self.n as f64 / self.b as f64;
        (1.0 - (1.0 - self.p[j]).powi(self.b as i32)) * lines
    }

    /// Worst-case lines of dimension `j` (0-based) after cache sorting.
    pub fn sorted_term(&self, j: usize) -> f64 {
        let lines = self.n as f64 / self.b as f64;
        let blocks = 2f64.powi((j + 1).min(1023) as i32);
        let filled = self.p[j] * lines;
        if filled >= blocks {
            blocks * (filled / blocks).ceil()
        } else {
            self.unsorted_term(j)
        }
    }
}

/// `Σ_j Q_j (1 − (1 − P_j)^B) N/B`.
pub fn expected_cachelines_unsorted(p: &CostModelParams) -> f64 {
    (0..p.p.len()).map(|j| p.q[j] * p.unsorted_term(j)).sum()
}

/// Upper bound on expected lines per query after cache sorting.
pub fn expected_cachelines_sorted_bound(p: &CostModelParams) -> f64 {
    (0..p.p.len()).map(|j| p.q[j] * p.sorted_term(j)).sum()
}

/// Distinct accumulator lines touched by each posting list.
pub fn dim_line_counts(idx: &InvertedIndex, b: usize) -> Result<Vec<usize>> {
    if b == 0 {
        return Err(Error::config("line capacity must be > 0"));
    }
    Ok((0..idx.d_sparse())
        .map(|j| {
            let (ids, _) = idx.postings(j);
            let mut count = 0;
            let mut last = usize::MAX;
            for &p in ids {
                let line = p as usize / b;
                if line != last {
                    count += 1;
                    last = line;
                }
            }
            count
        })
        .collect())
}

/// Mean over `queries` of the number of distinct lines `floor(pos / b)`
/// reached through the query's active dimensions. Returns 0 for no queries.
pub fn measure_cachelines(
    idx: &InvertedIndex,
    queries: &SparseMatrix,
    b: usize,
    exec: Execution,
) -> Result<f64> {
    if b == 0 {
        return Err(Error::config("line capacity must be > 0"));
    }
    if queries.n_cols() > idx.d_sparse() {
        if let Some(bad) = queries.rows().filter_map(|r| r.max_dim()).find(|&d| d as usize >= idx.d_sparse()) {
            return Err(Error::DimensionOutOfRange {
                dim: bad as u64,
                limit: idx.d_sparse() as u64,
            });
        }
    }
    if queries.n_rows() == 0 {
        return Ok(0.0);
    }
    let words = idx.len().div_ceil(b).div_ceil(64);
    let counts = par::map_range(queries.n_rows(), exec, |qi| {
        let mut seen = vec![0u64; words];
        let mut touched = 0usize;
        for (j, _) in queries.row(qi).iter() {
            let (ids, _) = idx.postings(j as usize);
            for &p in ids {
                let line = p as usize / b;
                let bit = 1u64 << (line % 64);
                let w = &mut seen[line / 64];
                if *w & bit == 0 {
                    *w |= bit;
                    touched += 1;
                }
            }
        }
        touched
    });
    Ok(counts.iter().sum::<usize>() as f64 / counts.len() as f64)
}

/// Lower bound on `Pr(|q·x − q·x̃| < eps)` under the random pruning model,
/// with `n_ε = eps / (m · eta_max)`.
///
/// Returns 1 when `m` or `eta_max` is zero. Returns 0 when `n_ε ≤ d p²`,
/// where the tail bound carries no information.
pub fn chernoff_prune_bound(eps: f64, m: f64, eta_max: f64, d: f64, p: f64) -> f64 {
    if m == 0.0 || eta_max == 0.0 {
        return 1.0;
    }
    let n_eps = eps / (m * eta_max);
    let mean = d * p * p;
    if n_eps <= mean {
        return 0.0;
    }
    let gap = n_eps - mean;
    (1.0 - 2.0 * (-(gap * gap) / (n_eps + mean)).exp()).max(0.0)
}
