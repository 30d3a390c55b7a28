use crate::dense::DenseIndexConfig;
use crate::sparse::PruneThresholds;
use crate::{Error, Result};

/// How the sparse data index is pruned.
#[derive(Debug, Clone, PartialEq)]
pub enum PruneSpec {
    /// Keep the `top_t` largest magnitudes per dimension in the data index;
    /// entries below the cut with magnitude at least `epsilon` go to the
    /// residual, the rest are discarded.
    TopT { top_t: usize, epsilon: f32 },
    /// Explicit per-dimension thresholds.
    Thresholds(PruneThresholds),
    /// Everything in the data index, empty residual.
    KeepAll,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridIndexConfig {
    /// Stage-1 overfetch factor: `ceil(alpha · h)` candidates.
    pub alpha: f64,
    /// Stage-2 retain factor: `ceil(beta · h)` survivors.
    pub beta: f64,
    pub prune: PruneSpec,
    pub dense: DenseIndexConfig,
    /// Score stage 3 with exact inner products against stored raw vectors.
    pub exact_final_rerank: bool,
    /// Applied to the data's sparse part at build time.
    pub sparse_weight: f32,
    /// Applied to the data's dense part at build time.
    pub dense_weight: f32,
}

impl Default for HybridIndexConfig {
    fn default() -> Self {
        Self {
            alpha: 10.0,
            beta: 3.0,
            prune: PruneSpec::TopT {
                top_t: 128,
                epsilon: 0.0,
            },
            dense: DenseIndexConfig::default(),
            exact_final_rerank: false,
            sparse_weight: 1.0,
            dense_weight: 1.0,
        }
    }
}

impl HybridIndexConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.alpha.is_finite() && self.beta >= 1.0 && self.alpha >= self.beta) {
            return Err(Error::config(format!(
                "need alpha >= beta >= 1, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        if !(self.sparse_weight.is_finite() && self.dense_weight.is_finite()) {
            return Err(Error::config("weights must be finite"));
        }
        if let PruneSpec::TopT { epsilon, .. } = self.prune {
            if !(epsilon.is_finite() && epsilon >= 0.0) {
                return Err(Error::config("epsilon must be a non-negative number"));
            }
        }
        self.dense.validate()
    }

    /// `(ceil(alpha·h), ceil(beta·h))`, each clamped to `n`.
    pub fn fetch_sizes(&self, h: usize, n: usize) -> (usize, usize) {
        let a = ((self.alpha * h as f64).ceil() as usize).clamp(h, usize::MAX).min(n);
        let b = ((self.beta * h as f64).ceil() as usize).clamp(h, usize::MAX).min(a);
        (a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(HybridIndexConfig::default().validate().is_ok());
        let bad = HybridIndexConfig {
            alpha: 2.0,
            beta: 3.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = HybridIndexConfig {
            beta: 0.5,
            alpha: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn fetch_sizes_round_up_and_clamp() {
        let c = HybridIndexConfig {
            alpha: 2.5,
            beta: 1.1,
            ..Default::default()
        };
        assert_eq!(c.fetch_sizes(3, 100), (8, 4));
        assert_eq!(c.fetch_sizes(3, 5), (5, 4));
        assert_eq!(c.fetch_sizes(20, 10), (10, 10));
    }
}
