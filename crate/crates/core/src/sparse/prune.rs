use crate::data::SparseMatrix;
use crate::{Error, Result};

/// Per-dimension magnitude cutoffs. Entries with `|v| >= eta[j]` go to the
/// data index, `eta[j] > |v| >= epsilon[j]` to the residual, the rest are
/// discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneThresholds {
    eta: Vec<f32>,
    epsilon: Vec<f32>,
}

impl PruneThresholds {
    pub fn new(eta: Vec<f32>, epsilon: Vec<f32>) -> Result<Self> {
        if eta.len() != epsilon.len() {
            return Err(Error::DimensionMismatch {
                expected: eta.len(),
                found: epsilon.len(),
            });
        }
        for (j, (e, s)) in eta.iter().zip(&epsilon).enumerate() {
            if e.is_nan() || s.is_nan() || *s < 0.0 || *e < 0.0 {
                return Err(Error::config(format!("dimension {j}: thresholds must be >= 0")));
            }
            if s > e {
                return Err(Error::config(format!(
                    "dimension {j}: epsilon {s} exceeds eta {e}"
                )));
            }
        }
        Ok(Self { eta, epsilon })
    }

    /// Same cutoffs for every dimension.
    pub fn uniform(d_sparse: usize, eta: f32, epsilon: f32) -> Result<Self> {
        Self::new(vec![eta; d_sparse], vec![epsilon; d_sparse])
    }

    /// Keeps everything in the data index.
    pub fn keep_all(d_sparse: usize) -> Self {
        Self {
            eta: vec![0.0; d_sparse],
            epsilon: vec![0.0; d_sparse],
        }
    }

    /// Derives `eta[j]` so that at most the `top_t` largest magnitudes of
    /// column `j` reach the data index: the smallest float strictly above the
    /// `(top_t + 1)`-th largest magnitude, or 0 when the column has at most
    /// `top_t` nonzeros. Magnitudes tied with that boundary value are pruned.
    /// `epsilon` is capped at `eta[j]` per dimension.
    pub fn from_top_t(x: &SparseMatrix, top_t: usize, epsilon: f32) -> Result<Self> {
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(Error::config("epsilon must be >= 0"));
        }
        let columns = column_magnitudes(x);
        let eta: Vec<f32> = columns
            .into_iter()
            .map(|mut col| {
                if col.len() <= top_t {
                    return 0.0;
                }
                let (_, boundary, _) =
                    col.select_nth_unstable_by(top_t, |a, b| b.total_cmp(a));
                boundary.next_up()
            })
            .collect();
        let epsilon = eta.iter().map(|e| epsilon.min(*e)).collect();
        Ok(Self { eta, epsilon })
    }

    pub fn d_sparse(&self) -> usize {
        self.eta.len()
    }

    pub fn eta(&self) -> &[f32] {
        &self.eta
    }

    pub fn epsilon(&self) -> &[f32] {
        &self.epsilon
    }

    /// Largest finite data-index threshold.
    pub fn eta_max(&self) -> f32 {
        self.eta
            .iter()
            .copied()
            .filter(|e| e.is_finite())
            .fold(0.0, f32::max)
    }
}

fn column_magnitudes(x: &SparseMatrix) -> Vec<Vec<f32>> {
    let counts = x.column_counts();
    let mut cols: Vec<Vec<f32>> = counts.iter().map(|&c| Vec::with_capacity(c)).collect();
    for row in x.rows() {
        for (j, v) in row.iter() {
            cols[j as usize].push(v.abs());
        }
    }
    cols
}

/// The three disjoint parts of a pruned sparse matrix, each with the same
/// rows as the input.
#[derive(Debug, Clone)]
pub struct PruneSplit {
    pub data: SparseMatrix,
    pub residual: SparseMatrix,
    pub discarded: SparseMatrix,
}

impl PruneSplit {
    /// Sum of magnitudes that neither index keeps.
    pub fn discarded_mass(&self) -> f64 {
        self.discarded
            .rows()
            .flat_map(|r| r.iter())
            .map(|(_, v)| v.abs() as f64)
            .sum()
    }
}

pub fn prune_split(x: &SparseMatrix, th: &PruneThresholds) -> Result<PruneSplit> {
    if th.d_sparse() != x.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: x.n_cols(),
            found: th.d_sparse(),
        });
    }
    let n = x.n_rows();
    let mut data = SparseMatrix::with_capacity(x.n_cols(), n, 0);
    let mut residual = SparseMatrix::with_capacity(x.n_cols(), n, 0);
    let mut discarded = SparseMatrix::with_capacity(x.n_cols(), n, 0);
    for row in x.rows() {
        for (j, v) in row.iter() {
            let a = v.abs();
            let target = if a >= th.eta[j as usize] {
                &mut data
            } else if a >= th.epsilon[j as usize] {
                &mut residual
            } else {
                &mut discarded
            };
            target.push_entry(j, v);
        }
        data.end_row();
        residual.end_row();
        discarded.end_row();
    }
    Ok(PruneSplit {
        data,
        residual,
        discarded,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::data::normalize_sparse;

    fn matrix(rows: &[&[(u64, f64)]], d: usize) -> SparseMatrix {
        let mut m = SparseMatrix::new(d);
        for r in rows {
            m.push_row(&normalize_sparse(r.iter().copied(), d as u64).unwrap())
                .unwrap();
        }
        m
    }

    #[test]
    fn zero_eta_keeps_everything() {
        let x = matrix(&[&[(0, 0.5), (2, -0.1)], &[(1, 0.01)]], 3);
        let s = prune_split(&x, &PruneThresholds::keep_all(3)).unwrap();
        assert_eq!(s.data, x);
        assert_eq!(s.residual.nnz(), 0);
        assert_eq!(s.discarded.nnz(), 0);
    }

    #[test]
    fn infinite_eta_moves_everything_to_residual() {
        let x = matrix(&[&[(0, 0.5), (2, -0.1)], &[(1, 0.01)]], 3);
        let th = PruneThresholds::uniform(3, f32::INFINITY, 0.0).unwrap();
        let s = prune_split(&x, &th).unwrap();
        assert_eq!(s.data.nnz(), 0);
        assert_eq!(s.residual, x);
    }

    #[test]
    fn top_t_order_statistics() {
        // One column holding {0.9, 0.5, 0.1}; top_t = 1 keeps only 0.9.
        let x = matrix(&[&[(0, 0.9)], &[(0, 0.5)], &[(0, -0.1)]], 1);
        let th = PruneThresholds::from_top_t(&x, 1, 0.0).unwrap();
        assert!(th.eta()[0] > 0.5 && th.eta()[0] <= 0.9);
        let s = prune_split(&x, &th).unwrap();
        let kept: Vec<f32> = s.data.rows().flat_map(|r| r.values.to_vec()).collect();
        let resid: Vec<f32> = s.residual.rows().flat_map(|r| r.values.to_vec()).collect();
        assert_eq!(kept, vec![0.9]);
        assert_eq!(resid, vec![0.5, -0.1]);
    }

    #[test]
    fn short_columns_are_not_pruned() {
        let x = matrix(&[&[(0, 0.9)], &[(1, 0.5)]], 2);
        let th = PruneThresholds::from_top_t(&x, 128, 0.0).unwrap();
        assert_eq!(th.eta(), &[0.0, 0.0]);
    }

    #[test]
    fn epsilon_above_eta_rejected() {
        assert!(PruneThresholds::uniform(2, 0.1, 0.2).is_err());
    }

    proptest! {
        #[test]
        fn partition_is_disjoint_and_exhaustive(
            rows in prop::collection::vec(
                prop::collection::vec((0u64..12, -10i32..=10), 0..8), 0..20),
            eta in 0u32..10,
            eps in 0u32..10,
        ) {
            let (eta, eps) = (eta.max(eps) as f32 * 0.1, eta.min(eps) as f32 * 0.1);
            let rows: Vec<Vec<(u64, f64)>> = rows.into_iter()
                .map(|r| r.into_iter().map(|(d, v)| (d, v as f64 * 0.1)).collect())
                .collect();
            let refs: Vec<&[(u64, f64)]> = rows.iter().map(|r| r.as_slice()).collect();
            let x = matrix(&refs, 12);
            let th = PruneThresholds::uniform(12, eta, eps).unwrap();
            let s = prune_split(&x, &th).unwrap();
            prop_assert_eq!(s.data.nnz() + s.residual.nnz() + s.discarded.nnz(), x.nnz());
            for i in 0..x.n_rows() {
                let mut merged: Vec<(u32, f32)> = s.data.row(i).iter()
                    .chain(s.residual.row(i).iter())
                    .chain(s.discarded.row(i).iter())
                    .collect();
                merged.sort_by_key(|e| e.0);
                let orig: Vec<(u32, f32)> = x.row(i).iter().collect();
                prop_assert_eq!(merged, orig);
                for (_, v) in s.data.row(i).iter() { prop_assert!(v.abs() >= eta); }
                for (_, v) in s.residual.row(i).iter() {
                    prop_assert!(v.abs() < eta && v.abs() >= eps);
                }
                for (_, v) in s.discarded.row(i).iter() { prop_assert!(v.abs() < eps); }
            }
        }
    }
}
