//! Symmetric whitening of the dense component.
//!
//! Data maps to `P (x − μ)` and queries to `P⁻ᵀ q`, so that
//! `q · x = q · μ + (P⁻ᵀ q) · (P (x − μ))`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// Ridge added to the covariance diagonal, relative to `trace / d`.
pub const DEFAULT_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningTransform {
    d: usize,
    mean: Vec<f64>,
    /// `d × d` row-major.
    p: Vec<f64>,
    p_inv_t: Vec<f64>,
}

impl WhiteningTransform {
    pub fn identity(d: usize) -> Self {
        let mut eye = vec![0.0; d * d];
        for i in 0..d {
            eye[i * d + i] = 1.0;
        }
        Self {
            d,
            mean: vec![0.0; d],
            p: eye.clone(),
            p_inv_t: eye,
        }
    }

    pub fn from_parts(mean: Vec<f64>, p: Vec<f64>, p_inv_t: Vec<f64>) -> Result<Self> {
        let d = mean.len();
        if p.len() != d * d || p_inv_t.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: p.len().min(p_inv_t.len()),
            });
        }
        Ok(Self { d, mean, p, p_inv_t })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn p_inv_t(&self) -> &[f64] {
        &self.p_inv_t
    }

    /// `P (x − μ)`.
    pub fn apply_data(&self, x: &[f32]) -> Vec<f32> {
        let c: Vec<f64> = x.iter().zip(&self.mean).map(|(&v, m)| v as f64 - m).collect();
        mat_vec(&self.p, &c, self.d)
    }

    /// `P⁻ᵀ q`.
    pub fn apply_query(&self, q: &[f32]) -> Vec<f32> {
        let c: Vec<f64> = q.iter().map(|&v| v as f64).collect();
        mat_vec(&self.p_inv_t, &c, self.d)
    }

    /// `q · μ`, the score term removed by centering.
    pub fn query_offset(&self, q: &[f32]) -> f64 {
        q.iter().zip(&self.mean).map(|(&a, b)| a as f64 * b).sum()
    }
}

fn mat_vec(m: &[f64], v: &[f64], d: usize) -> Vec<f32> {
    m.chunks_exact(d.max(1))
        .take(d)
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() as f32)
        .collect()
}

/// Fits on `n` rows of width `d` with the default ridge.
pub fn whiten_fit(x: &[f32], d: usize) -> Result<WhiteningTransform> {
    whiten_fit_with_ridge(x, d, DEFAULT_RIDGE)
}

/// `P = V diag(λ^-1/2) Vᵀ` from the eigendecomposition of
/// `Cov + ridge · trace(Cov)/d · I`. Fails if an eigenvalue is not positive.
pub fn whiten_fit_with_ridge(x: &[f32], d: usize, ridge: f64) -> Result<WhiteningTransform> {
    if d == 0 {
        return Ok(WhiteningTransform::identity(0));
    }
    if !x.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.len() % d,
        });
    }
    let n = x.len() / d;
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} rows for a covariance")));
    }
    let mut mean = vec![0.0; d];
    for row in x.chunks_exact(d) {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut c = vec![0.0; d];
    for row in x.chunks_exact(d) {
        for (ci, (&v, m)) in c.iter_mut().zip(row.iter().zip(&mean)) {
            *ci = v as f64 - m;
        }
        for i in 0..d {
            for j in i..d {
                cov[(i, j)] += c[i] * c[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / n as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("dense covariance"));
    }
    let ridge_abs = ridge * cov.trace() / d as f64;
    for i in 0..d {
        cov[(i, i)] += ridge_abs;
    }
    let eig = SymmetricEigen::new(cov);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !min.is_finite() {
        return Err(Error::SingularCovariance(min));
    }
    let v = &eig.eigenvectors;
    let build = |f: &dyn Fn(f64) -> f64| {
        let diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
        let m = v * diag * v.transpose();
        (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|ij| m[ij]).collect::<Vec<f64>>()
    };
    let p = build(&|l| 1.0 / l.sqrt());
    let p_inv_t = build(&|l| l.sqrt());
    Ok(WhiteningTransform { d, mean, p, p_inv_t })
}
