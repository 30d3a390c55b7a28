//! Per-dimension 8-bit scalar quantization of the dense residual.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarQuantResidual {
    d: usize,
    min: Vec<f32>,
    step: Vec<f32>,
    codes: Vec<u8>,
}

/// Encodes `n` rows of width `d`. Dimension `j` uses `step = range_j / 256`;
/// values decode to bucket midpoints, so every error is at most `step / 2`.
pub fn sq_encode(x: &[f32], d: usize) -> Result<ScalarQuantResidual> {
    if d == 0 {
        return Ok(ScalarQuantResidual {
            d,
            min: Vec::new(),
            step: Vec::new(),
            codes: Vec::new(),
        });
    }
    if !x.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.len() % d,
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("scalar quantizer input"));
    }
    let mut lo = vec![f32::INFINITY; d];
    let mut hi = vec![f32::NEG_INFINITY; d];
    for row in x.chunks_exact(d) {
        for j in 0..d {
            lo[j] = lo[j].min(row[j]);
            hi[j] = hi[j].max(row[j]);
        }
    }
    if x.is_empty() {
        lo.fill(0.0);
        hi.fill(0.0);
    }
    let step: Vec<f32> = lo
        .iter()
        .zip(&hi)
        .map(|(&a, &b)| ((b as f64 - a as f64) / 256.0) as f32)
        .collect();
    let codes = x
        .chunks_exact(d)
        .flat_map(|row| {
            row.iter().enumerate().map(|(j, &v)| {
                if step[j] > 0.0 {
                    ((v as f64 - lo[j] as f64) / step[j] as f64).floor().clamp(0.0, 255.0) as u8
                } else {
                    0
                }
            })
        })
        .collect();
    let sq = ScalarQuantResidual {
        d,
        min: lo,
        step,
        codes,
    };
    sq.check_error_bound(x)?;
    Ok(sq)
}

impl ScalarQuantResidual {
    pub fn from_parts(d: usize, min: Vec<f32>, step: Vec<f32>, codes: Vec<u8>) -> Result<Self> {
        if min.len() != d || step.len() != d || (d > 0 && !codes.len().is_multiple_of(d)) || (d == 0 && !codes.is_empty()) {
            return Err(Error::Invariant("scalar quantizer shape".into()));
        }
        if min.iter().chain(&step).any(|v| !v.is_finite()) || step.iter().any(|&s| s < 0.0) {
            return Err(Error::Invariant("scalar quantizer parameters".into()));
        }
        Ok(Self { d, min, step, codes })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.codes.len().checked_div(self.d).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn min(&self) -> &[f32] {
        &self.min
    }

    pub fn step(&self) -> &[f32] {
        &self.step
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    #[inline]
    pub fn decode_value(&self, j: usize, code: u8) -> f32 {
        (self.min[j] as f64 + self.step[j] as f64 * (code as f64 + 0.5)) as f32
    }

    pub fn decode_row(&self, i: usize) -> Vec<f32> {
        let row = &self.codes[i * self.d..(i + 1) * self.d];
        row.iter().enumerate().map(|(j, &c)| self.decode_value(j, c)).collect()
    }

    /// Verifies `|decode − value| ≤ range / 256` for every stored value.
    pub fn check_error_bound(&self, x: &[f32]) -> Result<()> {
        for (i, row) in x.chunks_exact(self.d.max(1)).enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let c = self.codes[i * self.d + j];
                let err = (self.decode_value(j, c) as f64 - v as f64).abs();
                let range = self.step[j] as f64 * 256.0;
                // Rounding slack for the f32 parameters.
                let slack = 4.0 * f32::EPSILON as f64 * (v.abs() as f64 + range);
                if err > range / 256.0 + slack {
                    return Err(Error::Invariant(format!(
                        "scalar quantization error {err} exceeds range/256 at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn prepare(&self, q: &[f32]) -> Result<PreparedQuery> {
        if q.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: q.len(),
            });
        }
        let offset = (0..self.d)
            .map(|j| q[j] as f64 * (self.min[j] as f64 + 0.5 * self.step[j] as f64))
            .sum();
        let weights = (0..self.d).map(|j| q[j] as f64 * self.step[j] as f64).collect();
        Ok(PreparedQuery { offset, weights })
    }

    /// `q · decode(row i)` through a prepared query.
    #[inline]
    pub fn dot(&self, pq: &PreparedQuery, i: usize) -> f64 {
        let row = &self.codes[i * self.d..(i + 1) * self.d];
        pq.offset + row.iter().zip(&pq.weights).map(|(&c, w)| c as f64 * w).sum::<f64>()
    }

    pub fn heap_bytes(&self) -> usize {
        self.codes.len() + self.d * 8
    }
}

#[derive(Debug, Clone)]
pub struct PreparedQuery {
    offset: f64,
    weights: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn constant_dimension_exact() {
        let x = vec![1.25f32; 40];
        let sq = sq_encode(&x, 4).unwrap();
        for i in 0..10 {
            assert_eq!(sq.decode_row(i), vec![1.25; 4]);
        }
    }

    #[test]
    fn grid_midpoints_exact() {
        let mut x: Vec<f32> = vec![0.0, 256.0];
        x.extend((0..256).map(|c| c as f32 + 0.5));
        let sq = sq_encode(&x, 1).unwrap();
        assert_eq!(sq.step(), &[1.0]);
        for i in 2..x.len() {
            assert_eq!(sq.decode_row(i)[0], x[i]);
        }
    }

    #[test]
    fn random_values_within_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = 10;
        let x: Vec<f32> = (0..10_000 * d)
            .map(|i| rng.random_range(-1.0..1.0) * (1 + i % d) as f32)
            .collect();
        let sq = sq_encode(&x, d).unwrap();
        for (i, row) in x.chunks(d).enumerate() {
            let dec = sq.decode_row(i);
            for j in 0..d {
                let range = sq.step()[j] as f64 * 256.0;
                assert!((dec[j] as f64 - row[j] as f64).abs() <= range / 256.0);
            }
        }
    }

    #[test]
    fn prepared_dot_matches_decode() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = 7;
        let x: Vec<f32> = (0..100 * d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let sq = sq_encode(&x, d).unwrap();
        let q: Vec<f32> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let pq = sq.prepare(&q).unwrap();
        for i in 0..100 {
            let direct: f64 = sq.decode_row(i).iter().zip(&q).map(|(&a, &b)| a as f64 * b as f64).sum();
            assert!((sq.dot(&pq, i) - direct).abs() < 1e-5);
        }
    }

    #[test]
    fn zero_dims_and_errors() {
        let sq = sq_encode(&[], 0).unwrap();
        assert!(sq.is_empty());
        assert!(sq_encode(&[1.0, 2.0, 3.0], 2).is_err());
        assert!(sq_encode(&[f32::NAN], 1).is_err());
    }
}
