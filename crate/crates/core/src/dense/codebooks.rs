//! Product-quantization codebooks over contiguous dense subspaces.

use super::kmeans::kmeans;
use crate::data::synth::stream_rng;
use crate::par::{self, Execution};
use crate::{Error, Result};

const TAG_KMEANS: u64 = 0x4b4d_4541_4e53_0001;

/// Widths for `ceil(d / width)` contiguous subspaces; the last one is narrower
/// when `width` does not divide `d`.
pub fn subspace_widths(d: usize, width: usize) -> Vec<usize> {
    assert!(width > 0);
    let mut out = vec![width; d / width];
    if !d.is_multiple_of(width) {
        out.push(d % width);
    }
    out
}

/// Widths for `k` near-equal contiguous subspaces covering `d` dimensions.
pub fn even_widths(d: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > d {
        return Err(Error::config(format!(
            "cannot split {d} dense dimensions into {k} subspaces"
        )));
    }
    Ok((0..k).map(|i| d / k + usize::from(i < d % k)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebooks {
    l: usize,
    widths: Vec<usize>,
    offsets: Vec<usize>,
    /// Per subspace, `l × width` row-major.
    centers: Vec<Vec<f32>>,
}

impl Codebooks {
    pub fn from_parts(l: usize, widths: Vec<usize>, centers: Vec<Vec<f32>>) -> Result<Self> {
        if l == 0 || l > 256 {
            return Err(Error::config(format!("codebook size {l} outside 1..=256")));
        }
        if widths.len() != centers.len() {
            return Err(Error::DimensionMismatch {
                expected: widths.len(),
                found: centers.len(),
            });
        }
        if widths.contains(&0) {
            return Err(Error::config("empty subspace"));
        }
        for (w, c) in widths.iter().zip(&centers) {
            if c.len() != w * l {
                return Err(Error::DimensionMismatch {
                    expected: w * l,
                    found: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("codebook centers"));
            }
        }
        let mut offsets = vec![0];
        for w in &widths {
            offsets.push(offsets.last().unwrap() + w);
        }
        Ok(Self {
            l,
            widths,
            offsets,
            centers,
        })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n_subspaces(&self) -> usize {
        self.widths.len()
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    /// Dimension range of subspace `k`.
    pub fn span(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    pub fn centers(&self, k: usize) -> &[f32] {
        &self.centers[k]
    }

    pub fn center(&self, k: usize, c: usize) -> &[f32] {
        let w = self.widths[k];
        &self.centers[k][c * w..(c + 1) * w]
    }

    /// Nearest-center codes for `x`, ties to the lower index.
    pub fn encode(&self, x: &[f32]) -> Result<Vec<u8>> {
        let mut out = vec![0; self.n_subspaces()];
        self.encode_into(x, &mut out)?;
        Ok(out)
    }

    pub fn encode_into(&self, x: &[f32], out: &mut [u8]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let mut buf = Vec::with_capacity(8);
        for k in 0..self.n_subspaces() {
            buf.clear();
            buf.extend(x[self.span(k)].iter().map(|&v| v as f64));
            let w = self.widths[k];
            let mut best = (0u8, f64::INFINITY);
            for c in 0..self.l {
                let d: f64 = self.centers[k][c * w..(c + 1) * w]
                    .iter()
                    .zip(&buf)
                    .map(|(&a, b)| (a as f64 - b) * (a as f64 - b))
                    .sum();
                if d < best.1 {
                    best = (c as u8, d);
                }
            }
            out[k] = best.0;
        }
        Ok(())
    }

    pub fn decode(&self, codes: &[u8]) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.dim());
        for (k, &c) in codes.iter().enumerate() {
            out.extend_from_slice(self.center(k, c as usize));
        }
        out
    }

    pub fn heap_bytes(&self) -> usize {
        self.centers.iter().map(|c| c.len() * 4).sum::<usize>() + self.widths.len() * 16
    }
}

/// Alias kept for the usual PQ vocabulary.
pub fn pq_encode(x: &[f32], cb: &Codebooks) -> Result<Vec<u8>> {
    cb.encode(x)
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Final per-point squared error, summed over subspaces.
    pub mse: f64,
    /// Final mean squared error of each subspace.
    pub subspace_mse: Vec<f64>,
}

/// Trains one k-means codebook per subspace on `n` rows of `x` (row-major,
/// width `Σ widths`). Subspace `k` draws from its own seeded stream.
pub fn train_codebooks(
    x: &[f32],
    widths: &[usize],
    l: usize,
    iters: usize,
    seed: u64,
    exec: Execution,
) -> Result<(Codebooks, TrainReport)> {
    let d: usize = widths.iter().sum();
    if widths.is_empty() || widths.contains(&0) {
        return Err(Error::config("empty subspace"));
    }
    if !x.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.len() % d,
        });
    }
    let n = x.len() / d;
    if n < l {
        return Err(Error::InsufficientData(format!(
            "{n} training points for {l} centers"
        )));
    }
    let mut offsets = vec![0];
    for w in widths {
        offsets.push(offsets.last().unwrap() + w);
    }
    let results = par::map_range(widths.len(), exec, |k| {
        let (a, b) = (offsets[k], offsets[k + 1]);
        let sub: Vec<f64> = (0..n)
            .flat_map(|i| x[i * d + a..i * d + b].iter().map(|&v| v as f64))
            .collect();
        let mut rng = stream_rng(seed, TAG_KMEANS, k as u64);
        kmeans(&sub, b - a, l, iters, &mut rng)
    });
    let mut centers = Vec::with_capacity(widths.len());
    let mut subspace_mse = Vec::with_capacity(widths.len());
    for r in results {
        let km = r?;
        subspace_mse.push(km.mse());
        centers.push(km.centers.iter().map(|&v| v as f32).collect());
    }
    let cb = Codebooks::from_parts(l, widths.to_vec(), centers)?;
    let mse = subspace_mse.iter().sum();
    Ok((cb, TrainReport { mse, subspace_mse }))
}
