//! Synthetic hybrid data with power-law sparse activity.
//!
//! Sparse dimension `j` (0-based) of a datapoint is nonzero with probability
//! `P_j = min(1, nnz_scale * (j + 1)^-zipf_alpha)`, independently across
//! dimensions and points. Nonzero values follow a bounded [`ValueLaw`]. Dense
//! components are i.i.d. standard normal. Every dimension and every dense row
//! draws from its own ChaCha stream, so output is identical regardless of
//! execution order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{HybridDataset, SparseMatrix};
use crate::par::{self, Execution};
use crate::{Error, Result};

/// Distribution of nonzero sparse values. Both laws have support `[-max, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValueLaw {
    Uniform { max: f32 },
    /// Random sign, magnitude `max * u^shape` with `u` uniform on `(0, 1]`;
    /// `shape > 1` gives a long tail of small values.
    PowerTail { max: f32, shape: f32 },
}

impl ValueLaw {
    pub fn max_abs(&self) -> f32 {
        match *self {
            ValueLaw::Uniform { max } | ValueLaw::PowerTail { max, .. } => max,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f32 {
        loop {
            let v = match *self {
                ValueLaw::Uniform { max } => rng.random_range(-max..=max),
                ValueLaw::PowerTail { max, shape } => {
                    let u = 1.0 - rng.random::<f32>();
                    let mag = max * u.powf(shape);
                    if rng.random::<bool>() {
                        mag
                    } else {
                        -mag
                    }
                }
            };
            if v != 0.0 {
                return v;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub n_queries: usize,
    pub d_sparse: usize,
    pub d_dense: usize,
    /// Power-law exponent of per-dimension activity.
    pub zipf_alpha: f64,
    /// Activity probability of the most popular dimension before clamping.
    pub nnz_scale: f64,
    /// Queries use the datapoint activity law when set; otherwise
    /// `query_zipf_alpha` / `query_nnz_scale`.
    pub query_same_law: bool,
    pub query_zipf_alpha: f64,
    pub query_nnz_scale: f64,
    pub value_law: ValueLaw,
    pub sparse_weight: f32,
    pub dense_weight: f32,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            n_queries: 100,
            d_sparse: 10_000,
            d_dense: 64,
            zipf_alpha: 1.0,
            nnz_scale: 0.5,
            query_same_law: true,
            query_zipf_alpha: 1.0,
            query_nnz_scale: 0.5,
            value_law: ValueLaw::Uniform { max: 1.0 },
            sparse_weight: 1.0,
            dense_weight: 1.0,
            seed: 0,
        }
    }
}

fn activity(d: usize, zipf_alpha: f64, scale: f64) -> Vec<f64> {
    (0..d)
        .map(|j| (scale * ((j + 1) as f64).powf(-zipf_alpha)).clamp(0.0, 1.0))
        .collect()
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        if !finite_pos(self.zipf_alpha) || !finite_pos(self.query_zipf_alpha) {
            return Err(Error::config("zipf_alpha must be positive"));
        }
        if !(self.nnz_scale.is_finite() && self.nnz_scale >= 0.0)
            || !(self.query_nnz_scale.is_finite() && self.query_nnz_scale >= 0.0)
        {
            return Err(Error::config("nnz_scale must be non-negative"));
        }
        let max = self.value_law.max_abs();
        if !(max.is_finite() && max > 0.0) {
            return Err(Error::config("value law max must be positive"));
        }
        if let ValueLaw::PowerTail { shape, .. } = self.value_law {
            if !(shape.is_finite() && shape > 0.0) {
                return Err(Error::config("power-tail shape must be positive"));
            }
        }
        if !(self.sparse_weight.is_finite() && self.sparse_weight != 0.0)
            || !(self.dense_weight.is_finite() && self.dense_weight != 0.0)
        {
            return Err(Error::config("weights must be finite and nonzero"));
        }
        if self.d_sparse > u32::MAX as usize {
            return Err(Error::config("d_sparse exceeds u32 range"));
        }
        Ok(())
    }

    /// Per-dimension datapoint activity probabilities `P_j`.
    pub fn data_activity(&self) -> Vec<f64> {
        activity(self.d_sparse, self.zipf_alpha, self.nnz_scale)
    }

    /// Per-dimension query activity probabilities `Q_j`.
    pub fn query_activity(&self) -> Vec<f64> {
        if self.query_same_law {
            self.data_activity()
        } else {
            activity(self.d_sparse, self.query_zipf_alpha, self.query_nnz_scale)
        }
    }
}

pub struct SyntheticData {
    pub data: HybridDataset,
    pub queries: HybridDataset,
}

// Stream tags keep data and queries on unrelated ChaCha keys.
const TAG_DATA_SPARSE: u64 = 0x5350_4152_5345_0001;
const TAG_DATA_DENSE: u64 = 0x4445_4e53_4500_0002;
const TAG_QUERY_SPARSE: u64 = 0x5350_4152_5345_0003;
const TAG_QUERY_DENSE: u64 = 0x4445_4e53_4500_0004;

pub(crate) fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn stream_rng(seed: u64, tag: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ tag));
    rng.set_stream(stream);
    rng
}

fn gen_sparse(
    n: usize,
    probs: &[f64],
    law: ValueLaw,
    weight: f32,
    seed: u64,
    tag: u64,
    exec: Execution,
) -> SparseMatrix {
    // Column-wise generation with geometric skips: O(nnz + d) work.
    let columns: Vec<Vec<(u32, f32)>> = par::map_range(probs.len(), exec, |j| {
        let p = probs[j];
        let mut col = Vec::new();
        if p <= 0.0 || n == 0 {
            return col;
        }
        let mut rng = stream_rng(seed, tag, j as u64);
        if p >= 1.0 {
            for i in 0..n {
                col.push((i as u32, law.sample(&mut rng) * weight));
            }
            return col;
        }
        let log_q = (-p).ln_1p();
        let mut pos: u64 = 0;
        loop {
            let u = 1.0 - rng.random::<f64>();
            let gap = (u.ln() / log_q).floor();
            if !gap.is_finite() || gap >= (n as u64 - pos) as f64 {
                break;
            }
            pos += gap as u64;
            col.push((pos as u32, law.sample(&mut rng) * weight));
            pos += 1;
            if pos >= n as u64 {
                break;
            }
        }
        col
    });

    let mut counts = vec![0usize; n + 1];
    for col in &columns {
        for &(i, _) in col {
            counts[i as usize + 1] += 1;
        }
    }
    for i in 0..n {
        counts[i + 1] += counts[i];
    }
    let nnz = counts[n];
    let mut dims = vec![0u32; nnz];
    let mut values = vec![0f32; nnz];
    let mut cursor = counts.clone();
    // Dimensions are visited in ascending order, so each row ends up sorted.
    for (j, col) in columns.iter().enumerate() {
        for &(i, v) in col {
            let slot = &mut cursor[i as usize];
            dims[*slot] = j as u32;
            values[*slot] = v;
            *slot += 1;
        }
    }
    SparseMatrix::from_csr(probs.len(), counts, dims, values)
        .expect("generator produces canonical rows")
}

fn gen_dense(n: usize, d: usize, weight: f32, seed: u64, tag: u64, exec: Execution) -> Vec<f32> {
    let mut out = vec![0f32; n * d];
    if d == 0 {
        return out;
    }
    const ROWS: usize = 256;
    par::for_each_chunk_mut(&mut out, ROWS * d, exec, |ci, chunk| {
        for (r, row) in chunk.chunks_mut(d).enumerate() {
            let mut rng = stream_rng(seed, tag, (ci * ROWS + r) as u64);
            for v in row {
                let x: f64 = StandardNormal.sample(&mut rng);
                *v = x as f32 * weight;
            }
        }
    });
    out
}

/// Generates a dataset and a query set from `cfg`. Deterministic for a fixed
/// seed.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SyntheticData> {
    generate_synthetic_with(cfg, Execution::Parallel)
}

/// [`generate_synthetic`] with an explicit execution mode. Output does not
/// depend on `exec`.
pub fn generate_synthetic_with(cfg: &SynthConfig, exec: Execution) -> Result<SyntheticData> {
    cfg.validate()?;
    let data_sparse = gen_sparse(
        cfg.n,
        &cfg.data_activity(),
        cfg.value_law,
        cfg.sparse_weight,
        cfg.seed,
        TAG_DATA_SPARSE,
        exec,
    );
    let data_dense = gen_dense(cfg.n, cfg.d_dense, cfg.dense_weight, cfg.seed, TAG_DATA_DENSE, exec);
    let query_sparse = gen_sparse(
        cfg.n_queries,
        &cfg.query_activity(),
        cfg.value_law,
        cfg.sparse_weight,
        cfg.seed,
        TAG_QUERY_SPARSE,
        exec,
    );
    let query_dense = gen_dense(
        cfg.n_queries,
        cfg.d_dense,
        cfg.dense_weight,
        cfg.seed,
        TAG_QUERY_DENSE,
        exec,
    );
    Ok(SyntheticData {
        data: HybridDataset::from_parts(data_sparse, cfg.d_dense, data_dense)?,
        queries: HybridDataset::from_parts(query_sparse, cfg.d_dense, query_dense)?,
    })
}
