//! Asymmetric-distance lookup tables and their 8-bit quantization.

use super::codebooks::Codebooks;
use crate::{Error, Result};

/// `T[k][c] = q^(k) · center_c^(k)`, stored `K × l` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LookupTable {
    k: usize,
    l: usize,
    values: Vec<f32>,
}

impl LookupTable {
    pub fn from_values(k: usize, l: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != k * l {
            return Err(Error::DimensionMismatch {
                expected: k * l,
                found: values.len(),
            });
        }
        Ok(Self { k, l, values })
    }

    pub fn n_subspaces(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, k: usize) -> &[f32] {
        &self.values[k * self.l..(k + 1) * self.l]
    }

    /// Sum of the selected entries in subspace order, in double precision.
    pub fn score(&self, codes: &[u8]) -> f64 {
        codes
            .iter()
            .enumerate()
            .map(|(k, &c)| self.values[k * self.l + c as usize] as f64)
            .sum()
    }
}

pub fn adc_table(q: &[f32], cb: &Codebooks) -> Result<LookupTable> {
    if q.len() != cb.dim() {
        return Err(Error::DimensionMismatch {
            expected: cb.dim(),
            found: q.len(),
        });
    }
    let (k, l) = (cb.n_subspaces(), cb.l());
    let mut values = Vec::with_capacity(k * l);
    for s in 0..k {
        let qs = &q[cb.span(s)];
        for c in 0..l {
            let dot: f64 = cb
                .center(s, c)
                .iter()
                .zip(qs)
                .map(|(&a, &b)| a as f64 * b as f64)
                .sum();
            values.push(dot as f32);
        }
    }
    Ok(LookupTable { k, l, values })
}

/// `entry ≈ bias[k] + scale · table[k][c]` with 8-bit `table`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedLut {
    l: usize,
    bias: Vec<f32>,
    bias_total: f32,
    scale: f32,
    table: Vec<u8>,
}

impl QuantizedLut {
    pub fn n_subspaces(&self) -> usize {
        self.bias.len()
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn bias(&self) -> &[f32] {
        &self.bias
    }

    pub fn bias_total(&self) -> f32 {
        self.bias_total
    }

    pub fn scale(&self) -> f32 {
        self.scale
    }

    pub fn table(&self) -> &[u8] {
        &self.table
    }

    pub fn row(&self, k: usize) -> &[u8] {
        &self.table[k * self.l..(k + 1) * self.l]
    }

    pub fn dequantize_entry(&self, k: usize, c: usize) -> f32 {
        self.bias[k] + self.scale * self.table[k * self.l + c] as f32
    }

    /// Score for an integer table sum. Every scan kernel finishes through
    /// this function, so kernels that agree on `sum` agree bit for bit.
    #[inline]
    pub fn finish(&self, sum: u32) -> f32 {
        self.bias_total + self.scale * sum as f32
    }
}

pub fn quantize_lut(t: &LookupTable) -> Result<QuantizedLut> {
    if t.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("lookup table"));
    }
    let mut bias = Vec::with_capacity(t.k);
    let mut max_range = 0f64;
    for k in 0..t.k {
        let row = t.row(k);
        let lo = row.iter().copied().fold(f32::INFINITY, f32::min);
        let hi = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        bias.push(lo);
        max_range = max_range.max(hi as f64 - lo as f64);
    }
    let scale = (max_range / 255.0) as f32;
    let table = if scale > 0.0 {
        let inv = 1.0 / scale as f64;
        t.values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let r = ((v as f64 - bias[i / t.l] as f64) * inv).round();
                r.clamp(0.0, 255.0) as u8
            })
            .collect()
    } else {
        vec![0; t.values.len()]
    };
    let bias_total = bias.iter().map(|&b| b as f64).sum::<f64>() as f32;
    Ok(QuantizedLut {
        l: t.l,
        bias,
        bias_total,
        scale,
        table,
    })
}
