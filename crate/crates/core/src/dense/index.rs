//! Dense data index (PQ codes with LUT16 scanning) plus the scalar-quantized
//! residual used for reordering.
//!
//! `HDPQ` layout (little-endian): magic "HDPQ" | version u32 | d u32 | K u32 |
//! l u32 | widths: K u32 | centers: f32 per subspace (`l × width`) | N u64 |
//! packed codes | whitening flag u8 [mean: d f64 | P: d² f64 | P⁻ᵀ: d² f64] |
//! residual flag u8 [min: d f32 | step: d f32 | codes: N·d u8].

use std::io::{Read, Write};

use rand::seq::index::sample;

use super::codebooks::{subspace_widths, train_codebooks, Codebooks};
use super::lut::{adc_table, quantize_lut, QuantizedLut};
use super::scan::{adc_scan, lut16_scan, PqCodes};
use super::sq::{sq_encode, PreparedQuery, ScalarQuantResidual};
use super::whiten::{whiten_fit, WhiteningTransform};
use crate::data::synth::stream_rng;
use crate::par::{self, Execution};
use crate::wire::{Reader, Writer};
use crate::{Error, Result};

pub const DENSE_INDEX_MAGIC: [u8; 4] = *b"HDPQ";
pub const DENSE_INDEX_VERSION: u32 = 1;

const TAG_SAMPLE: u64 = 0x5341_4d50_4c45_0001;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseIndexConfig {
    /// Dimensions per PQ subspace; the last subspace takes the remainder.
    pub subspace_width: usize,
    /// Codewords per subspace, 16 or 256.
    pub l: usize,
    pub kmeans_iters: usize,
    pub whitening: bool,
    pub residual: bool,
    /// Rows sampled for whitening and codebook training.
    pub train_sample: usize,
    pub seed: u64,
}

impl Default for DenseIndexConfig {
    fn default() -> Self {
        Self {
            subspace_width: 2,
            l: 16,
            kmeans_iters: 25,
            whitening: true,
            residual: true,
            train_sample: 100_000,
            seed: 0,
        }
    }
}

impl DenseIndexConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subspace_width == 0 {
            return Err(Error::config("subspace width must be > 0"));
        }
        if self.l != 16 && self.l != 256 {
            return Err(Error::config(format!("codebook size {} must be 16 or 256", self.l)));
        }
        if self.train_sample < self.l {
            return Err(Error::config("training sample smaller than codebook"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseIndex {
    whitening: Option<WhiteningTransform>,
    codebooks: Codebooks,
    codes: PqCodes,
    residual: Option<ScalarQuantResidual>,
}

/// Per-query state: transformed query, quantized table, and residual weights.
#[derive(Debug, Clone)]
pub struct DenseQuery {
    offset: f64,
    transformed: Vec<f32>,
    lut: super::lut::LookupTable,
    qlut: QuantizedLut,
    residual: Option<PreparedQuery>,
}

impl DenseQuery {
    pub fn quantized_lut(&self) -> &QuantizedLut {
        &self.qlut
    }

    pub fn lut(&self) -> &super::lut::LookupTable {
        &self.lut
    }

    /// Query after the inverse-transpose whitening map.
    pub fn transformed(&self) -> &[f32] {
        &self.transformed
    }

    /// `q · μ`; zero without whitening.
    pub fn offset(&self) -> f64 {
        self.offset
    }
}

/// Builds the index over `n` rows of width `d` (row-major), keeping row order.
pub fn build_dense_index(
    x: &[f32],
    d: usize,
    cfg: &DenseIndexConfig,
    exec: Execution,
) -> Result<DenseIndex> {
    cfg.validate()?;
    if d == 0 {
        return Err(Error::config("dense index needs at least one dimension"));
    }
    if !x.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.len() % d,
        });
    }
    let n = x.len() / d;
    if n < cfg.l {
        return Err(Error::InsufficientData(format!(
            "{n} dense rows for {} codewords",
            cfg.l
        )));
    }
    let train: Vec<f32> = if n > cfg.train_sample {
        let mut rng = stream_rng(cfg.seed, TAG_SAMPLE, 0);
        let mut rows = sample(&mut rng, n, cfg.train_sample).into_vec();
        rows.sort_unstable();
        rows.iter().flat_map(|&i| x[i * d..(i + 1) * d].iter().copied()).collect()
    } else {
        x.to_vec()
    };
    let whitening = if cfg.whitening {
        Some(whiten_fit(&train, d)?)
    } else {
        None
    };
    let transform = |rows: &[f32]| -> Vec<f32> {
        match &whitening {
            Some(w) => {
                let per_row = par::map_range(rows.len() / d, exec, |i| w.apply_data(&rows[i * d..(i + 1) * d]));
                per_row.concat()
            }
            None => rows.to_vec(),
        }
    };
    let train_t = transform(&train);
    drop(train);
    let widths = subspace_widths(d, cfg.subspace_width);
    let (codebooks, _) = train_codebooks(&train_t, &widths, cfg.l, cfg.kmeans_iters, cfg.seed, exec)?;
    drop(train_t);
    let xt = transform(x);
    let codes = PqCodes::encode_all(&xt, &codebooks, exec)?;
    let residual = if cfg.residual {
        let mut r = xt;
        par::for_each_chunk_mut(&mut r, d * 1024, exec, |ci, chunk| {
            for (j, row) in chunk.chunks_mut(d).enumerate() {
                let recon = codebooks.decode(&codes.row(ci * 1024 + j));
                for (v, c) in row.iter_mut().zip(recon) {
                    *v -= c;
                }
            }
        });
        Some(sq_encode(&r, d)?)
    } else {
        None
    };
    Ok(DenseIndex {
        whitening,
        codebooks,
        codes,
        residual,
    })
}

impl DenseIndex {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.codebooks.dim()
    }

    pub fn codebooks(&self) -> &Codebooks {
        &self.codebooks
    }

    pub fn codes(&self) -> &PqCodes {
        &self.codes
    }

    pub fn whitening(&self) -> Option<&WhiteningTransform> {
        self.whitening.as_ref()
    }

    pub fn residual(&self) -> Option<&ScalarQuantResidual> {
        self.residual.as_ref()
    }

    /// Reorders rows so that new row `p` is old row `order[p]`.
    pub fn permute(&self, order: &[u32]) -> DenseIndex {
        let residual = self.residual.as_ref().map(|r| {
            let d = r.dim();
            let codes: Vec<u8> = order
                .iter()
                .flat_map(|&o| r.codes()[o as usize * d..(o as usize + 1) * d].iter().copied())
                .collect();
            ScalarQuantResidual::from_parts(d, r.min().to_vec(), r.step().to_vec(), codes).unwrap()
        });
        DenseIndex {
            whitening: self.whitening.clone(),
            codebooks: self.codebooks.clone(),
            codes: self.codes.permute(order),
            residual,
        }
    }

    pub fn prepare(&self, q: &[f32]) -> Result<DenseQuery> {
        if q.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: q.len(),
            });
        }
        let (offset, transformed) = match &self.whitening {
            Some(w) => (w.query_offset(q), w.apply_query(q)),
            None => (0.0, q.to_vec()),
        };
        let lut = adc_table(&transformed, &self.codebooks)?;
        let qlut = quantize_lut(&lut)?;
        let residual = match &self.residual {
            Some(r) => Some(r.prepare(&transformed)?),
            None => None,
        };
        Ok(DenseQuery {
            offset,
            transformed,
            lut,
            qlut,
            residual,
        })
    }

    /// Writes approximate dense scores for every row into `out`.
    pub fn scan(&self, q: &DenseQuery, out: &mut [f32]) -> Result<()> {
        if self.codebooks.l() == 16 {
            lut16_scan(&self.codes, &q.qlut, out)?;
        } else {
            adc_scan(&self.codes, &q.lut, out)?;
        }
        if q.offset != 0.0 {
            let off = q.offset as f32;
            out.iter_mut().for_each(|v| *v += off);
        }
        Ok(())
    }

    /// Float ADC estimate of row `i` including the centering offset.
    pub fn adc_score(&self, q: &DenseQuery, i: usize) -> f64 {
        q.offset + q.lut.score(&self.codes.row(i))
    }

    /// `q' · r̃_i`, or 0 without a residual index.
    #[inline]
    pub fn residual_dot(&self, q: &DenseQuery, i: usize) -> f64 {
        match (&self.residual, &q.residual) {
            (Some(r), Some(p)) => r.dot(p, i),
            _ => 0.0,
        }
    }

    pub fn heap_bytes(&self) -> usize {
        let d = self.dim();
        self.codebooks.heap_bytes()
            + self.codes.heap_bytes()
            + self.residual.as_ref().map_or(0, |r| r.heap_bytes())
            + self.whitening.as_ref().map_or(0, |_| (2 * d * d + d) * 8)
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = Writer::new(w);
        let cb = &self.codebooks;
        w.raw(&DENSE_INDEX_MAGIC)?;
        w.u32(DENSE_INDEX_VERSION)?;
        w.u32(cb.dim() as u32)?;
        w.u32(cb.n_subspaces() as u32)?;
        w.u32(cb.l() as u32)?;
        let widths: Vec<u32> = cb.widths().iter().map(|&v| v as u32).collect();
        w.u32s(&widths)?;
        for k in 0..cb.n_subspaces() {
            w.f32s(cb.centers(k))?;
        }
        w.u64(self.len() as u64)?;
        w.raw(self.codes.packed())?;
        match &self.whitening {
            Some(t) => {
                w.u8(1)?;
                w.f64s(t.mean())?;
                w.f64s(t.p())?;
                w.f64s(t.p_inv_t())?;
            }
            None => w.u8(0)?,
        }
        match &self.residual {
            Some(r) => {
                w.u8(1)?;
                w.f32s(r.min())?;
                w.f32s(r.step())?;
                w.raw(r.codes())?;
            }
            None => w.u8(0)?,
        }
        w.into_inner().flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = Reader::new(r, "HDPQ");
        let idx = Self::read_body(&mut r)?;
        r.finish()?;
        Ok(idx)
    }

    pub(crate) fn read_body<R: Read>(r: &mut Reader<R>) -> Result<Self> {
        r.magic(DENSE_INDEX_MAGIC)?;
        r.version(DENSE_INDEX_VERSION)?;
        let d = r.u32()? as usize;
        let k = r.u32()? as usize;
        let l = r.u32()? as usize;
        if k > d || (d > 0 && k == 0) {
            return Err(r.corrupt(format!("{k} subspaces for {d} dimensions")));
        }
        let widths: Vec<usize> = r.u32_vec(k)?.into_iter().map(|v| v as usize).collect();
        if widths.iter().sum::<usize>() != d {
            return Err(r.corrupt("subspace widths do not cover the dimension"));
        }
        if l != 16 && l != 256 {
            return Err(r.corrupt(format!("codebook size {l}")));
        }
        let mut centers = Vec::with_capacity(k);
        for &wd in &widths {
            centers.push(r.f32_vec(wd * l)?);
        }
        let codebooks = Codebooks::from_parts(l, widths, centers).map_err(|e| r.corrupt(e.to_string()))?;
        let n = r.len("row count")?;
        let row_bytes = if l == 16 { k.div_ceil(2) } else { k };
        let packed = r.bytes(n.checked_mul(row_bytes).ok_or_else(|| r.corrupt("size overflow"))?)?;
        let codes = PqCodes::from_packed(n, k, l, packed).map_err(|e| r.corrupt(e.to_string()))?;
        let whitening = match r.u8()? {
            0 => None,
            1 => {
                let mean = r.f64_vec(d)?;
                let p = r.f64_vec(d * d)?;
                let p_inv_t = r.f64_vec(d * d)?;
                Some(WhiteningTransform::from_parts(mean, p, p_inv_t)?)
            }
            f => return Err(r.corrupt(format!("whitening flag {f}"))),
        };
        let residual = match r.u8()? {
            0 => None,
            1 => {
                let min = r.f32_vec(d)?;
                let step = r.f32_vec(d)?;
                let codes = r.bytes(n * d)?;
                Some(ScalarQuantResidual::from_parts(d, min, step, codes).map_err(|e| r.corrupt(e.to_string()))?)
            }
            f => return Err(r.corrupt(format!("residual flag {f}"))),
        };
        Ok(DenseIndex {
            whitening,
            codebooks,
            codes,
            residual,
        })
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;

    fn gaussian(n: usize, d: usize, seed: u64) -> Vec<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * d)
            .map(|i| {
                let z: f32 = StandardNormal.sample(&mut rng);
                z * (1 + i % d) as f32 + 0.3
            })
            .collect()
    }

    fn dot(a: &[f32], b: &[f32]) -> f64 {
        a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
    }

    #[test]
    fn residual_reorder_improves_estimate() {
        let d = 8;
        let x = gaussian(3000, d, 1);
        let idx = build_dense_index(&x, d, &DenseIndexConfig::default(), Execution::Parallel).unwrap();
        let q: Vec<f32> = gaussian(1, d, 2);
        let dq = idx.prepare(&q).unwrap();
        let mut s1 = vec![0.0; 3000];
        idx.scan(&dq, &mut s1).unwrap();
        let (mut e1, mut e2) = (0.0, 0.0);
        for (i, row) in x.chunks(d).enumerate() {
            let exact = dot(&q, row);
            let adc = idx.adc_score(&dq, i);
            let bound = idx.codebooks().n_subspaces() as f64 * dq.quantized_lut().scale() as f64 / 2.0 + 1e-3;
            assert!((s1[i] as f64 - adc).abs() <= bound * 1.01 + 1e-4 * adc.abs());
            e1 += (adc - exact).powi(2);
            e2 += (adc + idx.residual_dot(&dq, i) - exact).powi(2);
        }
        assert!(e2 < e1 / 100.0, "{e1} {e2}");
    }

    #[test]
    fn serialization_round_trip() {
        let d = 5;
        let x = gaussian(300, d, 3);
        for (whitening, residual, l) in [(true, true, 16), (false, false, 16), (true, false, 256)] {
            let cfg = DenseIndexConfig {
                whitening,
                residual,
                l,
                train_sample: 1000,
                ..Default::default()
            };
            let idx = build_dense_index(&x, d, &cfg, Execution::Sequential).unwrap();
            let mut buf = Vec::new();
            idx.write_to(&mut buf).unwrap();
            assert_eq!(DenseIndex::read_from(buf.as_slice()).unwrap(), idx);
            assert!(matches!(
                DenseIndex::read_from(&buf[..buf.len() - 1]),
                Err(Error::Truncated(_))
            ));
        }
    }

    #[test]
    fn training_sample_and_modes_deterministic() {
        let d = 4;
        let x = gaussian(2000, d, 4);
        let cfg = DenseIndexConfig {
            train_sample: 500,
            seed: 3,
            ..Default::default()
        };
        let a = build_dense_index(&x, d, &cfg, Execution::Sequential).unwrap();
        let b = build_dense_index(&x, d, &cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn permute_matches_permuted_rows() {
        let d = 4;
        let x = gaussian(100, d, 5);
        let idx = build_dense_index(&x, d, &DenseIndexConfig::default(), Execution::Sequential).unwrap();
        let order: Vec<u32> = (0..100).rev().collect();
        let p = idx.permute(&order);
        let q = gaussian(1, d, 6);
        let (a, b) = (idx.prepare(&q).unwrap(), p.prepare(&q).unwrap());
        for i in 0..100 {
            assert_eq!(p.codes().row(i), idx.codes().row(99 - i));
            assert_eq!(p.residual_dot(&b, i), idx.residual_dot(&a, 99 - i));
        }
    }

    #[test]
    fn too_few_rows() {
        let x = gaussian(10, 2, 7);
        assert!(matches!(
            build_dense_index(&x, 2, &DenseIndexConfig::default(), Execution::Sequential),
            Err(Error::InsufficientData(_))
        ));
    }
}
