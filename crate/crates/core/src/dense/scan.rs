//! PQ code storage and the LUT16 scan kernels.
//!
//! With `l = 16`, codes are kept twice: packed row-major (two codes per byte,
//! low nibble = even subspace), and in a blocked layout that feeds the
//! shuffle kernels. A block holds 32 points; for each subspace it stores 16
//! bytes, where byte `t` carries the code of point `t` in its low nibble and
//! of point `16 + t` in its high nibble.

use super::codebooks::Codebooks;
use super::lut::{LookupTable, QuantizedLut};
use crate::par::{self, Execution};
use crate::{Error, Result};

pub const BLOCK: usize = 32;
/// Subspaces summed in 16-bit lanes before spilling to 32 bits:
/// `256 · 255 ≤ 65535`.
pub const LANE_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct PqCodes {
    n: usize,
    k: usize,
    l: usize,
    packed: Vec<u8>,
    blocked: Vec<u8>,
}

impl PqCodes {
    /// `codes` is `n × k` row-major, one code per byte.
    pub fn from_codes(n: usize, k: usize, l: usize, codes: &[u8]) -> Result<Self> {
        if l != 16 && l != 256 {
            return Err(Error::Unsupported(format!("codebook size {l}; expected 16 or 256")));
        }
        if codes.len() != n * k {
            return Err(Error::DimensionMismatch {
                expected: n * k,
                found: codes.len(),
            });
        }
        if l == 16 && codes.iter().any(|&c| c >= 16) {
            return Err(Error::Invariant("code exceeds codebook size".into()));
        }
        let packed = if l == 16 {
            let rb = k.div_ceil(2);
            let mut p = vec![0u8; n * rb];
            for i in 0..n {
                for s in 0..k {
                    p[i * rb + s / 2] |= codes[i * k + s] << (4 * (s % 2));
                }
            }
            p
        } else {
            codes.to_vec()
        };
        Ok(Self::from_packed_unchecked(n, k, l, packed))
    }

    fn from_packed_unchecked(n: usize, k: usize, l: usize, packed: Vec<u8>) -> Self {
        let mut out = Self {
            n,
            k,
            l,
            packed,
            blocked: Vec::new(),
        };
        if l == 16 {
            out.blocked = out.build_blocked();
        }
        out
    }

    /// Rebuilds from the packed representation written by [`Self::packed`].
    pub fn from_packed(n: usize, k: usize, l: usize, packed: Vec<u8>) -> Result<Self> {
        if l != 16 && l != 256 {
            return Err(Error::Unsupported(format!("codebook size {l}; expected 16 or 256")));
        }
        let rb = if l == 16 { k.div_ceil(2) } else { k };
        if packed.len() != n * rb {
            return Err(Error::DimensionMismatch {
                expected: n * rb,
                found: packed.len(),
            });
        }
        if l == 16 && k % 2 == 1 && (0..n).any(|i| packed[i * rb + rb - 1] >> 4 != 0) {
            return Err(Error::Invariant("padding nibble is not zero".into()));
        }
        Ok(Self::from_packed_unchecked(n, k, l, packed))
    }

    pub fn encode_all(x: &[f32], cb: &Codebooks, exec: Execution) -> Result<Self> {
        let d = cb.dim();
        let k = cb.n_subspaces();
        if d == 0 {
            return Err(Error::config("codebooks cover no dimensions"));
        }
        if !x.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: x.len() % d,
            });
        }
        let n = x.len() / d;
        let mut codes = vec![0u8; n * k];
        let rows_per_chunk = 1024;
        let errs = std::sync::Mutex::new(None);
        par::for_each_chunk_mut(&mut codes, rows_per_chunk * k.max(1), exec, |ci, chunk| {
            for (r, out) in chunk.chunks_mut(k.max(1)).enumerate() {
                let i = ci * rows_per_chunk + r;
                if let Err(e) = cb.encode_into(&x[i * d..(i + 1) * d], out) {
                    *errs.lock().unwrap() = Some(e);
                }
            }
        });
        if let Some(e) = errs.into_inner().unwrap() {
            return Err(e);
        }
        Self::from_codes(n, k, cb.l(), &codes)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn n_subspaces(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn packed(&self) -> &[u8] {
        &self.packed
    }

    fn row_bytes(&self) -> usize {
        if self.l == 16 {
            self.k.div_ceil(2)
        } else {
            self.k
        }
    }

    #[inline]
    pub fn code(&self, i: usize, s: usize) -> u8 {
        if self.l == 16 {
            (self.packed[i * self.row_bytes() + s / 2] >> (4 * (s % 2))) & 0x0f
        } else {
            self.packed[i * self.k + s]
        }
    }

    pub fn row(&self, i: usize) -> Vec<u8> {
        (0..self.k).map(|s| self.code(i, s)).collect()
    }

    /// Reorders rows so that new row `p` is old row `order[p]`.
    pub fn permute(&self, order: &[u32]) -> Self {
        let rb = self.row_bytes();
        let mut packed = Vec::with_capacity(self.packed.len());
        for &o in order {
            let o = o as usize;
            packed.extend_from_slice(&self.packed[o * rb..(o + 1) * rb]);
        }
        Self::from_packed_unchecked(order.len(), self.k, self.l, packed)
    }

    fn build_blocked(&self) -> Vec<u8> {
        let blocks = self.n.div_ceil(BLOCK);
        let mut out = vec![0u8; blocks * self.k * 16];
        for i in 0..self.n {
            let (b, t) = (i / BLOCK, i % BLOCK);
            for s in 0..self.k {
                let c = self.code(i, s);
                let byte = &mut out[(b * self.k + s) * 16 + t % 16];
                *byte |= if t < 16 { c } else { c << 4 };
            }
        }
        out
    }

    pub fn heap_bytes(&self) -> usize {
        self.packed.len() + self.blocked.len()
    }
}

/// Float ADC: `out[i] = Σ_k T[k][code_i[k]]`, summed in double precision.
pub fn adc_scan(codes: &PqCodes, lut: &LookupTable, out: &mut [f32]) -> Result<()> {
    check(codes, lut.n_subspaces(), lut.l(), out.len())?;
    for (i, o) in out.iter_mut().enumerate() {
        let mut sum = 0f64;
        for s in 0..codes.k {
            sum += lut.row(s)[codes.code(i, s) as usize] as f64;
        }
        *o = sum as f32;
    }
    Ok(())
}

fn check(codes: &PqCodes, k: usize, l: usize, out: usize) -> Result<()> {
    if codes.k != k {
        return Err(Error::DimensionMismatch {
            expected: codes.k,
            found: k,
        });
    }
    if codes.l != l {
        return Err(Error::DimensionMismatch {
            expected: codes.l,
            found: l,
        });
    }
    if out != codes.n {
        return Err(Error::DimensionMismatch {
            expected: codes.n,
            found: out,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lut16Kernel {
    /// Per-point loop over packed rows; defines the semantics.
    Scalar,
    /// Blocked layout, plain integer code.
    Portable,
    /// Blocked layout, AVX2 byte shuffles with 16-bit lanes.
    Avx2,
}

impl Lut16Kernel {
    pub fn is_available(self) -> bool {
        match self {
            Lut16Kernel::Scalar | Lut16Kernel::Portable => true,
            Lut16Kernel::Avx2 => avx2_available(),
        }
    }

    /// The fastest kernel this build and CPU support.
    pub fn best() -> Self {
        if avx2_available() {
            Lut16Kernel::Avx2
        } else {
            Lut16Kernel::Portable
        }
    }
}

fn avx2_available() -> bool {
    #[cfg(all(feature = "simd", target_arch = "x86_64"))]
    {
        std::arch::is_x86_feature_detected!("avx2")
    }
    #[cfg(not(all(feature = "simd", target_arch = "x86_64")))]
    {
        false
    }
}

/// Scores every point with the fastest available kernel.
pub fn lut16_scan(codes: &PqCodes, qlut: &QuantizedLut, out: &mut [f32]) -> Result<()> {
    lut16_scan_with(Lut16Kernel::best(), codes, qlut, out)
}

/// `out[i] = bias_total + scale · Σ_k table[k][code_i[k]]`.
pub fn lut16_scan_with(
    kernel: Lut16Kernel,
    codes: &PqCodes,
    qlut: &QuantizedLut,
    out: &mut [f32],
) -> Result<()> {
    if codes.l != 16 || qlut.l() != 16 {
        return Err(Error::Unsupported("LUT16 scan needs 16-entry codebooks".into()));
    }
    check(codes, qlut.n_subspaces(), qlut.l(), out.len())?;
    match kernel {
        Lut16Kernel::Scalar => scan_scalar(codes, qlut, out),
        Lut16Kernel::Portable => scan_portable(codes, qlut, out),
        Lut16Kernel::Avx2 => {
            #[cfg(all(feature = "simd", target_arch = "x86_64"))]
            if avx2_available() {
                // SAFETY: AVX2 support was just detected.
                unsafe { avx2::scan(codes, qlut, out) };
                return Ok(());
            }
            return Err(Error::Unsupported("AVX2 kernel not available".into()));
        }
    }
    Ok(())
}

fn scan_scalar(codes: &PqCodes, qlut: &QuantizedLut, out: &mut [f32]) {
    let rb = codes.row_bytes();
    let table = qlut.table();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &codes.packed[i * rb..(i + 1) * rb];
        let mut sum = 0u32;
        for s in 0..codes.k {
            let c = (row[s / 2] >> (4 * (s % 2))) & 0x0f;
            sum += table[s * 16 + c as usize] as u32;
        }
        *o = qlut.finish(sum);
    }
}

fn scan_portable(codes: &PqCodes, qlut: &QuantizedLut, out: &mut [f32]) {
    let k = codes.k;
    let table = qlut.table();
    for (b, dst) in out.chunks_mut(BLOCK).enumerate() {
        let mut acc = [0u32; BLOCK];
        let base = &codes.blocked[b * k * 16..(b + 1) * k * 16];
        for s in 0..k {
            let bytes = &base[s * 16..(s + 1) * 16];
            let row = &table[s * 16..(s + 1) * 16];
            for t in 0..16 {
                acc[t] += row[(bytes[t] & 0x0f) as usize] as u32;
                acc[16 + t] += row[(bytes[t] >> 4) as usize] as u32;
            }
        }
        for (o, &a) in dst.iter_mut().zip(&acc) {
            *o = qlut.finish(a);
        }
    }
}

#[cfg(all(feature = "simd", target_arch = "x86_64"))]
mod avx2 {
    use std::arch::x86_64::*;

    use super::{PqCodes, BLOCK, LANE_CHUNK};
    use crate::dense::lut::QuantizedLut;

    /// Accumulates table bytes as 16-bit words. `acc_all` sums whole words
    /// with wraparound and `acc_hi` sums the odd bytes. Since each byte sum
    /// fits in 16 bits, `acc_all − 256 · acc_hi` recovers the even bytes.
    #[target_feature(enable = "avx2")]
    pub(super) unsafe fn scan(codes: &PqCodes, qlut: &QuantizedLut, out: &mut [f32]) {
        let k = codes.k;
        let table = qlut.table();
        let mask = _mm_set1_epi8(0x0f);
        let mut even = [0u16; 16];
        let mut odd = [0u16; 16];
        for (b, dst) in out.chunks_mut(BLOCK).enumerate() {
            let base = codes.blocked.as_ptr().add(b * k * 16);
            let mut totals = [0u32; BLOCK];
            let mut start = 0;
            while start < k {
                let end = (start + LANE_CHUNK).min(k);
                let mut acc_all = _mm256_setzero_si256();
                let mut acc_hi = _mm256_setzero_si256();
                for s in start..end {
                    let x = _mm_loadu_si128(base.add(s * 16) as *const __m128i);
                    let lo = _mm_and_si128(x, mask);
                    let hi = _mm_and_si128(_mm_srli_epi16(x, 4), mask);
                    let idx = _mm256_set_m128i(hi, lo);
                    let row = _mm_loadu_si128(table.as_ptr().add(s * 16) as *const __m128i);
                    let vals = _mm256_shuffle_epi8(_mm256_broadcastsi128_si256(row), idx);
                    acc_all = _mm256_add_epi16(acc_all, vals);
                    acc_hi = _mm256_add_epi16(acc_hi, _mm256_srli_epi16(vals, 8));
                }
                let acc_lo = _mm256_sub_epi16(acc_all, _mm256_slli_epi16(acc_hi, 8));
                _mm256_storeu_si256(even.as_mut_ptr() as *mut __m256i, acc_lo);
                _mm256_storeu_si256(odd.as_mut_ptr() as *mut __m256i, acc_hi);
                for w in 0..16 {
                    totals[2 * w] += even[w] as u32;
                    totals[2 * w + 1] += odd[w] as u32;
                }
                start = end;
            }
            for (o, &t) in dst.iter_mut().zip(&totals) {
                *o = qlut.finish(t);
            }
        }
    }
}
