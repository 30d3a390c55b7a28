//! Inverted index keyed by sparse dimension, with postings addressed by
//! storage position under a shared [`Permutation`].
//!
//! `HSIX` layout (little-endian): magic "HSIX" | version u32 | N u64 |
//! d_sparse u64 | order: N u32 | per-dimension posting counts: d_sparse u64 |
//! postings: (u32 position, f32 weight) pairs, dimension-major.

use std::io::{Read, Write};
use std::ops::AddAssign;

use super::cache_sort::Permutation;
use crate::data::{SparseMatrix, SparseRef};
use crate::wire::{Reader, Writer};
use crate::{Error, Result};

pub const SPARSE_INDEX_MAGIC: [u8; 4] = *b"HSIX";
pub const SPARSE_INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    d_sparse: usize,
    perm: Permutation,
    list_offsets: Vec<usize>,
    ids: Vec<u32>,
    weights: Vec<f32>,
}

/// Builds posting lists for `data` (rows in original id order) under `perm`.
/// Every list is sorted by ascending storage position.
pub fn build_inverted(data: &SparseMatrix, perm: &Permutation) -> Result<InvertedIndex> {
    if perm.len() != data.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: data.n_rows(),
            found: perm.len(),
        });
    }
    let counts = data.column_counts();
    let mut list_offsets = Vec::with_capacity(counts.len() + 1);
    list_offsets.push(0);
    for c in &counts {
        list_offsets.push(list_offsets.last().unwrap() + c);
    }
    let nnz = data.nnz();
    let mut ids = vec![0u32; nnz];
    let mut weights = vec![0f32; nnz];
    let mut cursor = list_offsets.clone();
    for (pos, &orig) in perm.order().iter().enumerate() {
        for (j, v) in data.row(orig as usize).iter() {
            let slot = &mut cursor[j as usize];
            ids[*slot] = pos as u32;
            weights[*slot] = v;
            *slot += 1;
        }
    }
    Ok(InvertedIndex {
        d_sparse: data.n_cols(),
        perm: perm.clone(),
        list_offsets,
        ids,
        weights,
    })
}

impl InvertedIndex {
    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn d_sparse(&self) -> usize {
        self.d_sparse
    }

    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    pub fn nnz(&self) -> usize {
        self.ids.len()
    }

    pub fn nnz_per_dim(&self) -> Vec<usize> {
        self.list_offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Positions and weights of dimension `j`'s postings.
    #[inline]
    pub fn postings(&self, j: usize) -> (&[u32], &[f32]) {
        let (a, b) = (self.list_offsets[j], self.list_offsets[j + 1]);
        (&self.ids[a..b], &self.weights[a..b])
    }

    /// Reconstructs the indexed matrix with rows in original id order.
    pub fn to_matrix(&self) -> SparseMatrix {
        let n = self.len();
        let mut rows: Vec<Vec<(u32, f32)>> = vec![Vec::new(); n];
        for j in 0..self.d_sparse {
            let (ids, ws) = self.postings(j);
            for (&p, &w) in ids.iter().zip(ws) {
                rows[self.perm.to_original(p as usize) as usize].push((j as u32, w));
            }
        }
        let mut m = SparseMatrix::with_capacity(self.d_sparse, n, self.nnz());
        for row in rows {
            for (j, w) in row {
                m.push_entry(j, w);
            }
            m.end_row();
        }
        m
    }

    pub fn heap_bytes(&self) -> usize {
        self.perm.len() * 8 + self.list_offsets.len() * 8 + self.ids.len() * 8
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = Writer::new(w);
        w.raw(&SPARSE_INDEX_MAGIC)?;
        w.u32(SPARSE_INDEX_VERSION)?;
        w.u64(self.len() as u64)?;
        w.u64(self.d_sparse as u64)?;
        w.u32s(self.perm.order())?;
        let counts: Vec<u64> = self.nnz_per_dim().iter().map(|&c| c as u64).collect();
        w.u64s(&counts)?;
        let mut buf = Vec::with_capacity(self.ids.len() * 8);
        for (id, wt) in self.ids.iter().zip(&self.weights) {
            buf.extend_from_slice(&id.to_le_bytes());
            buf.extend_from_slice(&wt.to_le_bytes());
        }
        w.raw(&buf)?;
        w.into_inner().flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = Reader::new(r, "HSIX");
        r.magic(SPARSE_INDEX_MAGIC)?;
        r.version(SPARSE_INDEX_VERSION)?;
        let n = r.len("point count")?;
        let d_sparse = r.len("sparse dimensionality")?;
        let order = r.u32_vec(n)?;
        let perm = Permutation::from_order(order).map_err(|e| r.corrupt(e.to_string()))?;
        let counts = r.u64_vec(d_sparse)?;
        let mut list_offsets = Vec::with_capacity(d_sparse + 1);
        list_offsets.push(0usize);
        for c in counts {
            let next = list_offsets
                .last()
                .unwrap()
                .checked_add(c as usize)
                .ok_or_else(|| r.corrupt("posting count overflow"))?;
            list_offsets.push(next);
        }
        let nnz = *list_offsets.last().unwrap();
        let raw = r.bytes(nnz.checked_mul(8).ok_or_else(|| r.corrupt("posting overflow"))?)?;
        r.finish()?;
        let mut ids = Vec::with_capacity(nnz);
        let mut weights = Vec::with_capacity(nnz);
        for c in raw.chunks_exact(8) {
            ids.push(u32::from_le_bytes([c[0], c[1], c[2], c[3]]));
            weights.push(f32::from_le_bytes([c[4], c[5], c[6], c[7]]));
        }
        let idx = InvertedIndex {
            d_sparse,
            perm,
            list_offsets,
            ids,
            weights,
        };
        for j in 0..d_sparse {
            let (ids, _) = idx.postings(j);
            if ids.windows(2).any(|w| w[0] >= w[1]) || ids.last().is_some_and(|&p| p as usize >= n) {
                return Err(Error::Corrupt {
                    format: "HSIX",
                    reason: format!("posting list {j} is not strictly ascending within range"),
                });
            }
        }
        Ok(idx)
    }
}

/// Accumulator element type. `f32` matches the 16-slots-per-line layout;
/// `f64` gives exact double-precision sums.
pub trait Score: Copy + Default + AddAssign + Send + Sync + 'static {
    fn product(q: f32, w: f32) -> Self;
    fn to_f64(self) -> f64;
}

impl Score for f32 {
    #[inline]
    fn product(q: f32, w: f32) -> Self {
        q * w
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Score for f64 {
    #[inline]
    fn product(q: f32, w: f32) -> Self {
        q as f64 * w as f64
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Per-query partial sums in storage order, optionally counting the distinct
/// accumulator cache-lines a scan touches.
#[derive(Debug, Clone)]
pub struct Accumulator<S: Score = f32> {
    scores: Vec<S>,
    tracking: Option<LineTracker>,
}

#[derive(Debug, Clone)]
struct LineTracker {
    line_capacity: usize,
    seen: Vec<u64>,
    touched: usize,
}

impl<S: Score> Accumulator<S> {
    pub fn new(n: usize) -> Self {
        Self {
            scores: vec![S::default(); n],
            tracking: None,
        }
    }

    /// Counts distinct lines `position / line_capacity` visited by scans.
    pub fn with_line_tracking(n: usize, line_capacity: usize) -> Result<Self> {
        if line_capacity == 0 {
            return Err(Error::config("line capacity must be > 0"));
        }
        let lines = n.div_ceil(line_capacity);
        Ok(Self {
            scores: vec![S::default(); n],
            tracking: Some(LineTracker {
                line_capacity,
                seen: vec![0; lines.div_ceil(64)],
                touched: 0,
            }),
        })
    }

    pub fn reset(&mut self) {
        self.scores.iter_mut().for_each(|s| *s = S::default());
        if let Some(t) = &mut self.tracking {
            t.seen.iter_mut().for_each(|w| *w = 0);
            t.touched = 0;
        }
    }

    pub fn scores(&self) -> &[S] {
        &self.scores
    }

    pub fn scores_mut(&mut self) -> &mut [S] {
        &mut self.scores
    }

    pub fn into_scores(self) -> Vec<S> {
        self.scores
    }

    pub fn touched_lines(&self) -> Option<usize> {
        self.tracking.as_ref().map(|t| t.touched)
    }

    pub fn line_capacity(&self) -> Option<usize> {
        self.tracking.as_ref().map(|t| t.line_capacity)
    }
}

/// Adds `q · x` for every indexed point into `acc`, at storage positions.
pub fn sparse_scan<S: Score>(
    idx: &InvertedIndex,
    q: SparseRef<'_>,
    acc: &mut Accumulator<S>,
) -> Result<()> {
    if acc.scores.len() != idx.len() {
        return Err(Error::DimensionMismatch {
            expected: idx.len(),
            found: acc.scores.len(),
        });
    }
    if let Some(d) = q.max_dim() {
        if d as usize >= idx.d_sparse {
            return Err(Error::DimensionOutOfRange {
                dim: d as u64,
                limit: idx.d_sparse as u64,
            });
        }
    }
    let scores = &mut acc.scores;
    match &mut acc.tracking {
        None => {
            for (j, qv) in q.iter() {
                let (ids, ws) = idx.postings(j as usize);
                for (&p, &w) in ids.iter().zip(ws) {
                    scores[p as usize] += S::product(qv, w);
                }
            }
        }
        Some(t) => {
            for (j, qv) in q.iter() {
                let (ids, ws) = idx.postings(j as usize);
                for (&p, &w) in ids.iter().zip(ws) {
                    scores[p as usize] += S::product(qv, w);
                    let line = p as usize / t.line_capacity;
                    let (word, bit) = (line / 64, 1u64 << (line % 64));
                    if t.seen[word] & bit == 0 {
                        t.seen[word] |= bit;
                        t.touched += 1;
                    }
                }
            }
        }
    }
    Ok(())
}
