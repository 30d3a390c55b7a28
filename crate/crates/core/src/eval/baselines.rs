//! Reference search methods compared against the hybrid index.

use crate::data::synth::splitmix;
use crate::data::{hybrid_dot, HybridDataset, HybridVectorRef, SparseMatrix, SparseRef};
use crate::dense::{build_dense_index, DenseIndex, DenseIndexConfig};
use crate::par::{self, Execution};
use crate::pipeline::{build_index, top_k_by, HybridIndex, HybridIndexConfig, SearchScratch};
use crate::sparse::{build_inverted, prune_split, sparse_scan, Accumulator, InvertedIndex, Permutation, PruneThresholds};
use crate::{Error, Result};

/// Default memory cap for the padded dense brute-force baseline.
pub const DEFAULT_DENSE_BRUTE_FORCE_LIMIT: usize = 2 << 30;

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    /// Sparse part padded into a dense matrix; skipped above `memory_limit` bytes.
    DenseBruteForce { memory_limit: usize },
    /// Exact score of every point from the row store.
    SparseBruteForce,
    /// Exact inverted index over sparse dims plus dense dims as full lists,
    /// double-precision accumulators.
    SparseInverted,
    /// Inverted index pruned to `top_t` postings per dimension, single
    /// precision; with `reorder > 0`, that many candidates are rescored exactly.
    SparseInvertedPruned { top_t: usize, reorder: usize },
    /// LUT16 PQ scan of the dense part only, then exact rescoring.
    DensePq { reorder: usize },
    /// Sign random projections with median thresholds, Hamming ranking,
    /// then exact rescoring.
    Hamming { bits: usize, reorder: usize, seed: u64 },
    Hybrid(HybridIndexConfig),
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::DenseBruteForce { .. } => "dense-brute-force".into(),
            Method::SparseBruteForce => "sparse-brute-force".into(),
            Method::SparseInverted => "sparse-inverted".into(),
            Method::SparseInvertedPruned { reorder: 0, .. } => "sparse-inverted-no-reorder".into(),
            Method::SparseInvertedPruned { reorder, .. } => format!("sparse-inverted-reorder-{}", short(*reorder)),
            Method::DensePq { reorder } => format!("dense-pq-reorder-{}", short(*reorder)),
            Method::Hamming { bits, .. } => format!("hamming-{bits}"),
            Method::Hybrid(_) => "hybrid".into(),
        }
    }

    /// Exact methods must reach recall 1.
    pub fn is_exact(&self) -> bool {
        matches!(
            self,
            Method::DenseBruteForce { .. } | Method::SparseBruteForce | Method::SparseInverted
        )
    }

    /// The method roster of the comparison tables, at desk-scale defaults.
    pub fn roster(hybrid: HybridIndexConfig) -> Vec<Method> {
        vec![
            Method::DenseBruteForce {
                memory_limit: DEFAULT_DENSE_BRUTE_FORCE_LIMIT,
            },
            Method::SparseBruteForce,
            Method::SparseInverted,
            Method::SparseInvertedPruned { top_t: 128, reorder: 0 },
            Method::SparseInvertedPruned {
                top_t: 128,
                reorder: 20_000,
            },
            Method::DensePq { reorder: 10_000 },
            Method::Hamming {
                bits: 512,
                reorder: 5_000,
                seed: 0,
            },
            Method::Hybrid(hybrid),
        ]
    }

    pub fn build<'a>(&self, data: &'a HybridDataset, exec: Execution) -> Result<Built<'a>> {
        let searcher: Box<dyn Searcher + 'a> = match self {
            Method::DenseBruteForce { memory_limit } => {
                let width = data.d_sparse() + data.d_dense();
                let bytes = data.len().saturating_mul(width).saturating_mul(4);
                if bytes > *memory_limit {
                    return Ok(Built::Skipped(format!("OOM: needs {bytes} bytes")));
                }
                Box::new(DenseBruteForce::new(data))
            }
            Method::SparseBruteForce => Box::new(SparseBruteForce { data }),
            Method::SparseInverted => Box::new(AugmentedInverted::new(data, None, 0)?),
            Method::SparseInvertedPruned { top_t, reorder } => {
                Box::new(AugmentedInverted::new(data, Some(*top_t), *reorder)?)
            }
            Method::DensePq { reorder } => Box::new(DensePqSearch::new(data, *reorder, exec)?),
            Method::Hamming { bits, reorder, seed } => Box::new(HammingSearch::new(data, *bits, *reorder, *seed, exec)?),
            Method::Hybrid(cfg) => Box::new(HybridSearch(build_index(data, cfg, exec)?)),
        };
        Ok(Built::Ready(searcher))
    }
}

fn short(n: usize) -> String {
    if n.is_multiple_of(1000) {
        format!("{}k", n / 1000)
    } else {
        n.to_string()
    }
}

pub enum Built<'a> {
    Ready(Box<dyn Searcher + 'a>),
    Skipped(String),
}

pub trait Searcher: Sync {
    /// Top `h` original ids, best first.
    fn search(&self, q: HybridVectorRef<'_>, h: usize) -> Result<Vec<u32>>;
    fn index_bytes(&self) -> usize;
}

/// Rescores `cands` exactly and keeps the best `h`.
fn rerank(data: &HybridDataset, q: HybridVectorRef<'_>, cands: &[u32], h: usize) -> Result<Vec<u32>> {
    let scores: Vec<f64> = cands
        .iter()
        .map(|&i| hybrid_dot(q, data.point(i as usize)))
        .collect::<Result<_>>()?;
    Ok(top_k_by(cands.len(), h, |k| (scores[k], cands[k]))
        .into_iter()
        .map(|k| cands[k])
        .collect())
}

struct DenseBruteForce<'a> {
    data: &'a HybridDataset,
    width: usize,
    matrix: Vec<f32>,
}

impl<'a> DenseBruteForce<'a> {
    fn new(data: &'a HybridDataset) -> Self {
        let width = data.d_sparse() + data.d_dense();
        let mut matrix = vec![0f32; data.len() * width];
        for (i, row) in matrix.chunks_mut(width.max(1)).enumerate().take(data.len()) {
            let p = data.point(i);
            for (j, v) in p.sparse.iter() {
                row[j as usize] = v;
            }
            row[data.d_sparse()..].copy_from_slice(p.dense);
        }
        Self { data, width, matrix }
    }
}

impl Searcher for DenseBruteForce<'_> {
    fn search(&self, q: HybridVectorRef<'_>, h: usize) -> Result<Vec<u32>> {
        self.data.check_schema(q)?;
        let ds = self.data.d_sparse();
        let mut qs = vec![0f32; ds];
        for (j, v) in q.sparse.iter() {
            qs[j as usize] = v;
        }
        let scores: Vec<f64> = (0..self.data.len())
            .map(|i| {
                let row = &self.matrix[i * self.width..(i + 1) * self.width];
                let s: f64 = qs.iter().zip(&row[..ds]).fold(0.0, |a, (&x, &y)| a + x as f64 * y as f64);
                let d: f64 = q.dense.iter().zip(&row[ds..]).fold(0.0, |a, (&x, &y)| a + x as f64 * y as f64);
                s + d
            })
            .collect();
        Ok(top_k_by(scores.len(), h, |i| (scores[i], i as u32))
            .into_iter()
            .map(|i| i as u32)
            .collect())
    }

    fn index_bytes(&self) -> usize {
        self.matrix.len() * 4
    }
}

struct SparseBruteForce<'a> {
    data: &'a HybridDataset,
}

impl Searcher for SparseBruteForce<'_> {
    fn search(&self, q: HybridVectorRef<'_>, h: usize) -> Result<Vec<u32>> {
        Ok(super::oracle::brute_force_topk(self.data, q, h)?.0)
    }

    fn index_bytes(&self) -> usize {
        self.data.heap_bytes()
    }
}

/// Sparse dims followed by dense dims as one sparse space.
fn augment(data: &HybridDataset) -> SparseMatrix {
    let ds = data.d_sparse();
    let mut m = SparseMatrix::with_capacity(ds + data.d_dense(), data.len(), data.sparse_matrix().nnz() + data.dense_matrix().len());
    for p in data.points() {
        for (j, v) in p.sparse.iter() {
            m.push_entry(j, v);
        }
        for (t, &v) in p.dense.iter().enumerate() {
            if v != 0.0 {
                m.push_entry((ds + t) as u32, v);
            }
        }
        m.end_row();
    }
    m
}

fn augment_query(q: HybridVectorRef<'_>, ds: usize) -> (Vec<u32>, Vec<f32>) {
    let mut dims: Vec<u32> = q.sparse.dims.to_vec();
    let mut values: Vec<f32> = q.sparse.values.to_vec();
    for (t, &v) in q.dense.iter().enumerate() {
        if v != 0.0 {
            dims.push((ds + t) as u32);
            values.push(v);
        }
    }
    (dims, values)
}

/// Inverted index over the augmented space in original id order.
pub struct AugmentedInverted<'a> {
    data: &'a HybridDataset,
    index: InvertedIndex,
    /// `None` for the exact variant.
    top_t: Option<usize>,
    reorder: usize,
}

impl<'a> AugmentedInverted<'a> {
    pub fn new(data: &'a HybridDataset, top_t: Option<usize>, reorder: usize) -> Result<Self> {
        let m = augment(data);
        let m = match top_t {
            Some(t) => prune_split(&m, &PruneThresholds::from_top_t(&m, t, 0.0)?)?.data,
            None => m,
        };
        let index = build_inverted(&m, &Permutation::identity(data.len()))?;
        Ok(Self {
            data,
            index,
            top_t,
            reorder,
        })
    }

    pub fn exact(data: &'a HybridDataset) -> Result<Self> {
        Self::new(data, None, 0)
    }

    fn query(&self, q: HybridVectorRef<'_>) -> Result<(Vec<u32>, Vec<f32>)> {
        self.data.check_schema(q)?;
        Ok(augment_query(q, self.data.d_sparse()))
    }
}

impl Searcher for AugmentedInverted<'_> {
    fn search(&self, q: HybridVectorRef<'_>, h: usize) -> Result<Vec<u32>> {
        let (dims, values) = self.query(q)?;
        let aq = SparseRef {
            dims: &dims,
            values: &values,
        };
        let n = self.data.len();
        if self.top_t.is_none() {
            let mut acc = Accumulator::<f64>::new(n);
            sparse_scan(&self.index, aq, &mut acc)?;
            let s = acc.scores();
            return Ok(top_k_by(n, h, |i| (s[i], i as u32)).into_iter().map(|i| i as u32).collect());
        }
        let mut acc = Accumulator::<f32>::new(n);
        sparse_scan(&self.index, aq, &mut acc)?;
        let s = acc.scores();
        let k = if self.reorder > 0 { self.reorder.max(h) } else { h };
        let cands: Vec<u32> = top_k_by(n, k, |i| (s[i] as f64, i as u32))
            .into_iter()
            .map(|i| i as u32)
            .collect();
        if self.reorder == 0 {
            Ok(cands)
        } else {
            rerank(self.data, q, &cands, h)
        }
    }

    fn index_bytes(&self) -> usize {
        self.index.heap_bytes()
    }
}

struct DensePqSearch<'a> {
    data: &'a HybridDataset,
    index: Option<DenseIndex>,
    reorder: usize,
}

impl<'a> DensePqSearch<'a> {
    fn new(data: &'a HybridDataset, reorder: usize, exec: Execution) -> Result<Self> {
        let index = if data.d_dense() > 0 {
            let cfg = DenseIndexConfig {
                residual: false,
                ..Default::default()
            };
            Some(build_dense_index(data.dense_matrix(), data.d_dense(), &cfg, exec)?)
        } else {
            None
        };
        Ok(Self { data, index, reorder })
    }
}

impl Searcher for DensePqSearch<'_> {
    fn search(&self, q: HybridVectorRef<'_>, h: usize) -> Result<Vec<u32>> {
        self.data.check_schema(q)?;
        let n = self.data.len();
        let mut scores = vec![0f32; n];
        if let Some(idx) = &self.index {
            let dq = idx.prepare(q.dense)?;
            idx.scan(&dq, &mut scores)?;
        }
        let cands: Vec<u32> = top_k_by(n, self.reorder.max(h), |i| (scores[i] as f64, i as u32))
            .into_iter()
            .map(|i| i as u32)
            .collect();
        rerank(self.data, q, &cands, h)
    }

    fn index_bytes(&self) -> usize {
        self.index.as_ref().map_or(0, |i| i.heap_bytes())
    }
}

struct HammingSearch<'a> {
    data: &'a HybridDataset,
    bits: usize,
    words: usize,
    seed: u64,
    medians: Vec<f32>,
    codes: Vec<u64>,
    reorder: usize,
}

impl<'a> HammingSearch<'a> {
    fn new(data: &'a HybridDataset, bits: usize, reorder: usize, seed: u64, exec: Execution) -> Result<Self> {
        if bits == 0 || !bits.is_multiple_of(64) {
            return Err(Error::config("Hamming code length must be a positive multiple of 64"));
        }
        let words = bits / 64;
        let mut s = Self {
            data,
            bits,
            words,
            seed,
            medians: Vec::new(),
            codes: Vec::new(),
            reorder,
        };
        let n = data.len();
        let proj: Vec<Vec<f32>> = par::map_range(n, exec, |i| s.project(data.point(i)));
        s.medians = par::map_range(bits, exec, |b| {
            let mut col: Vec<f32> = proj.iter().map(|p| p[b]).collect();
            if col.is_empty() {
                return 0.0;
            }
            let mid = col.len() / 2;
            *col.select_nth_unstable_by(mid, f32::total_cmp).1
        });
        s.codes = proj.iter().flat_map(|p| s.binarize(p)).collect();
        Ok(s)
    }

    /// Rademacher sign of projection `b` at augmented dim `j`, from a hash.
    fn signs(&self, j: u64, out: &mut [u64]) {
        for (w, o) in out.iter_mut().enumerate() {
            *o = splitmix(self.seed ^ splitmix(j.wrapping_mul(self.words as u64) + w as u64));
        }
    }

    fn project(&self, x: HybridVectorRef<'_>) -> Vec<f32> {
        let mut acc = vec![0f64; self.bits];
        let mut mask = vec![0u64; self.words];
        let ds = self.data.d_sparse() as u64;
        let dense = x.dense.iter().enumerate().map(|(t, &v)| (ds + t as u64, v));
        for (j, v) in x.sparse.iter().map(|(j, v)| (j as u64, v)).chain(dense) {
            if v == 0.0 {
                continue;
            }
            self.signs(j, &mut mask);
            for (b, a) in acc.iter_mut().enumerate() {
                let positive = mask[b / 64] >> (b % 64) & 1 == 1;
                *a += if positive { v as f64 } else { -(v as f64) };
            }
        }
        acc.into_iter().map(|v| v as f32).collect()
    }

    fn binarize(&self, p: &[f32]) -> Vec<u64> {
        let mut code = vec![0u64; self.words];
        for (b, &v) in p.iter().enumerate() {
            if v > self.medians[b] {
                code[b / 64] |= 1 << (b % 64);
            }
        }
        code
    }
}

impl Searcher for HammingSearch<'_> {
    fn search(&self, q: HybridVectorRef<'_>, h: usize) -> Result<Vec<u32>> {
        self.data.check_schema(q)?;
        let qc = self.binarize(&self.project(q));
        let n = self.data.len();
        let dist: Vec<u32> = (0..n)
            .map(|i| {
                self.codes[i * self.words..(i + 1) * self.words]
                    .iter()
                    .zip(&qc)
                    .map(|(a, b)| (a ^ b).count_ones())
                    .sum()
            })
            .collect();
        let cands: Vec<u32> = top_k_by(n, self.reorder.max(h), |i| (-(dist[i] as f64), i as u32))
            .into_iter()
            .map(|i| i as u32)
            .collect();
        rerank(self.data, q, &cands, h)
    }

    fn index_bytes(&self) -> usize {
        self.codes.len() * 8 + self.medians.len() * 4
    }
}

struct HybridSearch(HybridIndex);

impl Searcher for HybridSearch {
    fn search(&self, q: HybridVectorRef<'_>, h: usize) -> Result<Vec<u32>> {
        Ok(self.0.search_with(q, h, &mut SearchScratch::default())?.ids)
    }

    fn index_bytes(&self) -> usize {
        self.0.heap_bytes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SynthConfig};
    use crate::eval::oracle::{brute_force_topk, recall_at_h};

    fn small() -> crate::data::SyntheticData {
        generate_synthetic(&SynthConfig {
            n: 800,
            n_queries: 10,
            d_sparse: 300,
            d_dense: 8,
            seed: 3,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn exact_methods_have_full_recall() {
        let syn = small();
        for m in [
            Method::DenseBruteForce { memory_limit: usize::MAX },
            Method::SparseBruteForce,
            Method::SparseInverted,
            Method::SparseInvertedPruned {
                top_t: 100_000,
                reorder: 0,
            },
        ] {
            let Built::Ready(s) = m.build(&syn.data, Execution::Sequential).unwrap() else {
                panic!("skipped");
            };
            for qi in 0..syn.queries.len() {
                let q = syn.queries.point(qi);
                let truth = brute_force_topk(&syn.data, q, 10).unwrap().0;
                assert_eq!(recall_at_h(&s.search(q, 10).unwrap(), &truth, 10), 1.0, "{}", m.name());
            }
        }
    }

    #[test]
    fn full_reorder_is_exact() {
        let syn = small();
        for m in [
            Method::DensePq { reorder: 800 },
            Method::Hamming {
                bits: 128,
                reorder: 800,
                seed: 1,
            },
            Method::SparseInvertedPruned { top_t: 5, reorder: 800 },
        ] {
            let Built::Ready(s) = m.build(&syn.data, Execution::Parallel).unwrap() else {
                panic!()
            };
            let q = syn.queries.point(0);
            assert_eq!(s.search(q, 10).unwrap(), brute_force_topk(&syn.data, q, 10).unwrap().0);
        }
    }

    #[test]
    fn oom_guard_skips() {
        let syn = small();
        let m = Method::DenseBruteForce { memory_limit: 1000 };
        assert!(matches!(m.build(&syn.data, Execution::Sequential).unwrap(), Built::Skipped(_)));
    }

    #[test]
    fn names() {
        let names: Vec<String> = Method::roster(HybridIndexConfig::default()).iter().map(|m| m.name()).collect();
        assert_eq!(
            names,
            [
                "dense-brute-force",
                "sparse-brute-force",
                "sparse-inverted",
                "sparse-inverted-no-reorder",
                "sparse-inverted-reorder-20k",
                "dense-pq-reorder-10k",
                "hamming-512",
                "hybrid"
            ]
        );
    }
}
