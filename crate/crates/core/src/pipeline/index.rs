//! Hybrid index build and three-stage search.
//!
//! Composite file layout (little-endian): magic "HYBI" | version u32 |
//! section count u32 | table of (tag [u8; 4], offset u64, length u64) |
//! section bodies. Sections: `CONF` build configuration, `HSIX` sparse data
//! index, `SRES` sparse residual rows (a `HYBX` blob in storage order),
//! optional `HDPQ` dense index, optional `EXAC` raw weighted dataset.

use std::io::{Read, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use super::config::{HybridIndexConfig, PruneSpec};
use super::topk::top_k_by;
use crate::data::{hybrid_dot, read_dataset, write_dataset, HybridDataset, HybridVectorRef, SparseMatrix};
use crate::dense::{build_dense_index, DenseIndex, DenseIndexConfig};
use crate::par::{self, Execution};
use crate::sparse::{
    build_inverted, cache_sort, prune_split, sparse_scan, Accumulator, InvertedIndex, PruneThresholds,
};
use crate::wire::{Reader, Writer};
use crate::{Error, Result};

pub const INDEX_MAGIC: [u8; 4] = *b"HYBI";
pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageStats {
    /// Candidates leaving stages 1, 2 and 3.
    pub candidates: [usize; 3],
    pub times: [Duration; 3],
}

impl StageStats {
    pub fn total(&self) -> Duration {
        self.times.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Original datapoint ids, best first.
    pub ids: Vec<u32>,
    pub scores: Vec<f64>,
    pub stats: StageStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildStats {
    pub data_nnz: usize,
    pub residual_nnz: usize,
    pub discarded_nnz: usize,
    pub build_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridIndex {
    config: HybridIndexConfig,
    d_dense: usize,
    sparse: InvertedIndex,
    /// Storage order.
    sparse_residual: SparseMatrix,
    /// Storage order.
    dense: Option<DenseIndex>,
    /// Original order, weights applied.
    exact: Option<HybridDataset>,
    build_stats: BuildStats,
}

/// Per-query buffers reused across searches.
#[derive(Debug, Default)]
pub struct SearchScratch {
    acc: Option<Accumulator<f32>>,
}

pub fn build_index(data: &HybridDataset, cfg: &HybridIndexConfig, exec: Execution) -> Result<HybridIndex> {
    cfg.validate()?;
    let start = Instant::now();
    let weighted = data.scaled(cfg.sparse_weight, cfg.dense_weight);
    let x = weighted.sparse_matrix();
    let thresholds = match &cfg.prune {
        PruneSpec::TopT { top_t, epsilon } => PruneThresholds::from_top_t(x, *top_t, *epsilon)?,
        PruneSpec::Thresholds(t) => {
            if t.d_sparse() != x.n_cols() {
                return Err(Error::DimensionMismatch {
                    expected: x.n_cols(),
                    found: t.d_sparse(),
                });
            }
            t.clone()
        }
        PruneSpec::KeepAll => PruneThresholds::keep_all(x.n_cols()),
    };
    let split = prune_split(x, &thresholds)?;
    let perm = cache_sort(&split.data, exec);
    let sparse = build_inverted(&split.data, &perm)?;
    let sparse_residual = split.residual.permute_rows(perm.order());
    let dense = if weighted.d_dense() > 0 && !weighted.is_empty() {
        let d = build_dense_index(weighted.dense_matrix(), weighted.d_dense(), &cfg.dense, exec)?;
        Some(d.permute(perm.order()))
    } else {
        None
    };
    let build_stats = BuildStats {
        data_nnz: split.data.nnz(),
        residual_nnz: split.residual.nnz(),
        discarded_nnz: split.discarded.nnz(),
        build_time: start.elapsed(),
    };
    Ok(HybridIndex {
        config: cfg.clone(),
        d_dense: weighted.d_dense(),
        sparse,
        sparse_residual,
        dense,
        exact: cfg.exact_final_rerank.then_some(weighted),
        build_stats,
    })
}

impl HybridIndex {
    pub fn len(&self) -> usize {
        self.sparse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sparse.is_empty()
    }

    pub fn d_sparse(&self) -> usize {
        self.sparse.d_sparse()
    }

    pub fn d_dense(&self) -> usize {
        self.d_dense
    }

    pub fn config(&self) -> &HybridIndexConfig {
        &self.config
    }

    /// Overrides the query-time factors. Build-time fields are left alone.
    pub fn set_fetch_factors(&mut self, alpha: f64, beta: f64) -> Result<()> {
        let mut cfg = self.config.clone();
        cfg.alpha = alpha;
        cfg.beta = beta;
        cfg.validate()?;
        self.config = cfg;
        Ok(())
    }

    pub fn sparse_index(&self) -> &InvertedIndex {
        &self.sparse
    }

    pub fn sparse_residual(&self) -> &SparseMatrix {
        &self.sparse_residual
    }

    pub fn dense_index(&self) -> Option<&DenseIndex> {
        self.dense.as_ref()
    }

    pub fn build_stats(&self) -> &BuildStats {
        &self.build_stats
    }

    pub fn heap_bytes(&self) -> usize {
        self.sparse.heap_bytes()
            + self.sparse_residual.heap_bytes()
            + self.dense.as_ref().map_or(0, |d| d.heap_bytes())
            + self.exact.as_ref().map_or(0, |d| d.heap_bytes())
    }

    fn check_query(&self, q: HybridVectorRef<'_>) -> Result<()> {
        if q.dense.len() != self.d_dense {
            return Err(Error::DimensionMismatch {
                expected: self.d_dense,
                found: q.dense.len(),
            });
        }
        if let Some(d) = q.sparse.max_dim() {
            if d as usize >= self.d_sparse() {
                return Err(Error::DimensionOutOfRange {
                    dim: d as u64,
                    limit: self.d_sparse() as u64,
                });
            }
        }
        Ok(())
    }

    /// Stage-1 approximate scores for every point, in storage order.
    pub fn stage1_scores(&self, q: HybridVectorRef<'_>) -> Result<Vec<f32>> {
        let mut scratch = SearchScratch::default();
        self.check_query(q)?;
        self.stage1(q, &mut scratch)?;
        Ok(scratch.acc.unwrap().into_scores())
    }

    fn stage1(&self, q: HybridVectorRef<'_>, scratch: &mut SearchScratch) -> Result<Option<crate::dense::DenseQuery>> {
        let n = self.len();
        let acc = scratch.acc.get_or_insert_with(|| Accumulator::new(n));
        if acc.scores().len() != n {
            *acc = Accumulator::new(n);
        }
        let dq = match &self.dense {
            Some(dense) => {
                let dq = dense.prepare(q.dense)?;
                dense.scan(&dq, acc.scores_mut())?;
                Some(dq)
            }
            None => {
                acc.reset();
                None
            }
        };
        sparse_scan(&self.sparse, q.sparse, acc)?;
        Ok(dq)
    }

    pub fn search(&self, q: HybridVectorRef<'_>, h: usize) -> Result<SearchResult> {
        self.search_with(q, h, &mut SearchScratch::default())
    }

    pub fn search_with(&self, q: HybridVectorRef<'_>, h: usize, scratch: &mut SearchScratch) -> Result<SearchResult> {
        if h == 0 {
            return Err(Error::config("h must be at least 1"));
        }
        self.check_query(q)?;
        let n = self.len();
        let (n_alpha, n_beta) = self.config.fetch_sizes(h, n);
        let perm = self.sparse.permutation();
        let mut stats = StageStats::default();

        let t = Instant::now();
        let dq = self.stage1(q, scratch)?;
        let scores = scratch.acc.as_ref().unwrap().scores();
        let cand = top_k_by(n, n_alpha, |p| (scores[p] as f64, perm.to_original(p)));
        stats.candidates[0] = cand.len();
        stats.times[0] = t.elapsed();

        let t = Instant::now();
        let s2: Vec<f64> = match (&self.dense, &dq) {
            (Some(dense), Some(dq)) => cand.iter().map(|&p| scores[p] as f64 + dense.residual_dot(dq, p)).collect(),
            _ => cand.iter().map(|&p| scores[p] as f64).collect(),
        };
        let keep = top_k_by(cand.len(), n_beta, |c| (s2[c], perm.to_original(cand[c])));
        stats.candidates[1] = keep.len();
        stats.times[1] = t.elapsed();

        let t = Instant::now();
        let mut s3 = Vec::with_capacity(keep.len());
        for &c in &keep {
            let p = cand[c];
            let s = match &self.exact {
                Some(ds) => hybrid_dot(q, ds.point(perm.to_original(p) as usize))?,
                None => s2[c] + q.sparse.dot(&self.sparse_residual.row(p)),
            };
            s3.push(s);
        }
        let fin = top_k_by(keep.len(), h, |k| (s3[k], perm.to_original(cand[keep[k]])));
        stats.candidates[2] = fin.len();
        stats.times[2] = t.elapsed();

        Ok(SearchResult {
            ids: fin.iter().map(|&k| perm.to_original(cand[keep[k]])).collect(),
            scores: fin.iter().map(|&k| s3[k]).collect(),
            stats,
        })
    }

    /// Searches every row of `queries`; results are in query order.
    pub fn search_batch(&self, queries: &HybridDataset, h: usize, exec: Execution) -> Result<Vec<SearchResult>> {
        par::map_range_init(queries.len(), exec, SearchScratch::default, |s, i| {
            self.search_with(queries.point(i), h, s)
        })
        .into_iter()
        .collect()
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut sections: Vec<([u8; 4], Vec<u8>)> = Vec::new();
        sections.push((*b"CONF", encode_config(&self.config, self.d_dense)?));
        let mut buf = Vec::new();
        self.sparse.write_to(&mut buf)?;
        sections.push((*b"HSIX", buf));
        let mut buf = Vec::new();
        let resid = HybridDataset::from_parts(self.sparse_residual.clone(), 0, Vec::new())?;
        write_dataset(&mut buf, &resid)?;
        sections.push((*b"SRES", buf));
        if let Some(d) = &self.dense {
            let mut buf = Vec::new();
            d.write_to(&mut buf)?;
            sections.push((*b"HDPQ", buf));
        }
        if let Some(ds) = &self.exact {
            let mut buf = Vec::new();
            write_dataset(&mut buf, ds)?;
            sections.push((*b"EXAC", buf));
        }
        let mut w = Writer::new(w);
        w.raw(&INDEX_MAGIC)?;
        w.u32(INDEX_VERSION)?;
        w.u32(sections.len() as u32)?;
        let mut offset = 12 + 20 * sections.len() as u64;
        for (tag, body) in &sections {
            w.raw(tag)?;
            w.u64(offset)?;
            w.u64(body.len() as u64)?;
            offset += body.len() as u64;
        }
        for (_, body) in &sections {
            w.raw(body)?;
        }
        w.into_inner().flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut hdr = Reader::new(bytes.as_slice(), "HYBI");
        hdr.magic(INDEX_MAGIC)?;
        hdr.version(INDEX_VERSION)?;
        let count = hdr.u32()? as usize;
        if count > 16 {
            return Err(hdr.corrupt(format!("{count} sections")));
        }
        let mut table = Vec::with_capacity(count);
        for _ in 0..count {
            let tag = hdr.bytes(4)?;
            let off = hdr.u64()? as usize;
            let len = hdr.u64()? as usize;
            table.push((tag, off, len));
        }
        let corrupt = |reason: String| Error::Corrupt { format: "HYBI", reason };
        let mut expected = 12 + 20 * count;
        let mut slices: Vec<([u8; 4], &[u8])> = Vec::with_capacity(count);
        for (tag, off, len) in table {
            let end = off
                .checked_add(len)
                .filter(|&e| e <= bytes.len())
                .ok_or(Error::Truncated("HYBI"))?;
            let tag: [u8; 4] = tag.try_into().unwrap();
            if slices.iter().any(|(t, _)| *t == tag) {
                return Err(corrupt(format!("duplicate section {}", String::from_utf8_lossy(&tag))));
            }
            expected += len;
            slices.push((tag, &bytes[off..end]));
        }
        let section = |name: &[u8; 4]| slices.iter().find(|(t, _)| t == name).map(|(_, s)| *s);
        let need = |name: &[u8; 4]| {
            section(name).ok_or_else(|| corrupt(format!("missing {} section", String::from_utf8_lossy(name))))
        };
        let (config, d_dense) = decode_config(need(b"CONF")?)?;
        let sparse = InvertedIndex::read_from(need(b"HSIX")?)?;
        let sparse_residual = read_dataset(need(b"SRES")?)?.sparse_matrix().clone();
        let dense = section(b"HDPQ").map(DenseIndex::read_from).transpose()?;
        let exact = section(b"EXAC").map(read_dataset).transpose()?;
        if expected != bytes.len() {
            return Err(corrupt("unreferenced bytes in file".into()));
        }
        let n = sparse.len();
        if sparse_residual.n_rows() != n
            || sparse_residual.n_cols() != sparse.d_sparse()
            || dense.as_ref().is_some_and(|d| d.len() != n || d.dim() != d_dense)
            || exact.as_ref().is_some_and(|e| e.len() != n || e.d_dense() != d_dense || e.d_sparse() != sparse.d_sparse())
            || (dense.is_none() && d_dense > 0 && n > 0)
            || config.exact_final_rerank != exact.is_some()
        {
            return Err(corrupt("sections disagree on shape".into()));
        }
        Ok(HybridIndex {
            config,
            d_dense,
            sparse,
            sparse_residual,
            dense,
            exact,
            build_stats: BuildStats {
                data_nnz: 0,
                residual_nnz: 0,
                discarded_nnz: 0,
                build_time: Duration::ZERO,
            },
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        let mut idx = Self::read_from(std::io::BufReader::new(f))?;
        idx.build_stats.data_nnz = idx.sparse.nnz();
        idx.build_stats.residual_nnz = idx.sparse_residual.nnz();
        Ok(idx)
    }

    /// Equality of everything that affects search results.
    pub fn same_contents(&self, other: &HybridIndex) -> bool {
        self.config == other.config
            && self.d_dense == other.d_dense
            && self.sparse == other.sparse
            && self.sparse_residual == other.sparse_residual
            && self.dense == other.dense
            && self.exact == other.exact
    }
}

fn encode_config(c: &HybridIndexConfig, d_dense: usize) -> Result<Vec<u8>> {
    let mut w = Writer::new(Vec::new());
    w.u64(d_dense as u64)?;
    w.f64(c.alpha)?;
    w.f64(c.beta)?;
    w.u8(c.exact_final_rerank as u8)?;
    w.f32(c.sparse_weight)?;
    w.f32(c.dense_weight)?;
    match &c.prune {
        PruneSpec::TopT { top_t, epsilon } => {
            w.u8(0)?;
            w.u64(*top_t as u64)?;
            w.f32(*epsilon)?;
        }
        PruneSpec::Thresholds(t) => {
            w.u8(1)?;
            w.u64(t.d_sparse() as u64)?;
            w.f32s(t.eta())?;
            w.f32s(t.epsilon())?;
        }
        PruneSpec::KeepAll => w.u8(2)?,
    }
    let d = &c.dense;
    w.u64(d.subspace_width as u64)?;
    w.u64(d.l as u64)?;
    w.u64(d.kmeans_iters as u64)?;
    w.u8(d.whitening as u8)?;
    w.u8(d.residual as u8)?;
    w.u64(d.train_sample as u64)?;
    w.u64(d.seed)?;
    Ok(w.into_inner())
}

fn decode_config(bytes: &[u8]) -> Result<(HybridIndexConfig, usize)> {
    let mut r = Reader::new(bytes, "HYBI");
    let d_dense = r.len("dense dimensionality")?;
    let alpha = r.f64()?;
    let beta = r.f64()?;
    let exact_final_rerank = r.u8()? != 0;
    let sparse_weight = r.f32()?;
    let dense_weight = r.f32()?;
    let prune = match r.u8()? {
        0 => PruneSpec::TopT {
            top_t: r.len("top_t")?,
            epsilon: r.f32()?,
        },
        1 => {
            let d = r.len("threshold count")?;
            let eta = r.f32_vec(d)?;
            let eps = r.f32_vec(d)?;
            PruneSpec::Thresholds(PruneThresholds::new(eta, eps).map_err(|e| r.corrupt(e.to_string()))?)
        }
        2 => PruneSpec::KeepAll,
        t => return Err(r.corrupt(format!("prune tag {t}"))),
    };
    let dense = DenseIndexConfig {
        subspace_width: r.len("subspace width")?,
        l: r.len("codebook size")?,
        kmeans_iters: r.len("iterations")?,
        whitening: r.u8()? != 0,
        residual: r.u8()? != 0,
        train_sample: r.len("training sample")?,
        seed: r.u64()?,
    };
    r.finish()?;
    let cfg = HybridIndexConfig {
        alpha,
        beta,
        prune,
        dense,
        exact_final_rerank,
        sparse_weight,
        dense_weight,
    };
    cfg.validate().map_err(|e| Error::Corrupt {
        format: "HYBI",
        reason: e.to_string(),
    })?;
    Ok((cfg, d_dense))
}
