use super::csr::SparseMatrix;
use super::vector::{HybridVector, HybridVectorRef};
use crate::{Error, Result};

/// An immutable collection of hybrid vectors sharing one schema. Sparse parts
/// are stored row-compressed and dense parts as a row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridDataset {
    d_sparse: usize,
    d_dense: usize,
    sparse: SparseMatrix,
    dense: Vec<f32>,
}

impl HybridDataset {
    pub fn empty(d_sparse: usize, d_dense: usize) -> Self {
        Self {
            d_sparse,
            d_dense,
            sparse: SparseMatrix::new(d_sparse),
            dense: Vec::new(),
        }
    }

    pub fn from_parts(sparse: SparseMatrix, d_dense: usize, dense: Vec<f32>) -> Result<Self> {
        let n = sparse.n_rows();
        if dense.len() != n * d_dense {
            return Err(Error::DimensionMismatch {
                expected: n * d_dense,
                found: dense.len(),
            });
        }
        if dense.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dense block"));
        }
        Ok(Self {
            d_sparse: sparse.n_cols(),
            d_dense,
            sparse,
            dense,
        })
    }

    pub fn from_vectors(d_sparse: usize, d_dense: usize, points: &[HybridVector]) -> Result<Self> {
        let mut ds = Self::empty(d_sparse, d_dense);
        for p in points {
            ds.push(p)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, point: &HybridVector) -> Result<()> {
        self.check_schema(point.as_ref())?;
        self.sparse.push_row(&point.sparse)?;
        self.dense.extend_from_slice(&point.dense);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sparse.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn d_sparse(&self) -> usize {
        self.d_sparse
    }

    pub fn d_dense(&self) -> usize {
        self.d_dense
    }

    pub fn point(&self, i: usize) -> HybridVectorRef<'_> {
        HybridVectorRef {
            sparse: self.sparse.row(i),
            dense: self.dense_row(i),
        }
    }

    pub fn points(&self) -> impl Iterator<Item = HybridVectorRef<'_>> {
        (0..self.len()).map(|i| self.point(i))
    }

    pub fn dense_row(&self, i: usize) -> &[f32] {
        &self.dense[i * self.d_dense..(i + 1) * self.d_dense]
    }

    pub fn dense_matrix(&self) -> &[f32] {
        &self.dense
    }

    pub fn sparse_matrix(&self) -> &SparseMatrix {
        &self.sparse
    }

    /// Checks that a query (or point) matches this dataset's schema.
    pub fn check_schema(&self, v: HybridVectorRef<'_>) -> Result<()> {
        if v.dense.len() != self.d_dense {
            return Err(Error::DimensionMismatch {
                expected: self.d_dense,
                found: v.dense.len(),
            });
        }
        if let Some(d) = v.sparse.max_dim() {
            if d as usize >= self.d_sparse {
                return Err(Error::DimensionOutOfRange {
                    dim: d as u64,
                    limit: self.d_sparse as u64,
                });
            }
        }
        Ok(())
    }

    /// Splits off the rows listed in `take` (in that order) from the rest.
    pub fn split(&self, take: &[usize]) -> (HybridDataset, HybridDataset) {
        let mut mask = vec![false; self.len()];
        take.iter().for_each(|&i| mask[i] = true);
        let rest: Vec<usize> = (0..self.len()).filter(|&i| !mask[i]).collect();
        (self.select(take), self.select(&rest))
    }

    pub fn select(&self, rows: &[usize]) -> HybridDataset {
        let mut sparse = SparseMatrix::with_capacity(self.d_sparse, rows.len(), 0);
        let mut dense = Vec::with_capacity(rows.len() * self.d_dense);
        for &i in rows {
            sparse.push_row_unchecked(self.sparse.row(i));
            dense.extend_from_slice(self.dense_row(i));
        }
        HybridDataset {
            d_sparse: self.d_sparse,
            d_dense: self.d_dense,
            sparse,
            dense,
        }
    }

    /// Multiplies sparse values by `sparse_weight` and dense values by
    /// `dense_weight`. Sparse products that underflow to zero are dropped.
    pub fn scaled(&self, sparse_weight: f32, dense_weight: f32) -> HybridDataset {
        if sparse_weight == 1.0 && dense_weight == 1.0 {
            return self.clone();
        }
        let mut sparse = SparseMatrix::with_capacity(self.d_sparse, self.len(), self.sparse.nnz());
        for row in self.sparse.rows() {
            for (j, v) in row.iter() {
                let w = v * sparse_weight;
                if w != 0.0 {
                    sparse.push_entry(j, w);
                }
            }
            sparse.end_row();
        }
        HybridDataset {
            d_sparse: self.d_sparse,
            d_dense: self.d_dense,
            sparse,
            dense: self.dense.iter().map(|v| v * dense_weight).collect(),
        }
    }

    pub fn heap_bytes(&self) -> usize {
        self.sparse.heap_bytes() + self.dense.len() * 4
    }
}
