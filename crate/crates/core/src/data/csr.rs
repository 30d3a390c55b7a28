use super::vector::{SparseRef, SparseVector};
use crate::{Error, Result};

/// Row-compressed sparse matrix; each row is a canonical sparse vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_cols: usize,
    offsets: Vec<usize>,
    dims: Vec<u32>,
    values: Vec<f32>,
}

impl SparseMatrix {
    pub fn new(n_cols: usize) -> Self {
        Self {
            n_cols,
            offsets: vec![0],
            dims: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn with_capacity(n_cols: usize, rows: usize, nnz: usize) -> Self {
        let mut offsets = Vec::with_capacity(rows + 1);
        offsets.push(0);
        Self {
            n_cols,
            offsets,
            dims: Vec::with_capacity(nnz),
            values: Vec::with_capacity(nnz),
        }
    }

    /// Builds from CSR arrays, validating every row.
    pub fn from_csr(
        n_cols: usize,
        offsets: Vec<usize>,
        dims: Vec<u32>,
        values: Vec<f32>,
    ) -> Result<Self> {
        let bad = |r: &str| Error::Invariant(format!("csr: {r}"));
        if offsets.first() != Some(&0) {
            return Err(bad("offsets must start at 0"));
        }
        if offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(bad("offsets not monotone"));
        }
        if *offsets.last().unwrap() != dims.len() || dims.len() != values.len() {
            return Err(bad("offset/nnz length mismatch"));
        }
        let m = Self {
            n_cols,
            offsets,
            dims,
            values,
        };
        for i in 0..m.n_rows() {
            let row = m.row(i);
            if row.dims.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad("row dims not strictly ascending"));
            }
            if let Some(d) = row.max_dim() {
                if d as usize >= n_cols {
                    return Err(Error::DimensionOutOfRange {
                        dim: d as u64,
                        limit: n_cols as u64,
                    });
                }
            }
            if row.values.iter().any(|v| *v == 0.0 || !v.is_finite()) {
                return Err(bad("stored values must be finite and nonzero"));
            }
        }
        Ok(m)
    }

    pub fn n_rows(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.dims.len()
    }

    pub fn row(&self, i: usize) -> SparseRef<'_> {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        SparseRef {
            dims: &self.dims[a..b],
            values: &self.values[a..b],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = SparseRef<'_>> {
        (0..self.n_rows()).map(|i| self.row(i))
    }

    /// Appends a row; the caller guarantees canonical order.
    pub(crate) fn push_row_unchecked(&mut self, row: SparseRef<'_>) {
        self.dims.extend_from_slice(row.dims);
        self.values.extend_from_slice(row.values);
        self.offsets.push(self.dims.len());
    }

    pub(crate) fn push_entry(&mut self, dim: u32, value: f32) {
        self.dims.push(dim);
        self.values.push(value);
    }

    pub(crate) fn end_row(&mut self) {
        self.offsets.push(self.dims.len());
    }

    pub fn push_row(&mut self, row: &SparseVector) -> Result<()> {
        if let Some(d) = row.as_ref().max_dim() {
            if d as usize >= self.n_cols {
                return Err(Error::DimensionOutOfRange {
                    dim: d as u64,
                    limit: self.n_cols as u64,
                });
            }
        }
        self.push_row_unchecked(row.as_ref());
        Ok(())
    }

    /// Number of nonzeros in every column.
    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_cols];
        for &d in &self.dims {
            counts[d as usize] += 1;
        }
        counts
    }

    /// Rows reordered so that output row `p` is input row `order[p]`.
    pub fn permute_rows(&self, order: &[u32]) -> SparseMatrix {
        let mut out = SparseMatrix::with_capacity(self.n_cols, order.len(), self.nnz());
        for &i in order {
            out.push_row_unchecked(self.row(i as usize));
        }
        out
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub(crate) fn raw_dims(&self) -> &[u32] {
        &self.dims
    }

    pub(crate) fn raw_values(&self) -> &[f32] {
        &self.values
    }

    pub fn heap_bytes(&self) -> usize {
        self.offsets.len() * std::mem::size_of::<usize>() + self.dims.len() * 4 + self.values.len() * 4
    }
}
