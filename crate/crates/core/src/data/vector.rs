use crate::{Error, Result};

/// Borrowed view of a sparse vector: parallel arrays of strictly ascending
/// dimension indices and nonzero values.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SparseRef<'a> {
    pub dims: &'a [u32],
    pub values: &'a [f32],
}

impl<'a> SparseRef<'a> {
    pub fn nnz(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f32)> + 'a {
        self.dims.iter().copied().zip(self.values.iter().copied())
    }

    /// Inner product by merge-join over the sorted supports, accumulated in
    /// double precision in ascending dimension order.
    pub fn dot(&self, other: &SparseRef<'_>) -> f64 {
        let (a, b) = (self, other);
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0f64;
        while i < a.dims.len() && j < b.dims.len() {
            match a.dims[i].cmp(&b.dims[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a.values[i] as f64 * b.values[j] as f64;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    pub fn max_dim(&self) -> Option<u32> {
        self.dims.last().copied()
    }

    pub fn to_owned(&self) -> SparseVector {
        SparseVector {
            dims: self.dims.to_vec(),
            values: self.values.to_vec(),
        }
    }
}

/// Owned sparse vector. Dimensions are strictly ascending and no stored
/// value is zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    dims: Vec<u32>,
    values: Vec<f32>,
}

impl SparseVector {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds from already-canonical parts, checking the invariants.
    pub fn from_sorted(dims: Vec<u32>, values: Vec<f32>) -> Result<Self> {
        if dims.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: dims.len(),
                found: values.len(),
            });
        }
        if dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invariant("sparse dims not strictly ascending".into()));
        }
        if values.iter().any(|v| *v == 0.0 || !v.is_finite()) {
            return Err(Error::Invariant("sparse values must be finite and nonzero".into()));
        }
        Ok(Self { dims, values })
    }

    pub fn as_ref(&self) -> SparseRef<'_> {
        SparseRef {
            dims: &self.dims,
            values: &self.values,
        }
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub(crate) fn scale(&mut self, by: f32) {
        if by == 1.0 {
            return;
        }
        self.values.iter_mut().for_each(|v| *v *= by);
        // Underflow to zero would break the no-zero invariant.
        if self.values.contains(&0.0) {
            let (dims, values): (Vec<u32>, Vec<f32>) =
                self.iter().filter(|(_, v)| *v != 0.0).unzip();
            self.dims = dims;
            self.values = values;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f32)> + '_ {
        self.as_ref().iter()
    }
}

/// Canonicalizes a raw coordinate list: sorts by dimension, sums duplicate
/// dimensions, and drops entries that are (or cancel to) zero.
pub fn normalize_sparse<I>(raw: I, d_sparse: u64) -> Result<SparseVector>
where
    I: IntoIterator<Item = (u64, f64)>,
{
    let mut entries: Vec<(u64, f64)> = raw.into_iter().collect();
    if let Some(&(dim, _)) = entries.iter().find(|(d, _)| *d >= d_sparse) {
        return Err(Error::DimensionOutOfRange {
            dim,
            limit: d_sparse,
        });
    }
    if entries.iter().any(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite("sparse entry"));
    }
    entries.sort_by_key(|(d, _)| *d);

    let mut dims = Vec::with_capacity(entries.len());
    let mut values = Vec::with_capacity(entries.len());
    let mut i = 0;
    while i < entries.len() {
        let dim = entries[i].0;
        let mut sum = 0.0f64;
        while i < entries.len() && entries[i].0 == dim {
            sum += entries[i].1;
            i += 1;
        }
        let v = sum as f32;
        if v != 0.0 {
            let dim = u32::try_from(dim).map_err(|_| Error::DimensionOutOfRange {
                dim,
                limit: u32::MAX as u64 + 1,
            })?;
            dims.push(dim);
            values.push(v);
        }
    }
    Ok(SparseVector { dims, values })
}

/// Dense dot product accumulated in double precision, in index order.
pub fn dense_dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |acc, (x, y)| acc + *x as f64 * *y as f64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HybridVectorRef<'a> {
    pub sparse: SparseRef<'a>,
    pub dense: &'a [f32],
}

impl HybridVectorRef<'_> {
    pub fn to_owned(&self) -> HybridVector {
        HybridVector {
            sparse: self.sparse.to_owned(),
            dense: self.dense.to_vec(),
        }
    }
}

/// A sparse part and a dense part addressing separate dimension spaces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HybridVector {
    pub sparse: SparseVector,
    pub dense: Vec<f32>,
}

impl HybridVector {
    pub fn new(sparse: SparseVector, dense: Vec<f32>) -> Self {
        Self { sparse, dense }
    }

    pub fn as_ref(&self) -> HybridVectorRef<'_> {
        HybridVectorRef {
            sparse: self.sparse.as_ref(),
            dense: &self.dense,
        }
    }

    /// Scales the sparse and dense parts independently.
    pub fn scaled(&self, sparse_weight: f32, dense_weight: f32) -> HybridVector {
        let mut out = self.clone();
        out.sparse.scale(sparse_weight);
        if dense_weight != 1.0 {
            out.dense.iter_mut().for_each(|v| *v *= dense_weight);
        }
        out
    }
}

/// Exact hybrid inner product `q.sparse · x.sparse + q.dense · x.dense`,
/// each term accumulated in double precision.
pub fn hybrid_dot(q: HybridVectorRef<'_>, x: HybridVectorRef<'_>) -> Result<f64> {
    if q.dense.len() != x.dense.len() {
        return Err(Error::DimensionMismatch {
            expected: x.dense.len(),
            found: q.dense.len(),
        });
    }
    Ok(q.sparse.dot(&x.sparse) + dense_dot(q.dense, x.dense))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn sv(raw: &[(u64, f64)]) -> SparseVector {
        normalize_sparse(raw.iter().copied(), 100).unwrap()
    }

    #[test]
    fn normalize_sorts() {
        let v = sv(&[(3, 1.0), (1, 2.0)]);
        assert_eq!(v.dims(), &[1, 3]);
        assert_eq!(v.values(), &[2.0, 1.0]);
    }

    #[test]
    fn normalize_drops_cancellation_and_zeros() {
        assert!(sv(&[(2, 1.0), (2, -1.0)]).is_empty());
        assert!(sv(&[(5, 0.0)]).is_empty());
    }

    #[test]
    fn normalize_rejects_out_of_range() {
        let err = normalize_sparse([(10u64, 1.0f64)], 10).unwrap_err();
        assert!(matches!(err, Error::DimensionOutOfRange { dim: 10, limit: 10 }));
    }

    #[test]
    fn dot_example() {
        let q = HybridVector::new(sv(&[(2, 1.0)]), vec![1.0, 2.0]);
        let x = HybridVector::new(sv(&[(2, 0.5)]), vec![3.0, -1.0]);
        assert_eq!(hybrid_dot(q.as_ref(), x.as_ref()).unwrap(), 1.5);
    }

    #[test]
    fn zero_query_scores_zero() {
        let q = HybridVector::new(SparseVector::empty(), vec![0.0; 3]);
        let x = HybridVector::new(sv(&[(1, 4.0), (7, -2.0)]), vec![1.0, -5.0, 2.5]);
        assert_eq!(hybrid_dot(q.as_ref(), x.as_ref()).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_support_is_dense_only() {
        let q = HybridVector::new(sv(&[(1, 3.0)]), vec![1.0, 2.0]);
        let x = HybridVector::new(sv(&[(4, 9.0)]), vec![0.5, 0.25]);
        assert_eq!(hybrid_dot(q.as_ref(), x.as_ref()).unwrap(), 1.0);
    }

    #[test]
    fn dense_length_mismatch() {
        let q = HybridVector::new(SparseVector::empty(), vec![1.0]);
        let x = HybridVector::new(SparseVector::empty(), vec![1.0, 2.0]);
        assert!(matches!(
            hybrid_dot(q.as_ref(), x.as_ref()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn raw_entries() -> impl Strategy<Value = Vec<(u64, f64)>> {
        prop::collection::vec((0u64..40, -4i32..=4).prop_map(|(d, v)| (d, v as f64 * 0.5)), 0..30)
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(raw in raw_entries()) {
            let once = normalize_sparse(raw, 40).unwrap();
            let twice = normalize_sparse(
                once.iter().map(|(d, v)| (d as u64, v as f64)), 40).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn dot_matches_padded_dense(
            a in raw_entries(),
            b in raw_entries(),
            qd in prop::collection::vec(-3i32..=3, 4),
            xd in prop::collection::vec(-3i32..=3, 4),
        ) {
            let d = 40usize;
            let q = HybridVector::new(normalize_sparse(a, d as u64).unwrap(),
                qd.iter().map(|&v| v as f32).collect());
            let x = HybridVector::new(normalize_sparse(b, d as u64).unwrap(),
                xd.iter().map(|&v| v as f32).collect());
            let pad = |v: &HybridVector| {
                let mut full = vec![0.0f64; d + 4];
                for (j, val) in v.sparse.iter() { full[j as usize] = val as f64; }
                for (k, val) in v.dense.iter().enumerate() { full[d + k] = *val as f64; }
                full
            };
            let naive: f64 = pad(&q).iter().zip(pad(&x)).map(|(a, b)| a * b).sum();
            let fast = hybrid_dot(q.as_ref(), x.as_ref()).unwrap();
            prop_assert!((naive - fast).abs() <= 1e-9 * (1.0 + naive.abs()));
        }
    }
}
