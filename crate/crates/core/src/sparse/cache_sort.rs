//! Cache sorting: orders datapoints by their activity indicators over the
//! dimensions ranked from most to least active, in decreasing lexicographic
//! order, so that each popular posting list becomes a few contiguous runs.

use std::cmp::Ordering;

use crate::data::SparseMatrix;
use crate::par::{self, Execution};
use crate::{Error, Result};

/// A bijection between original datapoint ids and storage positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    order: Vec<u32>,
    position: Vec<u32>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        let order: Vec<u32> = (0..n as u32).collect();
        Self {
            position: order.clone(),
            order,
        }
    }

    /// `order[p]` is the original id stored at position `p`.
    pub fn from_order(order: Vec<u32>) -> Result<Self> {
        let n = order.len();
        let mut position = vec![u32::MAX; n];
        for (p, &i) in order.iter().enumerate() {
            let slot = position
                .get_mut(i as usize)
                .ok_or_else(|| Error::Invariant(format!("permutation entry {i} >= {n}")))?;
            if *slot != u32::MAX {
                return Err(Error::Invariant(format!("permutation repeats {i}")));
            }
            *slot = p as u32;
        }
        Ok(Self { order, position })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Storage position → original id.
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    /// Original id → storage position.
    pub fn positions(&self) -> &[u32] {
        &self.position
    }

    #[inline]
    pub fn to_original(&self, pos: usize) -> u32 {
        self.order[pos]
    }

    #[inline]
    pub fn to_position(&self, id: usize) -> u32 {
        self.position[id]
    }
}

/// Dimensions with at least one nonzero, most active first; ties go to the
/// lower dimension index.
pub fn dimension_ranking(x: &SparseMatrix) -> Vec<u32> {
    let counts = x.column_counts();
    let mut dims: Vec<u32> = (0..counts.len() as u32)
        .filter(|&j| counts[j as usize] > 0)
        .collect();
    dims.sort_by(|&a, &b| counts[b as usize].cmp(&counts[a as usize]).then(a.cmp(&b)));
    dims
}

const KEY_BITS: usize = 64;

/// Computes the cache-sort permutation of `x`'s rows.
///
/// Each row's indicator prefix over the 64 most active dimensions is packed
/// into a `u64` key and sorted descending; rows sharing a key are ordered by
/// their remaining active ranks, and full ties keep their original order.
pub fn cache_sort(x: &SparseMatrix, exec: Execution) -> Permutation {
    let n = x.n_rows();
    let ranking = dimension_ranking(x);
    let mut rank_of = vec![u32::MAX; x.n_cols()];
    for (r, &j) in ranking.iter().enumerate() {
        rank_of[j as usize] = r as u32;
    }

    let mut keys = vec![0u64; n];
    let mut tail_offsets = Vec::with_capacity(n + 1);
    tail_offsets.push(0usize);
    let mut tails: Vec<u32> = Vec::new();
    let mut scratch: Vec<u32> = Vec::new();
    for (i, row) in x.rows().enumerate() {
        scratch.clear();
        scratch.extend(row.dims.iter().map(|&j| rank_of[j as usize]));
        scratch.sort_unstable();
        let mut key = 0u64;
        for &r in &scratch {
            if (r as usize) < KEY_BITS {
                key |= 1u64 << (KEY_BITS - 1 - r as usize);
            } else {
                tails.push(r);
            }
        }
        keys[i] = key;
        tail_offsets.push(tails.len());
    }
    let tail = |i: usize| &tails[tail_offsets[i]..tail_offsets[i + 1]];

    let mut order: Vec<u32> = (0..n as u32).collect();
    par::sort_by(&mut order, exec, |&a, &b| {
        let (a, b) = (a as usize, b as usize);
        keys[b]
            .cmp(&keys[a])
            .then_with(|| cmp_rank_lists(tail(a), tail(b)))
            .then(a.cmp(&b))
    });
    Permutation::from_order(order).expect("sorted ids form a permutation")
}

/// Decreasing-lexicographic order of indicator vectors expressed on sorted
/// rank lists: the first rank present in only one list puts that list first,
/// and a strict prefix sorts after its extension.
fn cmp_rank_lists(a: &[u32], b: &[u32]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    b.len().cmp(&a.len())
}
