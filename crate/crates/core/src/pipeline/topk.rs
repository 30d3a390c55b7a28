//! Exact top-k selection with a deterministic tie rule.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Clone, Copy, Debug)]
struct Entry {
    score: f64,
    id: u32,
    slot: u32,
}

impl Entry {
    /// `Less` means `self` ranks ahead of `other`.
    #[inline]
    fn rank_cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then(self.id.cmp(&other.id))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.rank_cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // The heap's maximum is the worst-ranked entry.
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank_cmp(other)
    }
}

/// Selects the `k` best of `n` items, where `key(i)` gives `(score, id)`.
/// Higher scores win and equal scores go to the lower id. Returns item
/// indices best first.
pub(crate) fn top_k_by<F>(n: usize, k: usize, key: F) -> Vec<usize>
where
    F: Fn(usize) -> (f64, u32),
{
    let k = k.min(n);
    if k == 0 {
        return Vec::new();
    }
    let mut heap = BinaryHeap::with_capacity(k + 1);
    for i in 0..n {
        let (score, id) = key(i);
        let e = Entry {
            score,
            id,
            slot: i as u32,
        };
        if heap.len() < k {
            heap.push(e);
        } else if e.rank_cmp(heap.peek().unwrap()) == Ordering::Less {
            heap.pop();
            heap.push(e);
        }
    }
    let mut out = heap.into_vec();
    out.sort_unstable_by(Entry::rank_cmp);
    out.into_iter().map(|e| e.slot as usize).collect()
}

/// Indices of the `k` largest scores, best first; ties go to the lower index.
pub fn select_topk(scores: &[f64], k: usize) -> Vec<usize> {
    top_k_by(scores.len(), k, |i| (scores[i], i as u32))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn oracle(scores: &[f64], k: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..scores.len()).collect();
        ids.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        ids.truncate(k);
        ids
    }

    #[test]
    fn k_at_least_len_sorts_all() {
        let s = [0.5, 2.0, -1.0, 2.0];
        assert_eq!(select_topk(&s, 10), vec![1, 3, 0, 2]);
    }

    #[test]
    fn all_equal_gives_lowest_ids() {
        assert_eq!(select_topk(&[1.0; 50], 5), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn zero_k_and_empty() {
        assert!(select_topk(&[1.0], 0).is_empty());
        assert!(select_topk(&[], 3).is_empty());
    }

    #[test]
    fn ids_decide_ties_not_slots() {
        let ids = [9u32, 3, 5];
        let got = top_k_by(3, 2, |i| (1.0, ids[i]));
        assert_eq!(got, vec![1, 2]);
    }

    proptest! {
        #[test]
        fn matches_full_sort(v in prop::collection::vec(-5i32..5, 0..200), k in 0usize..250) {
            let scores: Vec<f64> = v.iter().map(|&x| x as f64 * 0.5).collect();
            prop_assert_eq!(select_topk(&scores, k), oracle(&scores, k));
        }
    }
}
