//! Exact ground truth and recall.

use crate::data::{hybrid_dot, HybridDataset, HybridVectorRef};
use crate::par::{self, Execution};
use crate::pipeline::top_k_by;
use crate::Result;

/// Exact top-`h` ids and scores by `hybrid_dot` over every point; equal
/// scores go to the lower id.
pub fn brute_force_topk(data: &HybridDataset, q: HybridVectorRef<'_>, h: usize) -> Result<(Vec<u32>, Vec<f64>)> {
    data.check_schema(q)?;
    let scores: Vec<f64> = (0..data.len())
        .map(|i| hybrid_dot(q, data.point(i)))
        .collect::<Result<_>>()?;
    let top = top_k_by(scores.len(), h, |i| (scores[i], i as u32));
    Ok((top.iter().map(|&i| i as u32).collect(), top.iter().map(|&i| scores[i]).collect()))
}

/// Ground-truth ids for every query row.
pub fn brute_force_batch(
    data: &HybridDataset,
    queries: &HybridDataset,
    h: usize,
    exec: Execution,
) -> Result<Vec<Vec<u32>>> {
    par::map_range(queries.len(), exec, |i| brute_force_topk(data, queries.point(i), h).map(|r| r.0))
        .into_iter()
        .collect()
}

/// `|returned ∩ truth[..h]| / h`. Only the first `h` returned ids count.
pub fn recall_at_h(returned: &[u32], truth: &[u32], h: usize) -> f64 {
    if h == 0 {
        return 1.0;
    }
    let truth = &truth[..truth.len().min(h)];
    let hits = returned[..returned.len().min(h)]
        .iter()
        .filter(|id| truth.contains(id))
        .count();
    hits as f64 / h as f64
}
