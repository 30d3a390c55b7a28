//! Pruned, cache-sorted inverted index over the sparse component, and the
//! accumulator cache-line cost model used to evaluate the layout.

mod cache_sort;
mod cost;
mod inverted;
mod prune;

pub use cache_sort::{cache_sort, dimension_ranking, Permutation};
pub use cost::{
    chernoff_prune_bound, dim_line_counts, expected_cachelines_sorted_bound,
    expected_cachelines_unsorted, measure_cachelines, CostModelParams,
};
pub use inverted::{
    build_inverted, sparse_scan, Accumulator, InvertedIndex, Score, SPARSE_INDEX_MAGIC,
    SPARSE_INDEX_VERSION,
};
pub use prune::{prune_split, PruneSplit, PruneThresholds};

/// Accumulator slots per 64-byte cache-line with 32-bit accumulators.
pub const DEFAULT_LINE_CAPACITY: usize = 16;
