//! Index build and the overfetch / residual-reorder search.
//!
//! Stage 1 scores every point with the pruned sparse index plus the LUT16
//! dense scan and keeps `ceil(alpha·h)` candidates. Stage 2 adds the
//! scalar-quantized dense residual and keeps `ceil(beta·h)`. Stage 3 adds the
//! sparse residual (or rescoring exactly) and returns `h`.

mod config;
mod gap;
mod index;
mod topk;

pub use config::{HybridIndexConfig, PruneSpec};
pub use gap::{gap_recall_check, GapReport};
pub use index::{
    build_index, BuildStats, HybridIndex, SearchResult, SearchScratch, StageStats, INDEX_MAGIC,
    INDEX_VERSION,
};
pub use topk::select_topk;
pub(crate) use topk::top_k_by;
