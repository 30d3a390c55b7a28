//! Exact oracles, baseline methods, benchmarks, ratings ingestion, and
//! Monte-Carlo verification of the accuracy bounds.

pub mod baselines;
mod bench;
mod oracle;
mod ratings;
mod verify;

pub use baselines::{AugmentedInverted, Built, Method, Searcher};
pub use bench::{run_benchmark, BenchOptions, BenchReport, BenchRow, CSV_HEADER};
pub use oracle::{brute_force_batch, brute_force_topk, recall_at_h};
pub use ratings::{randomized_svd, read_ratings, svd_embed, Embedding, RatingsMatrix, SvdOptions, TruncatedSvd};
pub use verify::{verify_bounds, BoundReport, Suite, VerifyParams};
