//! Approximate maximum inner product search over hybrid sparse + dense vectors.
//!
//! A hybrid vector is a high-dimensional sparse part concatenated with a
//! low-dimensional dense part, and its inner product with a query decomposes
//! into a sparse and a dense term. This crate approximates each term with a
//! structure suited to it:
//!
//! - [`sparse`]: a pruned inverted index whose datapoint ids are permuted by
//!   cache sorting so that posting lists touch few accumulator cache-lines.
//! - [`dense`]: product quantization with 16-entry lookup tables quantized to
//!   8 bits (LUT16), scanned with 16-bit lane accumulation.
//! - [`pipeline`]: overfetch from both indices, then reorder the survivors
//!   with a scalar-quantized dense residual and a sparse residual.
//!
//! [`eval`] holds the exact oracles, the baseline methods, and Monte-Carlo
//! checks of the accuracy bounds.

pub mod data;
pub mod dense;
pub mod eval;
pub mod par;
pub mod pipeline;
pub mod sparse;

mod error;
pub(crate) mod wire;

pub use data::{
    generate_synthetic, hybrid_dot, normalize_sparse, HybridDataset, HybridVector,
    HybridVectorRef, SparseRef, SparseVector, SynthConfig, ValueLaw,
};
pub use error::{Error, Result};
pub use par::Execution;
pub use pipeline::{build_index, HybridIndex, HybridIndexConfig, SearchResult};
