//! Hybrid vectors, datasets, exact scoring, synthetic generation, and the
//! `HYBX` dataset file format.

mod csr;
mod dataset;
mod io;
pub(crate) mod synth;
mod vector;

pub use csr::SparseMatrix;
pub use dataset::HybridDataset;
pub use io::{load_dataset, read_dataset, save_dataset, write_dataset, DATASET_MAGIC, DATASET_VERSION};
pub use synth::{generate_synthetic, generate_synthetic_with, SynthConfig, SyntheticData, ValueLaw};
pub use vector::{
    dense_dot, hybrid_dot, normalize_sparse, HybridVector, HybridVectorRef, SparseRef,
    SparseVector,
};
