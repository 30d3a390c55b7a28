//! Product quantization of the dense component: codebook training, lookup
//! tables with 8-bit quantization, LUT16 scan kernels, whitening, and the
//! scalar-quantized residual.

mod bounds;
mod codebooks;
mod index;
pub mod kmeans;
mod lut;
mod scan;
mod sq;
mod whiten;

pub use bounds::{azuma_error_bound, rate_distortion_bound};
pub use codebooks::{even_widths, pq_encode, subspace_widths, train_codebooks, Codebooks, TrainReport};
pub use index::{build_dense_index, DenseIndex, DenseIndexConfig, DenseQuery, DENSE_INDEX_MAGIC, DENSE_INDEX_VERSION};
pub use lut::{adc_table, quantize_lut, LookupTable, QuantizedLut};
pub use scan::{adc_scan, lut16_scan, lut16_scan_with, Lut16Kernel, PqCodes, BLOCK, LANE_CHUNK};
pub use sq::{sq_encode, PreparedQuery, ScalarQuantResidual};
pub use whiten::{whiten_fit, whiten_fit_with_ridge, WhiteningTransform, DEFAULT_RIDGE};
