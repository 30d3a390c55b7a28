//! `HYBX` dataset files (little-endian):
//!
//! ```text
//! magic "HYBX" | version u32 = 1 | N u64 | d_sparse u64 | d_dense u32
//! dense block : N * d_dense f32, row-major
//! sparse block: (N + 1) u64 offsets | nnz u32 dims | nnz f32 values
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{HybridDataset, SparseMatrix};
use crate::wire::{Reader, Writer};
use crate::{Error, Result};

pub const DATASET_MAGIC: [u8; 4] = *b"HYBX";
pub const DATASET_VERSION: u32 = 1;

pub fn write_dataset<W: Write>(w: W, ds: &HybridDataset) -> Result<()> {
    let d_dense = u32::try_from(ds.d_dense())
        .map_err(|_| Error::config("d_dense does not fit in u32"))?;
    let mut w = Writer::new(w);
    w.raw(&DATASET_MAGIC)?;
    w.u32(DATASET_VERSION)?;
    w.u64(ds.len() as u64)?;
    w.u64(ds.d_sparse() as u64)?;
    w.u32(d_dense)?;
    w.f32s(ds.dense_matrix())?;
    let sp = ds.sparse_matrix();
    let offsets: Vec<u64> = sp.offsets().iter().map(|&o| o as u64).collect();
    w.u64s(&offsets)?;
    w.u32s(sp.raw_dims())?;
    w.f32s(sp.raw_values())?;
    w.into_inner().flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(r: R) -> Result<HybridDataset> {
    let mut r = Reader::new(r, "HYBX");
    r.magic(DATASET_MAGIC)?;
    r.version(DATASET_VERSION)?;
    let n = r.len("point count")?;
    let d_sparse = r.len("sparse dimensionality")?;
    let d_dense = r.u32()? as usize;
    let dense_len = n
        .checked_mul(d_dense)
        .ok_or_else(|| r.corrupt("dense block size overflow"))?;
    let dense = r.f32_vec(dense_len)?;
    let offsets = r.u64_vec(n.checked_add(1).ok_or_else(|| r.corrupt("count overflow"))?)?;
    let nnz = *offsets.last().unwrap() as usize;
    let dims = r.u32_vec(nnz)?;
    let values = r.f32_vec(nnz)?;
    r.finish()?;
    let offsets = offsets.into_iter().map(|o| o as usize).collect();
    let sparse = SparseMatrix::from_csr(d_sparse, offsets, dims, values).map_err(|e| match e {
        Error::Invariant(reason) => Error::Corrupt {
            format: "HYBX",
            reason,
        },
        other => other,
    })?;
    HybridDataset::from_parts(sparse, d_dense, dense)
}

pub fn save_dataset(path: impl AsRef<Path>, ds: &HybridDataset) -> Result<()> {
    write_dataset(BufWriter::new(File::create(path)?), ds)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<HybridDataset> {
    read_dataset(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SynthConfig};

    fn sample() -> HybridDataset {
        let cfg = SynthConfig {
            n: 200,
            n_queries: 0,
            d_sparse: 300,
            d_dense: 5,
            ..SynthConfig::default()
        };
        generate_synthetic(&cfg).unwrap().data
    }

    fn bytes(ds: &HybridDataset) -> Vec<u8> {
        let mut buf = Vec::new();
        write_dataset(&mut buf, ds).unwrap();
        buf
    }

    #[test]
    fn round_trip() {
        let ds = sample();
        let back = read_dataset(bytes(&ds).as_slice()).unwrap();
        assert_eq!(ds, back);
        assert_eq!(bytes(&back), bytes(&ds));
    }

    #[test]
    fn empty_round_trip() {
        let ds = HybridDataset::empty(10, 3);
        let buf = bytes(&ds);
        assert_eq!(buf.len(), 4 + 4 + 8 + 8 + 4 + 8);
        assert_eq!(read_dataset(buf.as_slice()).unwrap(), ds);
    }

    #[test]
    fn corrupted_magic() {
        let mut buf = bytes(&sample());
        buf[0] = b'X';
        assert!(matches!(read_dataset(buf.as_slice()), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn version_mismatch() {
        let mut buf = bytes(&sample());
        buf[4] = 9;
        assert!(matches!(
            read_dataset(buf.as_slice()),
            Err(Error::VersionMismatch { found: 9, .. })
        ));
    }

    #[test]
    fn truncation() {
        let buf = bytes(&sample());
        for cut in [3, 10, 30, buf.len() / 2, buf.len() - 1] {
            assert!(
                matches!(read_dataset(&buf[..cut]), Err(Error::Truncated("HYBX"))),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut buf = bytes(&sample());
        buf.push(0);
        assert!(matches!(read_dataset(buf.as_slice()), Err(Error::Corrupt { .. })));
    }
}
