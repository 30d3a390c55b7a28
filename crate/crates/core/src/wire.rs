//! Little-endian read/write helpers shared by the binary formats.

use std::io::{self, Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::{Error, Result};

pub(crate) struct Reader<R> {
    inner: R,
    format: &'static str,
}

fn map_eof(format: &'static str) -> impl Fn(io::Error) -> Error {
    move |e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            Error::Truncated(format)
        } else {
            Error::Io(e)
        }
    }
}

impl<R: Read> Reader<R> {
    pub fn new(inner: R, format: &'static str) -> Self {
        Self { inner, format }
    }

    pub fn magic(&mut self, expected: [u8; 4]) -> Result<()> {
        let mut found = [0u8; 4];
        self.inner
            .read_exact(&mut found)
            .map_err(map_eof(self.format))?;
        if found != expected {
            return Err(Error::BadMagic { expected, found });
        }
        Ok(())
    }

    pub fn version(&mut self, expected: u32) -> Result<()> {
        let found = self.u32()?;
        if found != expected {
            return Err(Error::VersionMismatch {
                format: self.format,
                expected,
                found,
            });
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8> {
        self.inner.read_u8().map_err(map_eof(self.format))
    }

    pub fn u32(&mut self) -> Result<u32> {
        self.inner.read_u32::<LE>().map_err(map_eof(self.format))
    }

    pub fn u64(&mut self) -> Result<u64> {
        self.inner.read_u64::<LE>().map_err(map_eof(self.format))
    }

    pub fn f32(&mut self) -> Result<f32> {
        self.inner.read_f32::<LE>().map_err(map_eof(self.format))
    }

    pub fn f64(&mut self) -> Result<f64> {
        self.inner.read_f64::<LE>().map_err(map_eof(self.format))
    }

    /// Reads a length that must fit in memory-addressable range.
    pub fn len(&mut self, what: &str) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| self.corrupt(format!("{what} {v} too large")))
    }

    pub fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        (&mut self.inner)
            .take(n as u64)
            .read_to_end(&mut out)
            .map_err(map_eof(self.format))?;
        if out.len() != n {
            return Err(Error::Truncated(self.format));
        }
        Ok(out)
    }

    pub fn u32_vec(&mut self, n: usize) -> Result<Vec<u32>> {
        let raw = self.bytes(n.checked_mul(4).ok_or_else(|| self.corrupt("length overflow"))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    pub fn u64_vec(&mut self, n: usize) -> Result<Vec<u64>> {
        let raw = self.bytes(n.checked_mul(8).ok_or_else(|| self.corrupt("length overflow"))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn f32_vec(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.bytes(n.checked_mul(4).ok_or_else(|| self.corrupt("length overflow"))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    pub fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.bytes(n.checked_mul(8).ok_or_else(|| self.corrupt("length overflow"))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn corrupt(&self, reason: impl Into<String>) -> Error {
        Error::Corrupt {
            format: self.format,
            reason: reason.into(),
        }
    }

    /// Fails unless the underlying stream is exhausted.
    pub fn finish(mut self) -> Result<()> {
        let mut probe = [0u8; 1];
        match self.inner.read(&mut probe)? {
            0 => Ok(()),
            _ => Err(self.corrupt("trailing bytes")),
        }
    }
}

pub(crate) struct Writer<W> {
    inner: W,
}

impl<W: Write> Writer<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn raw(&mut self, b: &[u8]) -> Result<()> {
        Ok(self.inner.write_all(b)?)
    }

    pub fn u8(&mut self, v: u8) -> Result<()> {
        Ok(self.inner.write_u8(v)?)
    }

    pub fn u32(&mut self, v: u32) -> Result<()> {
        Ok(self.inner.write_u32::<LE>(v)?)
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.inner.write_u64::<LE>(v)?)
    }

    pub fn f32(&mut self, v: f32) -> Result<()> {
        Ok(self.inner.write_f32::<LE>(v)?)
    }

    pub fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.inner.write_f64::<LE>(v)?)
    }

    pub fn u32s(&mut self, v: &[u32]) -> Result<()> {
        let mut buf = Vec::with_capacity(v.len() * 4);
        v.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes()));
        self.raw(&buf)
    }

    pub fn u64s(&mut self, v: &[u64]) -> Result<()> {
        let mut buf = Vec::with_capacity(v.len() * 8);
        v.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes()));
        self.raw(&buf)
    }

    pub fn f32s(&mut self, v: &[f32]) -> Result<()> {
        let mut buf = Vec::with_capacity(v.len() * 4);
        v.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes()));
        self.raw(&buf)
    }

    pub fn f64s(&mut self, v: &[f64]) -> Result<()> {
        let mut buf = Vec::with_capacity(v.len() * 8);
        v.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes()));
        self.raw(&buf)
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}
