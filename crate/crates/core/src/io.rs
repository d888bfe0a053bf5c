//! Little-endian binary container plumbing.
//!
//! The dataset, recorded-clutter, and checkpoint containers all share the
//! same primitive layer: fixed-width little-endian fields behind a reader
//! that tracks its byte offset so a truncated or corrupt file reports the
//! exact position and the section being parsed.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Reader wrapper that counts consumed bytes for error reporting.
pub struct SectionReader<R: Read> {
    inner: R,
    offset: u64,
    section: &'static str,
}

impl<R: Read> SectionReader<R> {
    pub fn new(inner: R) -> Self {
        SectionReader {
            inner,
            offset: 0,
            section: "header",
        }
    }

    /// Names the section used in subsequent error messages.
    pub fn enter(&mut self, section: &'static str) {
        self.section = section;
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn format_error(&self, message: impl Into<String>) -> Error {
        Error::Format {
            offset: self.offset,
            section: self.section,
            message: message.into(),
        }
    }

    fn fill(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| Error::Format {
            offset: self.offset,
            section: self.section,
            message: format!("unexpected end of data ({e})"),
        })?;
        self.offset += buf.len() as u64;
        Ok(())
    }

    /// Returns `Ok(false)` on clean EOF, `Ok(true)` after filling `buf`.
    /// EOF in the middle of `buf` is a format error.
    pub fn fill_or_eof(&mut self, buf: &mut [u8]) -> Result<bool> {
        let mut got = 0;
        while got < buf.len() {
            let n = self.inner.read(&mut buf[got..]).map_err(Error::Io)?;
            if n == 0 {
                if got == 0 {
                    return Ok(false);
                }
                return Err(self.format_error("unexpected end of data mid-field"));
            }
            got += n;
            self.offset += n as u64;
        }
        Ok(true)
    }

    pub fn expect_magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        let mut buf = [0u8; 4];
        self.fill(&mut buf)?;
        if &buf != magic {
            return Err(Error::Format {
                offset: self.offset - 4,
                section: self.section,
                message: format!(
                    "bad magic {:?}, expected {:?}",
                    String::from_utf8_lossy(&buf),
                    String::from_utf8_lossy(magic)
                ),
            });
        }
        Ok(())
    }

    pub fn read_u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.fill(&mut b)?;
        Ok(b[0])
    }

    pub fn read_u16(&mut self) -> Result<u16> {
        let mut b = [0u8; 2];
        self.fill(&mut b)?;
        Ok(u16::from_le_bytes(b))
    }

    pub fn read_u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.fill(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    pub fn read_u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.fill(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    pub fn read_f32(&mut self) -> Result<f32> {
        let mut b = [0u8; 4];
        self.fill(&mut b)?;
        Ok(f32::from_le_bytes(b))
    }

    pub fn read_f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.fill(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }

    pub fn read_bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.fill(&mut buf)?;
        Ok(buf)
    }

    /// Reads `n` consecutive `f32` values.
    pub fn read_f32_vec(&mut self, n: usize) -> Result<Vec<f32>> {
        let mut raw = vec![0u8; n * 4];
        self.fill(&mut raw)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }

    /// Reads `n` consecutive `f64` values.
    pub fn read_f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut raw = vec![0u8; n * 8];
        self.fill(&mut raw)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Writer counterpart; plain helpers over any `Write`.
pub struct SectionWriter<W: Write> {
    inner: W,
}

impl<W: Write> SectionWriter<W> {
    pub fn new(inner: W) -> Self {
        SectionWriter { inner }
    }

    pub fn into_inner(self) -> W {
        self.inner
    }

    pub fn write_magic(&mut self, magic: &[u8; 4]) -> Result<()> {
        self.inner.write_all(magic)?;
        Ok(())
    }

    pub fn write_u8(&mut self, v: u8) -> Result<()> {
        self.inner.write_all(&[v])?;
        Ok(())
    }

    pub fn write_u16(&mut self, v: u16) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    pub fn write_u32(&mut self, v: u32) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    pub fn write_u64(&mut self, v: u64) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    pub fn write_f32(&mut self, v: f32) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    pub fn write_f64(&mut self, v: f64) -> Result<()> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    pub fn write_bytes(&mut self, v: &[u8]) -> Result<()> {
        self.inner.write_all(v)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}
