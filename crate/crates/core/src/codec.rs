//! Canonical byte encoding shared by every signed or persisted structure.
//!
//! The encoding is deliberately minimal and bit-exact so signatures and
//! transcripts stay stable across versions:
//!
//! - variable-length fields (byte strings, UTF-8 strings) are written as a
//!   4-byte big-endian length followed by the raw bytes;
//! - integers are fixed-width big-endian (`u64` -> 8 bytes, `u32` -> 4 bytes);
//! - booleans are a single byte, `0` or `1`;
//! - fields appear in declaration order, nothing is optional on the wire
//!   (absent values encode as an explicit 0/empty marker chosen per type);
//! - decoders must consume the input exactly; trailing bytes are an error.

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("unexpected end of input at offset {0}")]
    UnexpectedEnd(usize),
    #[error("trailing bytes after decode ({0} left)")]
    TrailingBytes(usize),
    #[error("declared length {0} exceeds remaining input")]
    LengthOverrun(u32),
    #[error("field is not valid utf-8")]
    BadUtf8,
    #[error("invalid value for field `{0}`")]
    BadValue(&'static str),
}

/// Canonical encoder. Append fields in declaration order, then [`Writer::finish`].
#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(&mut self, field: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(
            &u32::try_from(field.len())
                .expect("field too long")
                .to_be_bytes(),
        );
        self.buf.extend_from_slice(field);
        self
    }

    pub fn str(&mut self, field: &str) -> &mut Self {
        self.bytes(field.as_bytes())
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn bool(&mut self, v: bool) -> &mut Self {
        self.buf.push(v as u8);
        self
    }

    pub fn finish(&mut self) -> Vec<u8> {
        std::mem::take(&mut self.buf)
    }
}

/// Canonical decoder over a byte slice. Call [`Reader::done`] after the last
/// field to reject trailing garbage.
pub struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.data.len() - self.pos < n {
            return Err(CodecError::UnexpectedEnd(self.pos));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn bytes(&mut self) -> Result<Vec<u8>, CodecError> {
        let len = u32::from_be_bytes(self.take(4)?.try_into().unwrap());
        if (self.data.len() - self.pos) < len as usize {
            return Err(CodecError::LengthOverrun(len));
        }
        Ok(self.take(len as usize)?.to_vec())
    }

    pub fn str(&mut self) -> Result<String, CodecError> {
        String::from_utf8(self.bytes()?).map_err(|_| CodecError::BadUtf8)
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    pub fn bool(&mut self) -> Result<bool, CodecError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(CodecError::BadValue("bool")),
        }
    }

    pub fn done(self) -> Result<(), CodecError> {
        if self.pos != self.data.len() {
            return Err(CodecError::TrailingBytes(self.data.len() - self.pos));
        }
        Ok(())
    }
}

pub fn sha256(data: &[u8]) -> [u8; 32] {
    Sha256::digest(data).into()
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(sha256(data))
}
