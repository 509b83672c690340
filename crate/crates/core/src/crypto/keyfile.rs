//! Binary key files: `b"PNFK"`, a version byte, a kind byte, a value count,
//! then fixed-width big-endian integers.

use super::CryptoError;

pub const MAGIC: [u8; 4] = *b"PNFK";
pub const VERSION: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum KeyKind {
    BgnPublic = 1,
    BgnSecret = 2,
    PeksPublic = 3,
    PeksSecret = 4,
    PkePublic = 5,
    PkeSecret = 6,
}

impl KeyKind {
    fn from_byte(b: u8) -> Option<Self> {
        use KeyKind::*;
        [BgnPublic, BgnSecret, PeksPublic, PeksSecret, PkePublic, PkeSecret]
            .into_iter()
            .find(|k| *k as u8 == b)
    }
}

pub(crate) struct KeyFile {
    kind: KeyKind,
    values: Vec<u128>,
}

impl KeyFile {
    pub(crate) fn new(kind: KeyKind, values: Vec<u128>) -> Self {
        Self { kind, values }
    }

    pub(crate) fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(7 + 16 * self.values.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.kind as u8);
        out.push(u8::try_from(self.values.len()).expect("few key values"));
        for v in &self.values {
            out.extend_from_slice(&v.to_be_bytes());
        }
        out
    }

    pub(crate) fn from_bytes(bytes: &[u8], expected: KeyKind) -> Result<Self, CryptoError> {
        if bytes.len() < 7 || bytes[..4] != MAGIC {
            return Err(CryptoError::Malformed("key file magic"));
        }
        if bytes[4] != VERSION {
            return Err(CryptoError::Malformed("key file version"));
        }
        let kind = KeyKind::from_byte(bytes[5]).ok_or(CryptoError::Malformed("key kind"))?;
        if kind != expected {
            return Err(CryptoError::Malformed("unexpected key kind"));
        }
        let count = bytes[6] as usize;
        let body = &bytes[7..];
        if body.len() != 16 * count {
            return Err(CryptoError::Malformed("key file length"));
        }
        let values = body
            .chunks_exact(16)
            .map(|c| u128::from_be_bytes(c.try_into().expect("16-byte chunk")))
            .collect();
        Ok(Self { kind, values })
    }

    pub(crate) fn values<const N: usize>(&self) -> Result<[u128; N], CryptoError> {
        self.values
            .as_slice()
            .try_into()
            .map_err(|_| CryptoError::Malformed("key value count"))
    }
}
