//! The PNFV schemes: key generation, packet encryption, policy
//! transformation, cloud processing and client decryption, plus the private
//! state table.
//!
//! Every scheme is checked against [`crate::netfn::eval`].

pub mod bgn;
mod codec;
pub mod fhe;
pub mod peks;
pub mod state;

use crate::crypto::CryptoError;
use crate::netfn::{Action, FieldIndex, NetfnError, NetworkFunction};

pub use codec::{Reader, Writer};

#[derive(Debug, thiserror::Error)]
pub enum SchemeError {
    #[error(transparent)]
    Netfn(#[from] NetfnError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("unsupported policy for this scheme: {0}")]
    UnsupportedPolicy(&'static str),
    #[error("range matching on field {field} of width {width} is unsupported (max {max})")]
    UnsupportedWidth { field: FieldIndex, width: u8, max: u8 },
    #[error("bundle does not fit the packet: expected {expected} fields, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("corrupted packet: {0}")]
    Corrupted(&'static str),
    #[error("unknown state table entry {0}")]
    UnknownEntry(u32),
    #[error("state table is full")]
    TableFull,
    #[error("malformed encoding: {0}")]
    Malformed(&'static str),
}

/// Scheme identifiers, as carried in the 4-bit wire header.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum SchemeId {
    Fhe = 1,
    Bgn = 2,
    Peks = 3,
    State = 4,
}

impl SchemeId {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            1 => Some(Self::Fhe),
            2 => Some(Self::Bgn),
            3 => Some(Self::Peks),
            4 => Some(Self::State),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Fhe => "fhe",
            Self::Bgn => "bgn",
            Self::Peks => "peks",
            Self::State => "state",
        }
    }
}

impl std::str::FromStr for SchemeId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fhe" => Ok(Self::Fhe),
            "bgn" => Ok(Self::Bgn),
            "peks" => Ok(Self::Peks),
            other => Err(format!("unknown scheme {other:?} (expected bgn, peks or fhe)")),
        }
    }
}

impl std::fmt::Display for SchemeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub const KEYWORD_BYTES: usize = 6;
pub const INDEX_KEYWORD_BYTES: usize = 2;

/// `x || i`: 4-byte big-endian value, 2-byte big-endian field index.
pub fn keyword(value: u64, index: FieldIndex) -> [u8; KEYWORD_BYTES] {
    let mut w = [0u8; KEYWORD_BYTES];
    w[..4].copy_from_slice(&(value as u32).to_be_bytes());
    w[4..].copy_from_slice(&index.get().to_be_bytes());
    w
}

pub fn index_keyword(index: FieldIndex) -> [u8; INDEX_KEYWORD_BYTES] {
    index.get().to_be_bytes()
}

/// Inverse of [`keyword`].
pub fn parse_keyword(bytes: &[u8]) -> Result<(u64, FieldIndex), SchemeError> {
    if bytes.len() != KEYWORD_BYTES {
        return Err(SchemeError::Corrupted("field plaintext length"));
    }
    let value = u32::from_be_bytes(bytes[..4].try_into().expect("4")) as u64;
    let index = FieldIndex::new(u16::from_be_bytes(bytes[4..].try_into().expect("2")))
        .ok_or(SchemeError::Corrupted("zero field index"))?;
    Ok((value, index))
}

/// Encrypted schemes only implement replacement actions.
fn replace_value(action: &Action) -> Result<(FieldIndex, u64), SchemeError> {
    match *action {
        Action::Replace { field, value } => Ok((field, value)),
        Action::Add { .. } => Err(SchemeError::UnsupportedPolicy("add action")),
    }
}

/// Unit vector `e_i` of length `n`.
fn unit(n: usize, i: FieldIndex) -> impl Iterator<Item = u64> {
    (0..n).map(move |k| u64::from(k == i.slot()))
}

fn check_function(nf: &NetworkFunction, layout: &crate::netfn::Layout) -> Result<(), SchemeError> {
    nf.validate(layout)?;
    for p in nf.policies() {
        replace_value(&p.action)?;
    }
    Ok(())
}
