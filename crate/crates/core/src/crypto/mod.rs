//! Cryptographic primitives over an exponent-tracking group backend.
//!
//! Group elements are represented by their discrete logarithm with respect
//! to a fixed generator, so the pairing is multiplication of exponents. This
//! is functionally faithful (every homomorphic identity holds) and fast, but
//! it offers no secrecy: anyone holding an element knows its exponent.

pub mod arith;
pub mod bgn;
pub mod bsgs;
pub mod group;
mod keyfile;
pub mod mockfhe;
pub mod peks;
pub mod pke;
pub mod prp;

pub use bgn::{BgnCiphertext, BgnPublicKey, BgnSecretKey, Level};
pub use group::{CyclicGroup, ExpElem, ExpGroup, ExpPairing, Pairing, ELEMENT_BYTES};
pub use keyfile::KeyKind;
pub use mockfhe::{FheBits, FheCiphertext, FheEval, FhePublicKey, FheSecretKey};
pub use peks::{PeksCiphertext, PeksPublicKey, PeksSecretKey, Trapdoor};
pub use pke::{PkeCiphertext, PkePublicKey, PkeSecretKey};
pub use prp::{Permutation, PrpKey};

#[derive(Debug, thiserror::Error)]
pub enum CryptoError {
    #[error("parameter too small: {got} bits (minimum {min})")]
    ParameterTooSmall { got: u32, min: u32 },
    #[error("parameter too large: {got} bits (maximum {max})")]
    ParameterTooLarge { got: u32, max: u32 },
    #[error("message {m} outside bound {bound}")]
    MessageOutOfBound { m: u64, bound: u64 },
    #[error("message of {len} bytes exceeds capacity {capacity}")]
    MessageTooLong { len: usize, capacity: usize },
    #[error("ciphertext level mismatch")]
    LevelMismatch,
    #[error("discrete log not found below {bound}")]
    DlogNotFound { bound: u64 },
    #[error("malformed input: {0}")]
    Malformed(&'static str),
    #[error("integrity check failed")]
    IntegrityFailure,
    #[error("ciphertext was produced under a different key")]
    KeyMismatch,
    #[error("bit width mismatch: {left} vs {right}")]
    WidthMismatch { left: u32, right: u32 },
}
