//! Functional stand-in for a fully homomorphic scheme.
//!
//! NOT SECURE. Ciphertexts carry their plaintext in the clear, tagged with a
//! key id and a random nonce so that encryptions look fresh and keys cannot
//! be mixed. Arithmetic is exact over `Z_2^64` at unlimited depth.

use rand::Rng;

use super::CryptoError;

pub const CIPHERTEXT_BYTES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FheCiphertext {
    key_id: u64,
    nonce: u128,
    value: u64,
}

/// LSB-first encryptions of the bits of a value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FheBits(pub Vec<FheCiphertext>);

impl FheBits {
    pub fn width(&self) -> u32 {
        self.0.len() as u32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FhePublicKey {
    key_id: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FheSecretKey {
    key_id: u64,
}

pub fn keygen<R: Rng + ?Sized>(rng: &mut R) -> (FhePublicKey, FheSecretKey) {
    let key_id = rng.gen();
    (FhePublicKey { key_id }, FheSecretKey { key_id })
}

fn mix(a: u128, b: u128, op: u8) -> u128 {
    // splitmix-style finalizer; only needs to keep derived nonces distinct
    let mut z = a ^ b.rotate_left(61) ^ ((op as u128) << 120);
    z = (z ^ (z >> 67)).wrapping_mul(0x9e37_79b9_7f4a_7c15_f39c_c060_5ced_c835);
    z ^ (z >> 59)
}

impl FheCiphertext {
    pub fn to_bytes(&self) -> [u8; CIPHERTEXT_BYTES] {
        let mut out = [0u8; CIPHERTEXT_BYTES];
        out[..8].copy_from_slice(&self.key_id.to_be_bytes());
        out[8..24].copy_from_slice(&self.nonce.to_be_bytes());
        out[24..].copy_from_slice(&self.value.to_be_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() != CIPHERTEXT_BYTES {
            return Err(CryptoError::Malformed("fhe ciphertext length"));
        }
        Ok(Self {
            key_id: u64::from_be_bytes(bytes[..8].try_into().expect("8")),
            nonce: u128::from_be_bytes(bytes[8..24].try_into().expect("16")),
            value: u64::from_be_bytes(bytes[24..].try_into().expect("8")),
        })
    }
}

impl FhePublicKey {
    pub fn encrypt<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> FheCiphertext {
        FheCiphertext {
            key_id: self.key_id,
            nonce: rng.gen(),
            value: m,
        }
    }

    pub fn encrypt_bits<R: Rng + ?Sized>(&self, m: u64, width: u32, rng: &mut R) -> FheBits {
        FheBits((0..width).map(|k| self.encrypt((m >> k) & 1, rng)).collect())
    }

    fn check(&self, c: &FheCiphertext) -> Result<(), CryptoError> {
        if c.key_id == self.key_id {
            Ok(())
        } else {
            Err(CryptoError::KeyMismatch)
        }
    }

    fn combine(
        &self,
        a: &FheCiphertext,
        b: &FheCiphertext,
        op: u8,
        f: impl FnOnce(u64, u64) -> u64,
    ) -> Result<FheCiphertext, CryptoError> {
        self.check(a)?;
        self.check(b)?;
        Ok(FheCiphertext {
            key_id: self.key_id,
            nonce: mix(a.nonce, b.nonce, op),
            value: f(a.value, b.value),
        })
    }

    /// Recombines bits into the integer they encode.
    pub fn pack_bits(&self, bits: &FheBits) -> Result<FheCiphertext, CryptoError> {
        let mut acc: Option<FheCiphertext> = None;
        for (k, b) in bits.0.iter().enumerate().rev() {
            self.check(b)?;
            let shifted = FheCiphertext {
                key_id: self.key_id,
                nonce: mix(b.nonce, k as u128, 5),
                value: b.value << k,
            };
            acc = Some(match acc {
                None => shifted,
                Some(a) => self.add(&a, &shifted)?,
            });
        }
        acc.ok_or(CryptoError::Malformed("empty bit vector"))
    }
}

impl FheEval for FhePublicKey {
    fn add(&self, a: &FheCiphertext, b: &FheCiphertext) -> Result<FheCiphertext, CryptoError> {
        self.combine(a, b, 1, u64::wrapping_add)
    }

    fn sub(&self, a: &FheCiphertext, b: &FheCiphertext) -> Result<FheCiphertext, CryptoError> {
        self.combine(a, b, 2, u64::wrapping_sub)
    }

    fn mul(&self, a: &FheCiphertext, b: &FheCiphertext) -> Result<FheCiphertext, CryptoError> {
        self.combine(a, b, 3, u64::wrapping_mul)
    }

    fn not(&self, a: &FheCiphertext) -> Result<FheCiphertext, CryptoError> {
        self.check(a)?;
        Ok(FheCiphertext {
            key_id: self.key_id,
            nonce: mix(a.nonce, 0, 4),
            value: 1u64.wrapping_sub(a.value),
        })
    }
}

fn check_widths(a: &FheBits, b: &FheBits) -> Result<(), CryptoError> {
    if a.0.len() != b.0.len() || a.0.is_empty() {
        return Err(CryptoError::WidthMismatch {
            left: a.width(),
            right: b.width(),
        });
    }
    Ok(())
}

/// Homomorphic evaluation. The comparison circuits are provided in terms of
/// the four gates, so a wrapper that counts gates counts whole circuits.
pub trait FheEval {
    fn add(&self, a: &FheCiphertext, b: &FheCiphertext) -> Result<FheCiphertext, CryptoError>;
    fn sub(&self, a: &FheCiphertext, b: &FheCiphertext) -> Result<FheCiphertext, CryptoError>;
    fn mul(&self, a: &FheCiphertext, b: &FheCiphertext) -> Result<FheCiphertext, CryptoError>;
    /// `1 - a`, for bits.
    fn not(&self, a: &FheCiphertext) -> Result<FheCiphertext, CryptoError>;

    /// `b` if `sel` encrypts 1, `a` if it encrypts 0: `a + sel·(b - a)`.
    fn select(
        &self,
        sel: &FheCiphertext,
        a: &FheCiphertext,
        b: &FheCiphertext,
    ) -> Result<FheCiphertext, CryptoError> {
        let diff = self.sub(b, a)?;
        self.add(a, &self.mul(sel, &diff)?)
    }

    /// `a_k b_k + (1 - a_k)(1 - b_k)`.
    fn agree(&self, a: &FheCiphertext, b: &FheCiphertext) -> Result<FheCiphertext, CryptoError> {
        let both = self.mul(a, b)?;
        let neither = self.mul(&self.not(a)?, &self.not(b)?)?;
        self.add(&both, &neither)
    }

    /// Circuit form of the bitwise equality predicate.
    fn and_eq_circuit(&self, a: &FheBits, b: &FheBits) -> Result<FheCiphertext, CryptoError> {
        check_widths(a, b)?;
        let mut acc = self.agree(&a.0[0], &b.0[0])?;
        for k in 1..a.0.len() {
            acc = self.mul(&acc, &self.agree(&a.0[k], &b.0[k])?)?;
        }
        Ok(acc)
    }

    /// Circuit form of the bitwise `a >= b` predicate, scanning from the
    /// most significant bit.
    fn geq_circuit(&self, a: &FheBits, b: &FheBits) -> Result<FheCiphertext, CryptoError> {
        check_widths(a, b)?;
        let mut prefix: Option<FheCiphertext> = None;
        let mut sum: Option<FheCiphertext> = None;
        for k in (0..a.0.len()).rev() {
            let mut term = self.mul(&a.0[k], &self.not(&b.0[k])?)?;
            if let Some(p) = &prefix {
                term = self.mul(p, &term)?;
            }
            sum = Some(match sum {
                None => term,
                Some(s) => self.add(&s, &term)?,
            });
            let c = self.agree(&a.0[k], &b.0[k])?;
            prefix = Some(match prefix {
                None => c,
                Some(p) => self.mul(&p, &c)?,
            });
        }
        self.add(&sum.expect("non-empty"), &prefix.expect("non-empty"))
    }

    fn leq_circuit(&self, a: &FheBits, b: &FheBits) -> Result<FheCiphertext, CryptoError> {
        self.geq_circuit(b, a)
    }
}

impl FheSecretKey {
    pub fn decrypt(&self, c: &FheCiphertext) -> Result<u64, CryptoError> {
        if c.key_id != self.key_id {
            return Err(CryptoError::KeyMismatch);
        }
        Ok(c.value)
    }

    pub fn decrypt_bits(&self, bits: &FheBits) -> Result<u64, CryptoError> {
        bits.0
            .iter()
            .enumerate()
            .try_fold(0u64, |acc, (k, b)| Ok(acc | (self.decrypt(b)? & 1) << k))
    }
}
