//! BGN encryption: additively homomorphic in G1 and G2, with one
//! multiplication through the pairing.
//!
//! Keys live in a composite-order group of order `n = q1 q2`. A ciphertext is
//! `g^m h^r` where `h` has order `q1`; raising to `q1` strips the randomness
//! and leaves `(g^q1)^m`, recovered by baby-step giant-step.

use std::sync::OnceLock;

use rand::Rng;

use super::arith::{random_prime, random_unit};
use super::bsgs::BsgsTable;
use super::group::{CyclicGroup, ExpGroup, ExpPairing, Gt, Pairing, Source, Target, ELEMENT_BYTES, G1};
use super::keyfile::{KeyFile, KeyKind};
use super::CryptoError;

/// Bits per secret prime unless configured otherwise.
pub const DEFAULT_PRIME_BITS: u32 = 36;
/// Smallest prime size for which signed plaintexts in `[-2^32, 2^32)` stay
/// unambiguous.
pub const MIN_PRIME_BITS: u32 = 34;
pub const MAX_PRIME_BITS: u32 = 47;
pub const DEFAULT_MESSAGE_BOUND: u64 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    /// Fresh or additively combined (G1).
    Source,
    /// After the pairing (G2); cannot be multiplied again.
    Target,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BgnCiphertext {
    Source(G1),
    Target(Gt),
}

impl BgnCiphertext {
    pub fn level(&self) -> Level {
        match self {
            BgnCiphertext::Source(_) => Level::Source,
            BgnCiphertext::Target(_) => Level::Target,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BgnPublicKey {
    pairing: ExpPairing,
    g: G1,
    h: G1,
    message_bound: u64,
}

pub struct BgnSecretKey {
    q1: u128,
    pk: BgnPublicKey,
    source_table: OnceLock<BsgsTable<ExpGroup<Source>>>,
    target_table: OnceLock<BsgsTable<ExpGroup<Target>>>,
}

impl std::fmt::Debug for BgnSecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BgnSecretKey").finish_non_exhaustive()
    }
}

pub fn keygen<R: Rng + ?Sized>(
    prime_bits: u32,
    rng: &mut R,
) -> Result<(BgnPublicKey, BgnSecretKey), CryptoError> {
    keygen_with_bound(prime_bits, DEFAULT_MESSAGE_BOUND, rng)
}

pub fn keygen_with_bound<R: Rng + ?Sized>(
    prime_bits: u32,
    message_bound: u64,
    rng: &mut R,
) -> Result<(BgnPublicKey, BgnSecretKey), CryptoError> {
    if prime_bits < MIN_PRIME_BITS {
        return Err(CryptoError::ParameterTooSmall {
            got: prime_bits,
            min: MIN_PRIME_BITS,
        });
    }
    if prime_bits > MAX_PRIME_BITS {
        return Err(CryptoError::ParameterTooLarge {
            got: prime_bits,
            max: MAX_PRIME_BITS,
        });
    }
    let q1 = random_prime(prime_bits, rng);
    let q2 = loop {
        let q = random_prime(prime_bits, rng);
        if q != q1 {
            break q;
        }
    };
    if 2 * message_bound as u128 >= q2 {
        return Err(CryptoError::ParameterTooSmall {
            got: prime_bits,
            min: 65 - message_bound.leading_zeros(),
        });
    }
    let n = q1 * q2;
    let pairing = ExpPairing::new(n);
    let g1 = pairing.g1();
    // random generators of G1
    let g = g1.pow(g1.base(), random_unit(n, rng));
    let u = g1.pow(g1.base(), random_unit(n, rng));
    let h = g1.pow(u, q2);
    let pk = BgnPublicKey {
        pairing,
        g,
        h,
        message_bound,
    };
    let sk = BgnSecretKey::from_parts(q1, pk.clone());
    Ok((pk, sk))
}

impl BgnPublicKey {
    pub fn pairing(&self) -> &ExpPairing {
        &self.pairing
    }

    pub fn g(&self) -> G1 {
        self.g
    }

    pub fn h(&self) -> G1 {
        self.h
    }

    pub fn order(&self) -> u128 {
        self.pairing.order()
    }

    pub fn message_bound(&self) -> u64 {
        self.message_bound
    }

    /// `g^m h^r` for `m < M`.
    pub fn encrypt<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> Result<BgnCiphertext, CryptoError> {
        if m >= self.message_bound {
            return Err(CryptoError::MessageOutOfBound {
                m,
                bound: self.message_bound,
            });
        }
        Ok(self.encrypt_signed(m as i64, rng))
    }

    /// Encrypts any integer as an exponent. Decryption of the result still
    /// requires it to lie within the dlog search bound.
    pub fn encrypt_signed<R: Rng + ?Sized>(&self, m: i64, rng: &mut R) -> BgnCiphertext {
        let g1 = self.pairing.g1();
        let r = rng.gen_range(0..self.order());
        BgnCiphertext::Source(g1.op(g1.pow_signed(self.g, m as i128), g1.pow(self.h, r)))
    }

    pub fn encrypt_target<R: Rng + ?Sized>(&self, m: u64, rng: &mut R) -> Result<BgnCiphertext, CryptoError> {
        self.encrypt(m, rng).and_then(|c| self.lift(c))
    }

    pub fn add(&self, a: &BgnCiphertext, b: &BgnCiphertext) -> Result<BgnCiphertext, CryptoError> {
        match (a, b) {
            (BgnCiphertext::Source(x), BgnCiphertext::Source(y)) => {
                Ok(BgnCiphertext::Source(self.pairing.g1().op(*x, *y)))
            }
            (BgnCiphertext::Target(x), BgnCiphertext::Target(y)) => {
                Ok(BgnCiphertext::Target(self.pairing.gt().op(*x, *y)))
            }
            _ => Err(CryptoError::LevelMismatch),
        }
    }

    pub fn sub(&self, a: &BgnCiphertext, b: &BgnCiphertext) -> Result<BgnCiphertext, CryptoError> {
        self.add(a, &self.neg(b))
    }

    pub fn neg(&self, a: &BgnCiphertext) -> BgnCiphertext {
        self.scale(a, -1)
    }

    /// Multiplies the plaintext by a public integer.
    pub fn scale(&self, a: &BgnCiphertext, k: i64) -> BgnCiphertext {
        match a {
            BgnCiphertext::Source(x) => BgnCiphertext::Source(self.pairing.g1().pow_signed(*x, k as i128)),
            BgnCiphertext::Target(x) => BgnCiphertext::Target(self.pairing.gt().pow_signed(*x, k as i128)),
        }
    }

    /// The single homomorphic multiplication.
    pub fn mul(&self, a: &BgnCiphertext, b: &BgnCiphertext) -> Result<BgnCiphertext, CryptoError> {
        match (a, b) {
            (BgnCiphertext::Source(x), BgnCiphertext::Source(y)) => {
                Ok(BgnCiphertext::Target(self.pairing.pair(*x, *y)))
            }
            _ => Err(CryptoError::LevelMismatch),
        }
    }

    /// Moves a source ciphertext to the target group: `e(c, g)`.
    pub fn lift(&self, a: BgnCiphertext) -> Result<BgnCiphertext, CryptoError> {
        match a {
            BgnCiphertext::Source(x) => Ok(BgnCiphertext::Target(self.pairing.pair(x, self.g))),
            BgnCiphertext::Target(_) => Err(CryptoError::LevelMismatch),
        }
    }

    pub fn encode(&self, c: &BgnCiphertext) -> [u8; ELEMENT_BYTES] {
        match c {
            BgnCiphertext::Source(x) => self.pairing.g1().encode(*x),
            BgnCiphertext::Target(x) => self.pairing.gt().encode(*x),
        }
    }

    pub fn decode(&self, bytes: &[u8], level: Level) -> Result<BgnCiphertext, CryptoError> {
        Ok(match level {
            Level::Source => BgnCiphertext::Source(self.pairing.g1().decode(bytes)?),
            Level::Target => BgnCiphertext::Target(self.pairing.gt().decode(bytes)?),
        })
    }

    pub fn to_key_bytes(&self) -> Vec<u8> {
        KeyFile::new(
            KeyKind::BgnPublic,
            vec![
                self.order(),
                self.g.exponent(),
                self.h.exponent(),
                self.message_bound as u128,
            ],
        )
        .to_bytes()
    }

    pub fn from_key_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        let kf = KeyFile::from_bytes(bytes, KeyKind::BgnPublic)?;
        let [n, g, h, m] = kf.values::<4>()?;
        Self::from_values(n, g, h, m)
    }

    fn from_values(n: u128, g: u128, h: u128, m: u128) -> Result<Self, CryptoError> {
        if n < 2 || g >= n || h >= n || m > u64::MAX as u128 {
            return Err(CryptoError::Malformed("bgn public key"));
        }
        Ok(Self {
            pairing: ExpPairing::new(n),
            g: G1::from_exponent(g),
            h: G1::from_exponent(h),
            message_bound: m as u64,
        })
    }
}

impl BgnSecretKey {
    fn from_parts(q1: u128, pk: BgnPublicKey) -> Self {
        Self {
            q1,
            pk,
            source_table: OnceLock::new(),
            target_table: OnceLock::new(),
        }
    }

    pub fn public_key(&self) -> &BgnPublicKey {
        &self.pk
    }

    pub fn q1(&self) -> u128 {
        self.q1
    }

    fn source_base(&self) -> G1 {
        self.pk.pairing.g1().pow(self.pk.g, self.q1)
    }

    fn target_base(&self) -> Gt {
        let e = &self.pk.pairing;
        e.gt().pow(e.pair(self.pk.g, self.pk.g), self.q1)
    }

    fn source_table(&self) -> &BsgsTable<ExpGroup<Source>> {
        self.source_table
            .get_or_init(|| BsgsTable::new(self.pk.pairing.g1(), self.source_base()))
    }

    fn target_table(&self) -> &BsgsTable<ExpGroup<Target>> {
        self.target_table
            .get_or_init(|| BsgsTable::new(self.pk.pairing.gt(), self.target_base()))
    }

    /// Builds both discrete-log tables now instead of on first use.
    pub fn precompute(&self) {
        self.source_table();
        self.target_table();
    }

    /// Plaintext in `[0, bound)`.
    pub fn decrypt(&self, c: &BgnCiphertext, bound: u64) -> Result<u64, CryptoError> {
        let e = &self.pk.pairing;
        match c {
            BgnCiphertext::Source(x) => self.source_table().solve(e.g1(), e.g1().pow(*x, self.q1), bound),
            BgnCiphertext::Target(x) => self.target_table().solve(e.gt(), e.gt().pow(*x, self.q1), bound),
        }
        .ok_or(CryptoError::DlogNotFound { bound })
    }

    /// Plaintext in `[-bound, bound)`.
    pub fn decrypt_signed(&self, c: &BgnCiphertext, bound: u64) -> Result<i64, CryptoError> {
        let e = &self.pk.pairing;
        match c {
            BgnCiphertext::Source(x) => {
                self.source_table()
                    .solve_signed(e.g1(), e.g1().pow(*x, self.q1), bound)
            }
            BgnCiphertext::Target(x) => {
                self.target_table()
                    .solve_signed(e.gt(), e.gt().pow(*x, self.q1), bound)
            }
        }
        .ok_or(CryptoError::DlogNotFound { bound })
    }

    /// Whether `c` encrypts `v`, without a discrete log: `c^q1 == (g^q1)^v`.
    pub fn is_value(&self, c: &BgnCiphertext, v: i64) -> bool {
        let e = &self.pk.pairing;
        match c {
            BgnCiphertext::Source(x) => {
                e.g1().pow(*x, self.q1) == e.g1().pow_signed(self.source_base(), v as i128)
            }
            BgnCiphertext::Target(x) => {
                e.gt().pow(*x, self.q1) == e.gt().pow_signed(self.target_base(), v as i128)
            }
        }
    }

    pub fn to_key_bytes(&self) -> Vec<u8> {
        let pk = &self.pk;
        KeyFile::new(
            KeyKind::BgnSecret,
            vec![
                pk.order(),
                pk.g.exponent(),
                pk.h.exponent(),
                pk.message_bound as u128,
                self.q1,
            ],
        )
        .to_bytes()
    }

    pub fn from_key_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        let kf = KeyFile::from_bytes(bytes, KeyKind::BgnSecret)?;
        let [n, g, h, m, q1] = kf.values::<5>()?;
        if q1 < 2 || n % q1 != 0 {
            return Err(CryptoError::Malformed("bgn secret key"));
        }
        Ok(Self::from_parts(q1, BgnPublicKey::from_values(n, g, h, m)?))
    }
}
