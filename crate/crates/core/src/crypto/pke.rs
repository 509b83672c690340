//! Hashed ElGamal over the prime-order group with an integrity tag.
//!
//! Ciphertext layout: `g^r (32) || (block XOR pad) (32) || tag (16)` where
//! `block = len || message || zero padding`. Every ciphertext has the same
//! size regardless of the message.

use rand::Rng;
use sha2::{Digest, Sha256};

use super::group::{CyclicGroup, ExpGroup, Source, ELEMENT_BYTES, G1};
use super::keyfile::{KeyFile, KeyKind};
use super::peks::{random_scalar, PRIME_ORDER};
use super::CryptoError;

/// Longest message a single ciphertext carries.
pub const BLOCK_CAPACITY: usize = 31;
const BLOCK_BYTES: usize = BLOCK_CAPACITY + 1;
const TAG_BYTES: usize = 16;
pub const CIPHERTEXT_BYTES: usize = ELEMENT_BYTES + BLOCK_BYTES + TAG_BYTES;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PkePublicKey {
    group: ExpGroup<Source>,
    g: G1,
    y: G1,
}

#[derive(Clone, Debug)]
pub struct PkeSecretKey {
    x: u128,
    pk: PkePublicKey,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PkeCiphertext([u8; CIPHERTEXT_BYTES]);

impl PkeCiphertext {
    pub fn as_bytes(&self) -> &[u8; CIPHERTEXT_BYTES] {
        &self.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        bytes
            .try_into()
            .map(Self)
            .map_err(|_| CryptoError::Malformed("pke ciphertext length"))
    }
}

pub fn keygen<R: Rng + ?Sized>(rng: &mut R) -> (PkePublicKey, PkeSecretKey) {
    let group = ExpGroup::new(PRIME_ORDER);
    let g = group.pow(group.base(), random_scalar(rng));
    let x = random_scalar(rng);
    let y = group.pow(g, x);
    let pk = PkePublicKey { group, g, y };
    (pk.clone(), PkeSecretKey { x, pk })
}

fn pad(group: &ExpGroup<Source>, shared: G1) -> [u8; 32] {
    Sha256::new()
        .chain_update(b"pnfv-pke-pad")
        .chain_update(group.encode(shared))
        .finalize()
        .into()
}

fn tag(group: &ExpGroup<Source>, shared: G1, block: &[u8]) -> [u8; TAG_BYTES] {
    let d = Sha256::new()
        .chain_update(b"pnfv-pke-tag")
        .chain_update(group.encode(shared))
        .chain_update(block)
        .finalize();
    d[..TAG_BYTES].try_into().expect("tag bytes")
}

impl PkePublicKey {
    pub fn encrypt<R: Rng + ?Sized>(&self, m: &[u8], rng: &mut R) -> Result<PkeCiphertext, CryptoError> {
        if m.len() > BLOCK_CAPACITY {
            return Err(CryptoError::MessageTooLong {
                len: m.len(),
                capacity: BLOCK_CAPACITY,
            });
        }
        let r = random_scalar(rng);
        let a = self.group.pow(self.g, r);
        let shared = self.group.pow(self.y, r);
        let mut block = [0u8; BLOCK_BYTES];
        block[0] = m.len() as u8;
        block[1..=m.len()].copy_from_slice(m);
        let t = tag(&self.group, shared, &block);
        let mask = pad(&self.group, shared);
        let mut out = [0u8; CIPHERTEXT_BYTES];
        out[..ELEMENT_BYTES].copy_from_slice(&self.group.encode(a));
        for (i, (b, k)) in block.iter().zip(mask.iter()).enumerate() {
            out[ELEMENT_BYTES + i] = b ^ k;
        }
        out[ELEMENT_BYTES + BLOCK_BYTES..].copy_from_slice(&t);
        Ok(PkeCiphertext(out))
    }

    pub fn to_key_bytes(&self) -> Vec<u8> {
        KeyFile::new(KeyKind::PkePublic, vec![self.g.exponent(), self.y.exponent()]).to_bytes()
    }

    pub fn from_key_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        let [g, y] = KeyFile::from_bytes(bytes, KeyKind::PkePublic)?.values::<2>()?;
        if g >= PRIME_ORDER || y >= PRIME_ORDER {
            return Err(CryptoError::Malformed("pke public key"));
        }
        Ok(Self {
            group: ExpGroup::new(PRIME_ORDER),
            g: G1::from_exponent(g),
            y: G1::from_exponent(y),
        })
    }
}

impl PkeSecretKey {
    pub fn public_key(&self) -> &PkePublicKey {
        &self.pk
    }

    pub fn decrypt(&self, c: &PkeCiphertext) -> Result<Vec<u8>, CryptoError> {
        let group = &self.pk.group;
        let a = group.decode(&c.0[..ELEMENT_BYTES])?;
        let shared = group.pow(a, self.x);
        let mask = pad(group, shared);
        let mut block = [0u8; BLOCK_BYTES];
        for (i, k) in mask.iter().enumerate() {
            block[i] = c.0[ELEMENT_BYTES + i] ^ k;
        }
        if tag(group, shared, &block)[..] != c.0[ELEMENT_BYTES + BLOCK_BYTES..] {
            return Err(CryptoError::IntegrityFailure);
        }
        let len = block[0] as usize;
        if len > BLOCK_CAPACITY {
            return Err(CryptoError::IntegrityFailure);
        }
        Ok(block[1..=len].to_vec())
    }

    pub fn to_key_bytes(&self) -> Vec<u8> {
        KeyFile::new(
            KeyKind::PkeSecret,
            vec![self.pk.g.exponent(), self.pk.y.exponent(), self.x],
        )
        .to_bytes()
    }

    pub fn from_key_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        let [g, y, x] = KeyFile::from_bytes(bytes, KeyKind::PkeSecret)?.values::<3>()?;
        let pk = PkePublicKey::from_key_bytes(&KeyFile::new(KeyKind::PkePublic, vec![g, y]).to_bytes())?;
        if x == 0 || x >= PRIME_ORDER {
            return Err(CryptoError::Malformed("pke secret key"));
        }
        Ok(Self { x, pk })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn round_trip_and_randomized() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let (pk, sk) = keygen(&mut rng);
        let m = b"\x00\x00\x00\x0a\x00\x01";
        let c1 = pk.encrypt(m, &mut rng).unwrap();
        let c2 = pk.encrypt(m, &mut rng).unwrap();
        assert_ne!(c1, c2);
        assert_eq!(sk.decrypt(&c1).unwrap(), m);
        assert_eq!(sk.decrypt(&c2).unwrap(), m);
    }

    #[test]
    fn wrong_key_is_flagged() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let (pk, _) = keygen(&mut rng);
        let (_, other) = keygen(&mut rng);
        let c = pk.encrypt(b"hello", &mut rng).unwrap();
        assert!(matches!(other.decrypt(&c), Err(CryptoError::IntegrityFailure)));
    }

    #[test]
    fn tampering_is_flagged() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let (pk, sk) = keygen(&mut rng);
        let c = pk.encrypt(b"hello", &mut rng).unwrap();
        let mut bytes = *c.as_bytes();
        bytes[40] ^= 1;
        let bad = PkeCiphertext::from_bytes(&bytes).unwrap();
        assert!(matches!(sk.decrypt(&bad), Err(CryptoError::IntegrityFailure)));
    }

    #[test]
    fn capacity_limit() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let (pk, sk) = keygen(&mut rng);
        let full = [7u8; BLOCK_CAPACITY];
        assert_eq!(sk.decrypt(&pk.encrypt(&full, &mut rng).unwrap()).unwrap(), full);
        assert!(pk.encrypt(&[0u8; BLOCK_CAPACITY + 1], &mut rng).is_err());
        assert_eq!(sk.decrypt(&pk.encrypt(b"", &mut rng).unwrap()).unwrap(), b"");
    }
}
