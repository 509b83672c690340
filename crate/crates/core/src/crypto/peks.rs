//! Public-key encryption with keyword search, in the Boneh–Di Crescenzo–
//! Ostrovsky–Persiano style over a prime-order pairing group.
//!
//! `Ɛ(w) = (g^r, H2(e(H1(w), pk^r)))`, `T(w) = H1(w)^s`, and
//! `test((A, B), T) = [H2(e(T, A)) == B]`.

use rand::Rng;
use sha2::{Digest, Sha256};

use super::group::{CyclicGroup, ExpPairing, Pairing, ELEMENT_BYTES, G1};
use super::keyfile::{KeyFile, KeyKind};
use super::CryptoError;

/// Order of the PEKS/PKE groups (the Mersenne prime 2^61 - 1).
pub const PRIME_ORDER: u128 = (1 << 61) - 1;

pub const DIGEST_BYTES: usize = 32;
pub const CIPHERTEXT_BYTES: usize = ELEMENT_BYTES + DIGEST_BYTES;
pub const TRAPDOOR_BYTES: usize = ELEMENT_BYTES;

/// Random-oracle hash into `[1, p)`.
pub(crate) fn hash_to_scalar(domain: &[u8], data: &[u8]) -> u128 {
    let digest = Sha256::new()
        .chain_update(domain)
        .chain_update((data.len() as u64).to_be_bytes())
        .chain_update(data)
        .finalize();
    let wide = u128::from_be_bytes(digest[..16].try_into().expect("16 bytes"));
    1 + wide % (PRIME_ORDER - 1)
}

pub(crate) fn random_scalar<R: Rng + ?Sized>(rng: &mut R) -> u128 {
    rng.gen_range(1..PRIME_ORDER)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeksPublicKey {
    pairing: ExpPairing,
    g: G1,
    y: G1,
}

#[derive(Clone, Debug)]
pub struct PeksSecretKey {
    s: u128,
    pk: PeksPublicKey,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeksCiphertext {
    a: G1,
    b: [u8; DIGEST_BYTES],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Trapdoor {
    t: G1,
}

pub fn keygen<R: Rng + ?Sized>(rng: &mut R) -> (PeksPublicKey, PeksSecretKey) {
    let pairing = ExpPairing::new(PRIME_ORDER);
    let g1 = pairing.g1();
    let g = g1.pow(g1.base(), random_scalar(rng));
    let s = random_scalar(rng);
    let y = g1.pow(g, s);
    let pk = PeksPublicKey { pairing, g, y };
    (pk.clone(), PeksSecretKey { s, pk })
}

impl PeksPublicKey {
    fn h1(&self, w: &[u8]) -> G1 {
        let g1 = self.pairing.g1();
        g1.pow(g1.base(), hash_to_scalar(b"pnfv-peks-h1", w))
    }

    fn h2(&self, t: <<ExpPairing as Pairing>::Gt as CyclicGroup>::Elem) -> [u8; DIGEST_BYTES] {
        Sha256::new()
            .chain_update(b"pnfv-peks-h2")
            .chain_update(self.pairing.gt().encode(t))
            .finalize()
            .into()
    }

    pub fn encrypt<R: Rng + ?Sized>(&self, w: &[u8], rng: &mut R) -> PeksCiphertext {
        let g1 = self.pairing.g1();
        let r = random_scalar(rng);
        let a = g1.pow(self.g, r);
        let b = self.h2(self.pairing.pair(self.h1(w), g1.pow(self.y, r)));
        PeksCiphertext { a, b }
    }

    /// 1 iff the ciphertext and trapdoor were made for the same keyword.
    pub fn test(&self, c: &PeksCiphertext, t: &Trapdoor) -> bool {
        self.h2(self.pairing.pair(t.t, c.a)) == c.b
    }

    pub fn encode_ciphertext(&self, c: &PeksCiphertext) -> [u8; CIPHERTEXT_BYTES] {
        let mut out = [0u8; CIPHERTEXT_BYTES];
        out[..ELEMENT_BYTES].copy_from_slice(&self.pairing.g1().encode(c.a));
        out[ELEMENT_BYTES..].copy_from_slice(&c.b);
        out
    }

    pub fn decode_ciphertext(&self, bytes: &[u8]) -> Result<PeksCiphertext, CryptoError> {
        if bytes.len() != CIPHERTEXT_BYTES {
            return Err(CryptoError::Malformed("peks ciphertext length"));
        }
        Ok(PeksCiphertext {
            a: self.pairing.g1().decode(&bytes[..ELEMENT_BYTES])?,
            b: bytes[ELEMENT_BYTES..].try_into().expect("digest"),
        })
    }

    pub fn encode_trapdoor(&self, t: &Trapdoor) -> [u8; TRAPDOOR_BYTES] {
        self.pairing.g1().encode(t.t)
    }

    pub fn decode_trapdoor(&self, bytes: &[u8]) -> Result<Trapdoor, CryptoError> {
        Ok(Trapdoor {
            t: self.pairing.g1().decode(bytes)?,
        })
    }

    pub fn to_key_bytes(&self) -> Vec<u8> {
        KeyFile::new(KeyKind::PeksPublic, vec![self.g.exponent(), self.y.exponent()]).to_bytes()
    }

    pub fn from_key_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        let [g, y] = KeyFile::from_bytes(bytes, KeyKind::PeksPublic)?.values::<2>()?;
        if g >= PRIME_ORDER || y >= PRIME_ORDER {
            return Err(CryptoError::Malformed("peks public key"));
        }
        Ok(Self {
            pairing: ExpPairing::new(PRIME_ORDER),
            g: G1::from_exponent(g),
            y: G1::from_exponent(y),
        })
    }
}

impl PeksSecretKey {
    pub fn public_key(&self) -> &PeksPublicKey {
        &self.pk
    }

    /// `T(w) = H1(w)^s`, deterministic in `(s, w)`.
    pub fn trapdoor(&self, w: &[u8]) -> Trapdoor {
        Trapdoor {
            t: self.pk.pairing.g1().pow(self.pk.h1(w), self.s),
        }
    }

    pub fn to_key_bytes(&self) -> Vec<u8> {
        KeyFile::new(
            KeyKind::PeksSecret,
            vec![self.pk.g.exponent(), self.pk.y.exponent(), self.s],
        )
        .to_bytes()
    }

    pub fn from_key_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        let [g, y, s] = KeyFile::from_bytes(bytes, KeyKind::PeksSecret)?.values::<3>()?;
        let pk = PeksPublicKey::from_key_bytes(&KeyFile::new(KeyKind::PeksPublic, vec![g, y]).to_bytes())?;
        if s == 0 || s >= PRIME_ORDER {
            return Err(CryptoError::Malformed("peks secret key"));
        }
        Ok(Self { s, pk })
    }
}
