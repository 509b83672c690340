//! PNFV over a fully homomorphic backend.
//!
//! Each field is carried both as an integer ciphertext and as LSB-first bit
//! ciphertexts. Per policy the cloud selects the match field with `E(e_i)`,
//! evaluates the comparison circuit to get `E(m)`, and updates every field
//! `k` as `x_k + m·e_j[k]·(z - x_k)` in both representations. Policies chain,
//! so the result is exactly `psi_N(...psi_1(x)...)`.

use std::cell::Cell;
use std::sync::Arc;

use rand::Rng;

use super::codec::{Reader, Writer};
use super::{check_function, replace_value, unit, SchemeError, SchemeId};
use crate::crypto::mockfhe::{self, FheBits, FheCiphertext, FheEval, FhePublicKey, FheSecretKey};
use crate::crypto::CryptoError;
use crate::netfn::{Layout, Match, NetworkFunction, Packet};
use crate::ops::OpCounts;

pub use crate::crypto::mockfhe::keygen;

type Ct = FheCiphertext;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FheMatch {
    Equality { y: FheBits },
    Range { low: FheBits, high: FheBits },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FheBundle {
    pub e_i: Vec<Ct>,
    pub e_j: Vec<Ct>,
    pub matcher: FheMatch,
    pub z: Ct,
    pub z_bits: FheBits,
}

impl FheBundle {
    pub fn ciphertext_count(&self) -> usize {
        let m = match &self.matcher {
            FheMatch::Equality { y } => y.0.len(),
            FheMatch::Range { low, high } => low.0.len() + high.0.len(),
        };
        self.e_i.len() + self.e_j.len() + m + 1 + self.z_bits.0.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FheFunction {
    n: usize,
    /// Bit width of the comparison circuits: the widest field in the layout.
    width: u32,
    bundles: Vec<FheBundle>,
}

impl FheFunction {
    pub fn bundles(&self) -> &[FheBundle] {
        &self.bundles
    }

    pub fn ciphertext_count(&self) -> usize {
        self.bundles.iter().map(FheBundle::ciphertext_count).sum()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(SchemeId::Fhe as u8)
            .u16(u16::try_from(self.bundles.len()).expect("policy count fits u16"));
        for b in &self.bundles {
            let mut inner = Writer::new();
            let range = matches!(b.matcher, FheMatch::Range { .. });
            inner.u8(u8::from(range)).u16(self.n as u16).u8(self.width as u8);
            let mut put = |cs: &[Ct]| {
                for c in cs {
                    inner.bytes(&c.to_bytes());
                }
            };
            put(&b.e_i);
            put(&b.e_j);
            match &b.matcher {
                FheMatch::Equality { y } => put(&y.0),
                FheMatch::Range { low, high } => {
                    put(&low.0);
                    put(&high.0);
                }
            }
            put(std::slice::from_ref(&b.z));
            put(&b.z_bits.0);
            w.framed(&inner.finish());
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SchemeError> {
        fn cts(r: &mut Reader<'_>, count: usize) -> Result<Vec<Ct>, SchemeError> {
            (0..count)
                .map(|_| Ok(Ct::from_bytes(r.take(mockfhe::CIPHERTEXT_BYTES)?)?))
                .collect()
        }
        let mut r = Reader::new(bytes);
        if r.u8()? != SchemeId::Fhe as u8 {
            return Err(SchemeError::Malformed("not an fhe function"));
        }
        let count = r.u16()? as usize;
        let mut shape = None;
        let mut bundles = Vec::with_capacity(count);
        for _ in 0..count {
            let mut b = Reader::new(r.framed()?);
            let range = match b.u8()? {
                0 => false,
                1 => true,
                _ => return Err(SchemeError::Malformed("bundle kind")),
            };
            let n = b.u16()? as usize;
            let width = b.u8()? as usize;
            if n == 0 || width == 0 {
                return Err(SchemeError::Malformed("empty bundle"));
            }
            if *shape.get_or_insert((n, width)) != (n, width) {
                return Err(SchemeError::Malformed("inconsistent bundle shapes"));
            }
            let e_i = cts(&mut b, n)?;
            let e_j = cts(&mut b, n)?;
            let matcher = if range {
                FheMatch::Range {
                    low: FheBits(cts(&mut b, width)?),
                    high: FheBits(cts(&mut b, width)?),
                }
            } else {
                FheMatch::Equality {
                    y: FheBits(cts(&mut b, width)?),
                }
            };
            let z = cts(&mut b, 1)?[0];
            let z_bits = FheBits(cts(&mut b, width)?);
            b.finish()?;
            bundles.push(FheBundle {
                e_i,
                e_j,
                matcher,
                z,
                z_bits,
            });
        }
        r.finish()?;
        let (n, width) = shape.ok_or(SchemeError::Malformed("empty function"))?;
        Ok(Self {
            n,
            width: width as u32,
            bundles,
        })
    }
}

/// Gate-counting view of a public key.
struct Counted<'a> {
    pk: &'a FhePublicKey,
    adds: Cell<u64>,
    muls: Cell<u64>,
}

impl<'a> Counted<'a> {
    fn new(pk: &'a FhePublicKey) -> Self {
        Self {
            pk,
            adds: Cell::new(0),
            muls: Cell::new(0),
        }
    }

    fn flush(&self, counts: &mut OpCounts) {
        counts.homomorphic_adds += self.adds.get();
        counts.homomorphic_muls += self.muls.get();
    }
}

impl FheEval for Counted<'_> {
    fn add(&self, a: &Ct, b: &Ct) -> Result<Ct, CryptoError> {
        self.adds.set(self.adds.get() + 1);
        self.pk.add(a, b)
    }

    fn sub(&self, a: &Ct, b: &Ct) -> Result<Ct, CryptoError> {
        self.adds.set(self.adds.get() + 1);
        self.pk.sub(a, b)
    }

    fn mul(&self, a: &Ct, b: &Ct) -> Result<Ct, CryptoError> {
        self.muls.set(self.muls.get() + 1);
        self.pk.mul(a, b)
    }

    fn not(&self, a: &Ct) -> Result<Ct, CryptoError> {
        self.adds.set(self.adds.get() + 1);
        self.pk.not(a)
    }
}

fn encrypt_bits<R: Rng + ?Sized>(
    pk: &FhePublicKey,
    m: u64,
    width: u32,
    rng: &mut R,
    counts: &mut OpCounts,
) -> FheBits {
    counts.encryptions += width as u64;
    pk.encrypt_bits(m, width, rng)
}

fn encrypt_vec<R: Rng + ?Sized>(
    pk: &FhePublicKey,
    values: impl Iterator<Item = u64>,
    rng: &mut R,
    counts: &mut OpCounts,
) -> Vec<Ct> {
    values
        .map(|v| {
            counts.encryptions += 1;
            pk.encrypt(v, rng)
        })
        .collect()
}

/// Client side: encrypts every policy into a bundle.
pub fn transform<R: Rng + ?Sized>(
    pk: &FhePublicKey,
    nf: &NetworkFunction,
    layout: &Layout,
    rng: &mut R,
    counts: &mut OpCounts,
) -> Result<FheFunction, SchemeError> {
    check_function(nf, layout)?;
    let n = layout.len();
    let width = layout.max_width() as u32;
    let mut bundles = Vec::with_capacity(nf.len());
    for p in nf.policies() {
        let (j, z) = replace_value(&p.action)?;
        let (i, matcher) = match p.matcher {
            Match::Equality { field, value } => (
                field,
                FheMatch::Equality {
                    y: encrypt_bits(pk, value, width, rng, counts),
                },
            ),
            Match::Range { field, low, high } => (
                field,
                FheMatch::Range {
                    low: encrypt_bits(pk, low, width, rng, counts),
                    high: encrypt_bits(pk, high, width, rng, counts),
                },
            ),
        };
        let e_i = encrypt_vec(pk, unit(n, i), rng, counts);
        let e_j = encrypt_vec(pk, unit(n, j), rng, counts);
        counts.encryptions += 1;
        let z_ct = pk.encrypt(z, rng);
        let z_bits = encrypt_bits(pk, z, width, rng, counts);
        bundles.push(FheBundle {
            e_i,
            e_j,
            matcher,
            z: z_ct,
            z_bits,
        });
    }
    Ok(FheFunction { n, width, bundles })
}

/// An encrypted packet: integer and bit forms of every field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FhePacket {
    ints: Vec<Ct>,
    bits: Vec<FheBits>,
}

impl FhePacket {
    pub fn len(&self) -> usize {
        self.ints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ints.is_empty()
    }

    pub fn ciphertext_count(&self) -> usize {
        self.ints.len() + self.bits.iter().map(|b| b.0.len()).sum::<usize>()
    }

    /// `u16 n`, then per field the integer ciphertext, a width byte and the
    /// bit ciphertexts.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u16(u16::try_from(self.ints.len()).expect("field count fits u16"));
        for (c, bits) in self.ints.iter().zip(&self.bits) {
            w.bytes(&c.to_bytes()).u8(bits.0.len() as u8);
            for b in &bits.0 {
                w.bytes(&b.to_bytes());
            }
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SchemeError> {
        let mut r = Reader::new(bytes);
        let n = r.u16()? as usize;
        let mut ints = Vec::with_capacity(n);
        let mut bits = Vec::with_capacity(n);
        for _ in 0..n {
            ints.push(Ct::from_bytes(r.take(mockfhe::CIPHERTEXT_BYTES)?)?);
            let width = r.u8()? as usize;
            let field = (0..width)
                .map(|_| Ok(Ct::from_bytes(r.take(mockfhe::CIPHERTEXT_BYTES)?)?))
                .collect::<Result<Vec<_>, SchemeError>>()?;
            bits.push(FheBits(field));
        }
        r.finish()?;
        Ok(Self { ints, bits })
    }
}

pub fn encrypt_packet<R: Rng + ?Sized>(
    pk: &FhePublicKey,
    x: &Packet,
    rng: &mut R,
    counts: &mut OpCounts,
) -> FhePacket {
    let layout = x.layout();
    let ints = encrypt_vec(pk, x.values().iter().copied(), rng, counts);
    let bits = x
        .values()
        .iter()
        .zip(layout.fields())
        .map(|(&v, f)| encrypt_bits(pk, v, f.bit_width as u32, rng, counts))
        .collect();
    FhePacket { ints, bits }
}

fn select_bits(ev: &Counted<'_>, e_i: &[Ct], x: &FhePacket, width: u32) -> Result<FheBits, SchemeError> {
    let zero = ev.pk.sub(&e_i[0], &e_i[0])?;
    let mut out = Vec::with_capacity(width as usize);
    for b in 0..width as usize {
        let mut acc = zero;
        for (k, bits) in x.bits.iter().enumerate() {
            if let Some(bit) = bits.0.get(b) {
                acc = ev.add(&acc, &ev.mul(&e_i[k], bit)?)?;
            }
        }
        out.push(acc);
    }
    Ok(FheBits(out))
}

/// Cloud side: applies every policy in order to the encrypted packet.
pub fn process(
    pk: &FhePublicKey,
    f: &FheFunction,
    x: &FhePacket,
    counts: &mut OpCounts,
) -> Result<FhePacket, SchemeError> {
    if x.ints.len() != f.n || x.bits.len() != f.n {
        return Err(SchemeError::ShapeMismatch {
            expected: f.n,
            got: x.ints.len(),
        });
    }
    let ev = Counted::new(pk);
    let mut cur = x.clone();
    for bundle in &f.bundles {
        let selected = select_bits(&ev, &bundle.e_i, &cur, f.width)?;
        let m = match &bundle.matcher {
            FheMatch::Equality { y } => ev.and_eq_circuit(&selected, y)?,
            FheMatch::Range { low, high } => {
                let above = ev.geq_circuit(&selected, low)?;
                let below = ev.leq_circuit(&selected, high)?;
                ev.mul(&above, &below)?
            }
        };
        for k in 0..f.n {
            let gate = ev.mul(&m, &bundle.e_j[k])?;
            cur.ints[k] = ev.select(&gate, &cur.ints[k], &bundle.z)?;
            for (b, bit) in cur.bits[k].0.iter_mut().enumerate() {
                *bit = ev.select(&gate, bit, &bundle.z_bits.0[b])?;
            }
        }
    }
    ev.flush(counts);
    Ok(cur)
}

/// Client side: decrypts the integer form of every field.
pub fn decrypt(
    sk: &FheSecretKey,
    layout: &Arc<Layout>,
    x: &FhePacket,
    counts: &mut OpCounts,
) -> Result<Packet, SchemeError> {
    counts.decryptions += x.ints.len() as u64;
    let values = x
        .ints
        .iter()
        .map(|c| sk.decrypt(c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Packet::new(layout.clone(), values)?)
}
