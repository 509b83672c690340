//! PNFV over searchable encryption, private against a weak adversary.
//!
//! The entry middlebox encrypts every field three ways, `E(x_l || l)`,
//! `Ɛ(x_l || l)` and `Ɛ(l)`, and shuffles all three with one permutation.
//! The cloud holds per-policy trapdoors `T(y || i)` and `T(j)` and the
//! replacement `E(z || j)`; a trapdoor hit on `Ɛ(x_l || l)` followed by a hit
//! of `T(j)` on `Ɛ(l')` swaps `E(z || j)` in at position `l'`.
//!
//! Each bundle also carries `Ɛ(z || j)`, which replaces the searchable
//! ciphertext at `l'`, so later policies test the updated value and the
//! policy list composes exactly.

use std::sync::Arc;

use rand::Rng;

use super::codec::{Reader, Writer};
use super::{check_function, index_keyword, keyword, parse_keyword, replace_value, SchemeError, SchemeId};
use crate::crypto::peks::{self as peks_crypto, PeksCiphertext, PeksPublicKey, PeksSecretKey, Trapdoor};
use crate::crypto::pke::{self, PkeCiphertext, PkePublicKey, PkeSecretKey};
use crate::crypto::prp::{Permutation, PrpKey};
use crate::netfn::{FieldIndex, Layout, Match, NetworkFunction, Packet};
use crate::ops::OpCounts;

/// Keys the entry and cloud middleboxes may hold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeksPublicKeys {
    pub peks: PeksPublicKey,
    pub pke: PkePublicKey,
}

/// Keys only the client middlebox holds.
#[derive(Clone, Debug)]
pub struct PeksClientKeys {
    pub peks: PeksSecretKey,
    pub pke: PkeSecretKey,
}

impl PeksClientKeys {
    pub fn public(&self) -> PeksPublicKeys {
        PeksPublicKeys {
            peks: self.peks.public_key().clone(),
            pke: self.pke.public_key().clone(),
        }
    }
}

pub fn keygen<R: Rng + ?Sized>(rng: &mut R) -> (PeksPublicKeys, PeksClientKeys) {
    let (_, peks) = peks_crypto::keygen(rng);
    let (_, pke) = pke::keygen(rng);
    let client = PeksClientKeys { peks, pke };
    (client.public(), client)
}

pub(crate) fn encrypt_field<R: Rng + ?Sized>(
    pk: &PkePublicKey,
    value: u64,
    index: FieldIndex,
    rng: &mut R,
) -> Result<PkeCiphertext, SchemeError> {
    Ok(pk.encrypt(&keyword(value, index), rng)?)
}

pub(crate) fn decrypt_field(sk: &PkeSecretKey, c: &PkeCiphertext) -> Result<(u64, FieldIndex), SchemeError> {
    parse_keyword(&sk.decrypt(c)?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeksBundle {
    /// `T(y || i)`
    pub match_trapdoor: Trapdoor,
    /// `T(j)`
    pub index_trapdoor: Trapdoor,
    /// `E(z || j)`
    pub replacement: PkeCiphertext,
    /// `Ɛ(z || j)`
    pub searchable_replacement: PeksCiphertext,
}

const BUNDLE_BYTES: usize =
    2 * peks_crypto::TRAPDOOR_BYTES + pke::CIPHERTEXT_BYTES + peks_crypto::CIPHERTEXT_BYTES;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeksFunction {
    bundles: Vec<PeksBundle>,
}

impl PeksFunction {
    pub fn bundles(&self) -> &[PeksBundle] {
        &self.bundles
    }

    pub fn to_bytes(&self, pks: &PeksPublicKeys) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(SchemeId::Peks as u8)
            .u16(u16::try_from(self.bundles.len()).expect("policy count fits u16"));
        for b in &self.bundles {
            let mut inner = Writer::new();
            inner
                .bytes(&pks.peks.encode_trapdoor(&b.match_trapdoor))
                .bytes(&pks.peks.encode_trapdoor(&b.index_trapdoor))
                .bytes(b.replacement.as_bytes())
                .bytes(&pks.peks.encode_ciphertext(&b.searchable_replacement));
            w.framed(&inner.finish());
        }
        w.finish()
    }

    pub fn from_bytes(pks: &PeksPublicKeys, bytes: &[u8]) -> Result<Self, SchemeError> {
        let mut r = Reader::new(bytes);
        if r.u8()? != SchemeId::Peks as u8 {
            return Err(SchemeError::Malformed("not a peks function"));
        }
        let count = r.u16()? as usize;
        let mut bundles = Vec::with_capacity(count);
        for _ in 0..count {
            let body = r.framed()?;
            if body.len() != BUNDLE_BYTES {
                return Err(SchemeError::Malformed("peks bundle length"));
            }
            let mut b = Reader::new(body);
            bundles.push(PeksBundle {
                match_trapdoor: pks.peks.decode_trapdoor(b.take(peks_crypto::TRAPDOOR_BYTES)?)?,
                index_trapdoor: pks.peks.decode_trapdoor(b.take(peks_crypto::TRAPDOOR_BYTES)?)?,
                replacement: PkeCiphertext::from_bytes(b.take(pke::CIPHERTEXT_BYTES)?)?,
                searchable_replacement: pks
                    .peks
                    .decode_ciphertext(b.take(peks_crypto::CIPHERTEXT_BYTES)?)?,
            });
        }
        r.finish()?;
        if bundles.is_empty() {
            return Err(SchemeError::Malformed("empty function"));
        }
        Ok(Self { bundles })
    }
}

/// Client side: trapdoors and replacement ciphertexts for every policy.
/// Only equality policies are supported.
pub fn transform<R: Rng + ?Sized>(
    keys: &PeksClientKeys,
    nf: &NetworkFunction,
    layout: &Layout,
    rng: &mut R,
    counts: &mut OpCounts,
) -> Result<PeksFunction, SchemeError> {
    check_function(nf, layout)?;
    let pks = keys.public();
    let mut bundles = Vec::with_capacity(nf.len());
    for p in nf.policies() {
        let Match::Equality { field: i, value: y } = p.matcher else {
            return Err(SchemeError::UnsupportedPolicy("range match"));
        };
        let (j, z) = replace_value(&p.action)?;
        counts.trapdoors += 2;
        counts.encryptions += 2;
        bundles.push(PeksBundle {
            match_trapdoor: keys.peks.trapdoor(&keyword(y, i)),
            index_trapdoor: keys.peks.trapdoor(&index_keyword(j)),
            replacement: encrypt_field(&pks.pke, z, j, rng)?,
            searchable_replacement: pks.peks.encrypt(&keyword(z, j), rng),
        });
    }
    Ok(PeksFunction { bundles })
}

/// What the entry middlebox hands the cloud: `σ(E(x || I))`,
/// `σ(Ɛ(x || I))` and `σ(Ɛ(I))` under one permutation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeksEntryOutput {
    pub fields: Vec<PkeCiphertext>,
    pub searchable: Vec<PeksCiphertext>,
    pub indices: Vec<PeksCiphertext>,
}

/// Entry side: encrypts and shuffles a packet with public keys only.
pub fn entry_process<R: Rng + ?Sized>(
    pks: &PeksPublicKeys,
    prp: &PrpKey,
    nonce: u64,
    x: &Packet,
    rng: &mut R,
    counts: &mut OpCounts,
) -> Result<PeksEntryOutput, SchemeError> {
    let n = x.len();
    let sigma = Permutation::shuffle(prp, nonce, n);
    let mut fields = Vec::with_capacity(n);
    let mut searchable = Vec::with_capacity(n);
    let mut indices = Vec::with_capacity(n);
    for (slot, &v) in x.values().iter().enumerate() {
        let l = FieldIndex::from_slot(slot);
        fields.push(encrypt_field(&pks.pke, v, l, rng)?);
        searchable.push(pks.peks.encrypt(&keyword(v, l), rng));
        indices.push(pks.peks.encrypt(&index_keyword(l), rng));
    }
    counts.encryptions += 3 * n as u64;
    Ok(PeksEntryOutput {
        fields: sigma.apply(&fields),
        searchable: sigma.apply(&searchable),
        indices: sigma.apply(&indices),
    })
}

/// Cloud side: runs the policies in order over the shuffled ciphertexts.
/// The output always has one ciphertext per field.
pub fn cloud_process(
    pks: &PeksPublicKeys,
    f: &PeksFunction,
    mut input: PeksEntryOutput,
    counts: &mut OpCounts,
) -> Result<Vec<PkeCiphertext>, SchemeError> {
    let n = input.fields.len();
    if input.searchable.len() != n || input.indices.len() != n {
        return Err(SchemeError::ShapeMismatch {
            expected: n,
            got: input.searchable.len().min(input.indices.len()),
        });
    }
    for b in &f.bundles {
        let mut hit = false;
        for s in &input.searchable {
            counts.tests += 1;
            counts.pairings += 1;
            if pks.peks.test(s, &b.match_trapdoor) {
                hit = true;
                break;
            }
        }
        if !hit {
            continue;
        }
        let mut target = None;
        for (l, c) in input.indices.iter().enumerate() {
            counts.index_tests += 1;
            counts.pairings += 1;
            if pks.peks.test(c, &b.index_trapdoor) {
                target = Some(l);
                break;
            }
        }
        let l = target.ok_or(SchemeError::Corrupted("matched policy has no action field"))?;
        input.fields[l] = b.replacement;
        input.searchable[l] = b.searchable_replacement;
    }
    Ok(input.fields)
}

/// Client side: decrypts `x_l || l` pairs and puts each value back at `l`.
pub fn decrypt(
    keys: &PeksClientKeys,
    layout: &Arc<Layout>,
    fields: &[PkeCiphertext],
    counts: &mut OpCounts,
) -> Result<Packet, SchemeError> {
    let n = layout.len();
    if fields.len() != n {
        return Err(SchemeError::ShapeMismatch {
            expected: n,
            got: fields.len(),
        });
    }
    let mut values: Vec<Option<u64>> = vec![None; n];
    for c in fields {
        counts.decryptions += 1;
        let (v, l) = decrypt_field(&keys.pke, c)?;
        let slot = values
            .get_mut(l.slot())
            .ok_or(SchemeError::Corrupted("field index out of range"))?;
        if slot.replace(v).is_some() {
            return Err(SchemeError::Corrupted("duplicate field index"));
        }
    }
    let values = values
        .into_iter()
        .map(|v| v.ok_or(SchemeError::Corrupted("missing field index")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Packet::new(layout.clone(), values)?)
}
