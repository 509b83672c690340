//! Private state table.
//!
//! An entry is a shuffled set of trapdoors `T(x_l || l)` over a subset of
//! fields, plus encrypted state and tag values. The cloud matches an entry
//! when every trapdoor hits some searchable field ciphertext of the packet;
//! on a hit it returns `E(id)`, `E(s)` and `E(t)` and skips static policies.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::codec::{Reader, Writer};
use super::peks::{decrypt_field, encrypt_field, PeksClientKeys, PeksPublicKeys};
use super::{keyword, SchemeError};
use crate::crypto::peks::{self as peks_crypto, PeksCiphertext, Trapdoor};
use crate::crypto::pke::{self, PkeCiphertext};
use crate::netfn::{ipv4, FieldIndex, NetfnError, Packet};
use crate::ops::OpCounts;

/// Largest entry id; ids travel in a 16-bit virtual field.
pub const MAX_ENTRY_ID: u32 = 0xFFFF;

/// Where the virtual id, state and tag values live in the packet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateFields {
    pub tag: FieldIndex,
    pub state: FieldIndex,
    pub id: FieldIndex,
}

impl StateFields {
    pub const IPV4: Self = Self {
        tag: ipv4::TAG,
        state: ipv4::STATE,
        id: ipv4::ID,
    };
}

impl Default for StateFields {
    fn default() -> Self {
        Self::IPV4
    }
}

/// Client-to-cloud request creating an entry: `(𝒯, E(s), E(t))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateRequest {
    pub trapdoors: Vec<Trapdoor>,
    pub enc_state: PkeCiphertext,
    pub enc_tag: PkeCiphertext,
}

impl StateRequest {
    pub fn to_bytes(&self, pks: &PeksPublicKeys) -> Vec<u8> {
        let mut w = Writer::new();
        w.u16(u16::try_from(self.trapdoors.len()).expect("few trapdoors"));
        for t in &self.trapdoors {
            w.bytes(&pks.peks.encode_trapdoor(t));
        }
        w.bytes(self.enc_state.as_bytes()).bytes(self.enc_tag.as_bytes());
        w.finish()
    }

    pub fn from_bytes(pks: &PeksPublicKeys, bytes: &[u8]) -> Result<Self, SchemeError> {
        let mut r = Reader::new(bytes);
        let count = r.u16()? as usize;
        let trapdoors = (0..count)
            .map(|_| Ok(pks.peks.decode_trapdoor(r.take(peks_crypto::TRAPDOOR_BYTES)?)?))
            .collect::<Result<Vec<_>, SchemeError>>()?;
        let enc_state = PkeCiphertext::from_bytes(r.take(pke::CIPHERTEXT_BYTES)?)?;
        let enc_tag = PkeCiphertext::from_bytes(r.take(pke::CIPHERTEXT_BYTES)?)?;
        r.finish()?;
        if trapdoors.is_empty() {
            return Err(SchemeError::Malformed("state entry without trapdoors"));
        }
        Ok(Self {
            trapdoors,
            enc_state,
            enc_tag,
        })
    }
}

/// Client side: builds an entry request over the fields in `tracked`.
#[allow(clippy::too_many_arguments)]
pub fn create<R: Rng + ?Sized>(
    keys: &PeksClientKeys,
    fields: StateFields,
    x: &Packet,
    tracked: &[FieldIndex],
    state: u64,
    tag: u64,
    rng: &mut R,
    counts: &mut OpCounts,
) -> Result<StateRequest, SchemeError> {
    if tracked.is_empty() {
        return Err(SchemeError::Malformed("state entry without tracked fields"));
    }
    let pke = keys.pke.public_key();
    let mut trapdoors = tracked
        .iter()
        .map(|&l| Ok(keys.peks.trapdoor(&keyword(x.get(l)?, l))))
        .collect::<Result<Vec<_>, NetfnError>>()?;
    trapdoors.shuffle(rng);
    counts.trapdoors += trapdoors.len() as u64;
    counts.encryptions += 2;
    Ok(StateRequest {
        trapdoors,
        enc_state: encrypt_field(pke, state, fields.state, rng)?,
        enc_tag: encrypt_field(pke, tag, fields.tag, rng)?,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateTableEntry {
    pub id: u32,
    pub trapdoors: Vec<Trapdoor>,
    pub enc_state: PkeCiphertext,
    pub enc_tag: PkeCiphertext,
}

/// What the cloud appends to a packet that hits an entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateAnnex {
    pub enc_id: PkeCiphertext,
    pub enc_state: PkeCiphertext,
    pub enc_tag: PkeCiphertext,
}

impl StateAnnex {
    pub const BYTES: usize = 3 * pke::CIPHERTEXT_BYTES;

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::BYTES);
        out.extend_from_slice(self.enc_id.as_bytes());
        out.extend_from_slice(self.enc_state.as_bytes());
        out.extend_from_slice(self.enc_tag.as_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SchemeError> {
        if bytes.len() != Self::BYTES {
            return Err(SchemeError::Malformed("state annex length"));
        }
        let c = pke::CIPHERTEXT_BYTES;
        Ok(Self {
            enc_id: PkeCiphertext::from_bytes(&bytes[..c])?,
            enc_state: PkeCiphertext::from_bytes(&bytes[c..2 * c])?,
            enc_tag: PkeCiphertext::from_bytes(&bytes[2 * c..])?,
        })
    }
}

/// Decrypted annex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateView {
    pub id: u32,
    pub state: u64,
    pub tag: u64,
}

/// Client-to-cloud maintenance messages: `id (4) || op (1) || body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StateMessage {
    Update { id: u32, enc_state: PkeCiphertext },
    Delete { id: u32 },
}

const OP_UPDATE: u8 = 1;
const OP_DELETE: u8 = 2;

impl StateMessage {
    pub fn id(&self) -> u32 {
        match *self {
            StateMessage::Update { id, .. } | StateMessage::Delete { id } => id,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u32(self.id());
        match self {
            StateMessage::Update { enc_state, .. } => {
                w.u8(OP_UPDATE).bytes(enc_state.as_bytes());
            }
            StateMessage::Delete { .. } => {
                w.u8(OP_DELETE);
            }
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SchemeError> {
        let mut r = Reader::new(bytes);
        let id = r.u32()?;
        let msg = match r.u8()? {
            OP_UPDATE => StateMessage::Update {
                id,
                enc_state: PkeCiphertext::from_bytes(r.take(pke::CIPHERTEXT_BYTES)?)?,
            },
            OP_DELETE => StateMessage::Delete { id },
            _ => return Err(SchemeError::Malformed("state message op")),
        };
        r.finish()?;
        Ok(msg)
    }
}

/// Client side: `(id, E(s'))`.
pub fn update_message<R: Rng + ?Sized>(
    keys: &PeksClientKeys,
    fields: StateFields,
    id: u32,
    state: u64,
    rng: &mut R,
    counts: &mut OpCounts,
) -> Result<StateMessage, SchemeError> {
    counts.encryptions += 1;
    Ok(StateMessage::Update {
        id,
        enc_state: encrypt_field(keys.pke.public_key(), state, fields.state, rng)?,
    })
}

/// The cloud's table. Lookups take `&self`; changes take `&mut self`.
#[derive(Clone, Debug, Default)]
pub struct StateTable {
    fields: StateFields,
    entries: BTreeMap<u32, StateTableEntry>,
    next_id: u32,
}

impl StateTable {
    pub fn new(fields: StateFields) -> Self {
        Self {
            fields,
            entries: BTreeMap::new(),
            next_id: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&StateTableEntry> {
        self.entries.get(&id)
    }

    pub fn register(&mut self, req: StateRequest) -> Result<u32, SchemeError> {
        if self.next_id == 0 {
            self.next_id = 1;
        }
        if self.next_id > MAX_ENTRY_ID {
            return Err(SchemeError::TableFull);
        }
        let id = self.next_id;
        self.next_id += 1;
        self.entries.insert(
            id,
            StateTableEntry {
                id,
                trapdoors: req.trapdoors,
                enc_state: req.enc_state,
                enc_tag: req.enc_tag,
            },
        );
        Ok(id)
    }

    /// First entry whose every trapdoor hits some searchable ciphertext.
    pub fn lookup(
        &self,
        pks: &PeksPublicKeys,
        searchable: &[PeksCiphertext],
        counts: &mut OpCounts,
    ) -> Option<u32> {
        let hits = |t: &Trapdoor, counts: &mut OpCounts| {
            searchable.iter().any(|s| {
                counts.state_tests += 1;
                counts.pairings += 1;
                pks.peks.test(s, t)
            })
        };
        self.entries
            .values()
            .find(|e| e.trapdoors.iter().all(|t| hits(t, counts)))
            .map(|e| e.id)
    }

    pub fn annex<R: Rng + ?Sized>(
        &self,
        pks: &PeksPublicKeys,
        id: u32,
        rng: &mut R,
        counts: &mut OpCounts,
    ) -> Result<StateAnnex, SchemeError> {
        let e = self.entries.get(&id).ok_or(SchemeError::UnknownEntry(id))?;
        counts.encryptions += 1;
        Ok(StateAnnex {
            enc_id: encrypt_field(&pks.pke, id as u64, self.fields.id, rng)?,
            enc_state: e.enc_state,
            enc_tag: e.enc_tag,
        })
    }

    pub fn update(&mut self, id: u32, enc_state: PkeCiphertext) -> Result<(), SchemeError> {
        self.entries
            .get_mut(&id)
            .map(|e| e.enc_state = enc_state)
            .ok_or(SchemeError::UnknownEntry(id))
    }

    pub fn delete(&mut self, id: u32) -> Result<(), SchemeError> {
        self.entries
            .remove(&id)
            .map(|_| ())
            .ok_or(SchemeError::UnknownEntry(id))
    }

    pub fn apply(&mut self, msg: StateMessage) -> Result<(), SchemeError> {
        match msg {
            StateMessage::Update { id, enc_state } => self.update(id, enc_state),
            StateMessage::Delete { id } => self.delete(id),
        }
    }
}

/// Client side: decrypts an annex and checks each value sits at the
/// expected virtual field.
pub fn open_annex(
    keys: &PeksClientKeys,
    fields: StateFields,
    annex: &StateAnnex,
    counts: &mut OpCounts,
) -> Result<StateView, SchemeError> {
    let mut open = |c: &PkeCiphertext, want: FieldIndex| {
        counts.decryptions += 1;
        let (v, at) = decrypt_field(&keys.pke, c)?;
        if at != want {
            return Err(SchemeError::Corrupted("state value at unexpected field"));
        }
        Ok(v)
    };
    let id = open(&annex.enc_id, fields.id)?;
    let state = open(&annex.enc_state, fields.state)?;
    let tag = open(&annex.enc_tag, fields.tag)?;
    Ok(StateView {
        id: id as u32,
        state,
        tag,
    })
}

impl StateView {
    /// Writes id, state and tag into their virtual fields.
    pub fn apply_to(&self, fields: StateFields, x: &mut Packet) -> Result<(), SchemeError> {
        x.set(fields.id, self.id as u64)?;
        x.set(fields.state, self.state)?;
        x.set(fields.tag, self.tag)?;
        Ok(())
    }
}
