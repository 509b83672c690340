//! Cloud-to-client encapsulation.
//!
//! ```text
//! outer IPv4 (20) | inner frame (14 + ip total length) | PNFV payload
//! PNFV payload  = scheme (4 bits) | id (20 bits, big-endian) | body
//! ```
//!
//! BGN bodies are a fixed 96 bytes. Every other body carries a 2-byte
//! big-endian length prefix.

use std::net::Ipv4Addr;

use crate::crypto::pke::{self, PkeCiphertext};
use crate::schemes::bgn::{BgnCompact, COMPACT_BYTES};
use crate::schemes::{Reader, SchemeId, Writer};

use super::frame::{ipv4_checksum, ipv4_header, RawFrame, IPV4_HEADER_BYTES, MAC_HEADER_BYTES};
use super::SimError;

pub const PAYLOAD_HEADER_BYTES: usize = 3;
pub const MAX_PAYLOAD_ID: u32 = (1 << 20) - 1;
/// Protocol number of the outer header (reserved for experimentation).
pub const PNFV_PROTOCOL: u8 = 253;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PnfvPayload {
    pub scheme: SchemeId,
    /// Policy id for BGN payloads, state table entry id on a table hit.
    pub id: u32,
    pub body: Vec<u8>,
}

impl PnfvPayload {
    pub fn new(scheme: SchemeId, id: u32, body: Vec<u8>) -> Result<Self, SimError> {
        let p = Self { scheme, id, body };
        p.check()?;
        Ok(p)
    }

    pub fn bgn(id: u32, compact: &BgnCompact, pk: &crate::crypto::BgnPublicKey) -> Result<Self, SimError> {
        Self::new(SchemeId::Bgn, id, compact.to_bytes(pk).to_vec())
    }

    fn check(&self) -> Result<(), SimError> {
        if self.id > MAX_PAYLOAD_ID {
            return Err(SimError::IdTooWide { id: self.id });
        }
        match self.scheme {
            SchemeId::Bgn if self.body.len() != COMPACT_BYTES => Err(SimError::LengthMismatch {
                expected: COMPACT_BYTES,
                got: self.body.len(),
            }),
            SchemeId::Bgn => Ok(()),
            _ if self.body.len() > usize::from(u16::MAX) => {
                Err(SimError::MalformedHeader("payload body too long"))
            }
            _ => Ok(()),
        }
    }

    /// Encoded length.
    pub fn len(&self) -> usize {
        PAYLOAD_HEADER_BYTES
            + match self.scheme {
                SchemeId::Bgn => COMPACT_BYTES,
                _ => 2 + self.body.len(),
            }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, SimError> {
        self.check()?;
        let mut out = Vec::with_capacity(self.len());
        let header = ((self.scheme as u32) << 20) | self.id;
        out.extend_from_slice(&header.to_be_bytes()[1..]);
        if self.scheme != SchemeId::Bgn {
            out.extend_from_slice(&(self.body.len() as u16).to_be_bytes());
        }
        out.extend_from_slice(&self.body);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SimError> {
        if bytes.len() < PAYLOAD_HEADER_BYTES {
            return Err(SimError::MalformedHeader("payload header"));
        }
        let header = u32::from_be_bytes([0, bytes[0], bytes[1], bytes[2]]);
        let raw = (header >> 20) as u8;
        let scheme = SchemeId::from_u8(raw).ok_or(SimError::UnknownScheme(raw))?;
        let id = header & MAX_PAYLOAD_ID;
        let rest = &bytes[PAYLOAD_HEADER_BYTES..];
        let body = if scheme == SchemeId::Bgn {
            rest.to_vec()
        } else {
            if rest.len() < 2 {
                return Err(SimError::MalformedHeader("payload length prefix"));
            }
            let len = usize::from(u16::from_be_bytes([rest[0], rest[1]]));
            if rest.len() != 2 + len {
                return Err(SimError::LengthMismatch {
                    expected: 2 + len,
                    got: rest.len(),
                });
            }
            rest[2..].to_vec()
        };
        Self::new(scheme, id, body)
    }
}

/// Length-prefixed ciphertext list, the body of PEKS and state payloads.
pub fn ciphertext_list(cts: &[PkeCiphertext]) -> Vec<u8> {
    let mut w = Writer::new();
    for c in cts {
        w.u16(pke::CIPHERTEXT_BYTES as u16).bytes(c.as_bytes());
    }
    w.finish()
}

pub fn parse_ciphertext_list(body: &[u8]) -> Result<Vec<PkeCiphertext>, SimError> {
    let mut r = Reader::new(body);
    let mut out = Vec::new();
    while r.remaining() > 0 {
        let len = usize::from(r.u16()?);
        out.push(PkeCiphertext::from_bytes(r.take(len)?)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncapsulatedPacket {
    pub cloud: Ipv4Addr,
    pub client: Ipv4Addr,
    pub inner: RawFrame,
    pub payload: PnfvPayload,
}

impl EncapsulatedPacket {
    /// `|x| + 20 + |payload|`
    pub fn len(&self) -> usize {
        self.inner.len() + IPV4_HEADER_BYTES + self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, SimError> {
        let payload = self.payload.to_bytes()?;
        let total = u16::try_from(self.len())
            .map_err(|_| SimError::MalformedHeader("encapsulated packet too long"))?;
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&ipv4_header(self.cloud, self.client, PNFV_PROTOCOL, total));
        out.extend_from_slice(self.inner.as_bytes());
        out.extend_from_slice(&payload);
        Ok(out)
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, SimError> {
        if bytes.len() < IPV4_HEADER_BYTES {
            return Err(SimError::TruncatedFrame { len: bytes.len() });
        }
        let outer = &bytes[..IPV4_HEADER_BYTES];
        if outer[0] != 0x45 || outer[9] != PNFV_PROTOCOL {
            return Err(SimError::MalformedHeader("outer header"));
        }
        if u16::from_be_bytes([outer[10], outer[11]]) != ipv4_checksum(outer) {
            return Err(SimError::MalformedHeader("outer checksum"));
        }
        let total = usize::from(u16::from_be_bytes([outer[2], outer[3]]));
        if total != bytes.len() {
            return Err(SimError::LengthMismatch {
                expected: total,
                got: bytes.len(),
            });
        }
        let rest = &bytes[IPV4_HEADER_BYTES..];
        let ip = MAC_HEADER_BYTES;
        if rest.len() < ip + 4 {
            return Err(SimError::TruncatedFrame { len: rest.len() });
        }
        let inner_len = MAC_HEADER_BYTES + usize::from(u16::from_be_bytes([rest[ip + 2], rest[ip + 3]]));
        if inner_len > rest.len() {
            return Err(SimError::TruncatedFrame { len: rest.len() });
        }
        let inner = RawFrame::parse(&rest[..inner_len])?;
        let payload = PnfvPayload::from_bytes(&rest[inner_len..])?;
        let addr = |at: usize| Ipv4Addr::new(outer[at], outer[at + 1], outer[at + 2], outer[at + 3]);
        Ok(Self {
            cloud: addr(12),
            client: addr(16),
            inner,
            payload,
        })
    }
}

pub fn encapsulate(
    x: &RawFrame,
    p: &PnfvPayload,
    cloud: Ipv4Addr,
    client: Ipv4Addr,
) -> Result<EncapsulatedPacket, SimError> {
    let e = EncapsulatedPacket {
        cloud,
        client,
        inner: x.clone(),
        payload: p.clone(),
    };
    p.check()?;
    if e.len() > usize::from(u16::MAX) {
        return Err(SimError::MalformedHeader("encapsulated packet too long"));
    }
    Ok(e)
}

pub fn decapsulate(bytes: &[u8]) -> Result<(RawFrame, PnfvPayload), SimError> {
    let e = EncapsulatedPacket::parse(bytes)?;
    Ok((e.inner, e.payload))
}
