//! PNFV over BGN.
//!
//! For each policy the client publishes encrypted unit vectors selecting the
//! match field `i` and action field `j`. The cloud computes, per policy,
//!
//! * equality: `E(c) = E(1) - <E(x), E(e_i)> + E(y)`, so `c = 1` iff `x_i = y`;
//! * range: `E(c) = -<E(x∘x), E(e_i)> + <E(x), E((a+b) e_i)> - E(ab)`, so
//!   `c = (b - x_i)(x_i - a) >= 0` iff `a <= x_i <= b`;
//! * action: `E(a(x)) = E(x) - E(x)∘E(e_j) + E(z e_j)`,
//!
//! and returns `(E(x), E(a(x)), E(c))` for every policy. BGN allows a single
//! multiplication, so the cloud cannot chain policies: every match is
//! evaluated against the packet as received, and the client applies the
//! matched writes in list order. This equals sequential evaluation whenever
//! no policy matches on a field written by an earlier one.

use std::sync::Arc;

use rand::Rng;

use super::codec::{Reader, Writer};
use super::{check_function, replace_value, unit, SchemeError, SchemeId};
use crate::crypto::bgn::{BgnCiphertext, BgnPublicKey, BgnSecretKey, Level};
use crate::crypto::ELEMENT_BYTES;
use crate::netfn::{Layout, Match, NetworkFunction, Packet};
use crate::ops::OpCounts;

pub use crate::crypto::bgn::{keygen, DEFAULT_PRIME_BITS};

type Ct = BgnCiphertext;

/// Widest field a range policy may test; keeps `c` within `[-2^32, 2^32)`.
pub const MAX_RANGE_WIDTH: u8 = 16;
/// Search bound for signed range results.
const RANGE_BOUND: u64 = 1 << 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BgnBundle {
    Equality {
        one: Ct,
        e_i: Vec<Ct>,
        y: Ct,
        e_j: Vec<Ct>,
        z_e_j: Vec<Ct>,
    },
    Range {
        ab: Ct,
        sum_e_i: Vec<Ct>,
        e_i: Vec<Ct>,
        e_j: Vec<Ct>,
        z_e_j: Vec<Ct>,
    },
}

impl BgnBundle {
    pub fn ciphertext_count(&self) -> usize {
        match self {
            BgnBundle::Equality { e_i, e_j, z_e_j, .. } => 2 + e_i.len() + e_j.len() + z_e_j.len(),
            BgnBundle::Range {
                sum_e_i,
                e_i,
                e_j,
                z_e_j,
                ..
            } => 1 + sum_e_i.len() + e_i.len() + e_j.len() + z_e_j.len(),
        }
    }

    pub fn is_range(&self) -> bool {
        matches!(self, BgnBundle::Range { .. })
    }

    fn action(&self) -> (&[Ct], &[Ct]) {
        match self {
            BgnBundle::Equality { e_j, z_e_j, .. } | BgnBundle::Range { e_j, z_e_j, .. } => (e_j, z_e_j),
        }
    }
}

/// The transformed function: one bundle per policy, in policy order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BgnFunction {
    n: usize,
    bundles: Vec<BgnBundle>,
}

impl BgnFunction {
    pub fn fields(&self) -> usize {
        self.n
    }

    pub fn bundles(&self) -> &[BgnBundle] {
        &self.bundles
    }

    pub fn ciphertext_count(&self) -> usize {
        self.bundles.iter().map(BgnBundle::ciphertext_count).sum()
    }

    pub fn has_range(&self) -> bool {
        self.bundles.iter().any(BgnBundle::is_range)
    }

    pub fn to_bytes(&self, pk: &BgnPublicKey) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(SchemeId::Bgn as u8)
            .u16(u16::try_from(self.bundles.len()).expect("policy count fits u16"));
        for b in &self.bundles {
            let mut inner = Writer::new();
            inner.u8(u8::from(b.is_range())).u16(self.n as u16);
            let mut put = |cs: &[Ct]| {
                for c in cs {
                    inner.bytes(&pk.encode(c));
                }
            };
            match b {
                BgnBundle::Equality {
                    one,
                    e_i,
                    y,
                    e_j,
                    z_e_j,
                } => {
                    put(std::slice::from_ref(one));
                    put(e_i);
                    put(std::slice::from_ref(y));
                    put(e_j);
                    put(z_e_j);
                }
                BgnBundle::Range {
                    ab,
                    sum_e_i,
                    e_i,
                    e_j,
                    z_e_j,
                } => {
                    put(std::slice::from_ref(ab));
                    put(sum_e_i);
                    put(e_i);
                    put(e_j);
                    put(z_e_j);
                }
            }
            w.framed(&inner.finish());
        }
        w.finish()
    }

    pub fn from_bytes(pk: &BgnPublicKey, bytes: &[u8]) -> Result<Self, SchemeError> {
        let mut r = Reader::new(bytes);
        if r.u8()? != SchemeId::Bgn as u8 {
            return Err(SchemeError::Malformed("not a bgn function"));
        }
        let count = r.u16()? as usize;
        let mut bundles = Vec::with_capacity(count);
        let mut n = None;
        for _ in 0..count {
            let mut b = Reader::new(r.framed()?);
            let range = match b.u8()? {
                0 => false,
                1 => true,
                _ => return Err(SchemeError::Malformed("bundle kind")),
            };
            let width = b.u16()? as usize;
            if width == 0 {
                return Err(SchemeError::Malformed("empty packet layout"));
            }
            if *n.get_or_insert(width) != width {
                return Err(SchemeError::Malformed("inconsistent bundle widths"));
            }
            let one = read_cts(pk, &mut b, 1)?[0];
            let bundle = if range {
                BgnBundle::Range {
                    ab: one,
                    sum_e_i: read_cts(pk, &mut b, width)?,
                    e_i: read_cts(pk, &mut b, width)?,
                    e_j: read_cts(pk, &mut b, width)?,
                    z_e_j: read_cts(pk, &mut b, width)?,
                }
            } else {
                BgnBundle::Equality {
                    one,
                    e_i: read_cts(pk, &mut b, width)?,
                    y: read_cts(pk, &mut b, 1)?[0],
                    e_j: read_cts(pk, &mut b, width)?,
                    z_e_j: read_cts(pk, &mut b, width)?,
                }
            };
            b.finish()?;
            bundles.push(bundle);
        }
        r.finish()?;
        let n = n.ok_or(SchemeError::Malformed("empty function"))?;
        Ok(Self { n, bundles })
    }
}

fn read_cts(pk: &BgnPublicKey, r: &mut Reader<'_>, count: usize) -> Result<Vec<Ct>, SchemeError> {
    (0..count)
        .map(|_| Ok(pk.decode(r.take(ELEMENT_BYTES)?, Level::Source)?))
        .collect()
}

fn encrypt_vec<R: Rng + ?Sized>(
    pk: &BgnPublicKey,
    values: impl Iterator<Item = u64>,
    rng: &mut R,
    counts: &mut OpCounts,
) -> Result<Vec<Ct>, SchemeError> {
    values
        .map(|v| {
            counts.encryptions += 1;
            Ok(pk.encrypt(v, rng)?)
        })
        .collect()
}

fn encrypt_one<R: Rng + ?Sized>(
    pk: &BgnPublicKey,
    m: u64,
    rng: &mut R,
    counts: &mut OpCounts,
) -> Result<Ct, SchemeError> {
    counts.encryptions += 1;
    Ok(pk.encrypt(m, rng)?)
}

/// Client side: encrypts every policy into a bundle.
pub fn transform<R: Rng + ?Sized>(
    pk: &BgnPublicKey,
    nf: &NetworkFunction,
    layout: &Layout,
    rng: &mut R,
    counts: &mut OpCounts,
) -> Result<BgnFunction, SchemeError> {
    check_function(nf, layout)?;
    let n = layout.len();
    let mut bundles = Vec::with_capacity(nf.len());
    for p in nf.policies() {
        let (j, z) = replace_value(&p.action)?;
        let bundle = match p.matcher {
            Match::Equality { field: i, value: y } => {
                let one = encrypt_one(pk, 1, rng, counts)?;
                let e_i = encrypt_vec(pk, unit(n, i), rng, counts)?;
                let y = encrypt_one(pk, y, rng, counts)?;
                let e_j = encrypt_vec(pk, unit(n, j), rng, counts)?;
                let z_e_j = encrypt_vec(pk, unit(n, j).map(|u| u * z), rng, counts)?;
                BgnBundle::Equality {
                    one,
                    e_i,
                    y,
                    e_j,
                    z_e_j,
                }
            }
            Match::Range {
                field: i,
                low: a,
                high: b,
            } => {
                let width = layout.width(i)?;
                if width > MAX_RANGE_WIDTH {
                    return Err(SchemeError::UnsupportedWidth {
                        field: i,
                        width,
                        max: MAX_RANGE_WIDTH,
                    });
                }
                let ab = encrypt_one(pk, a * b, rng, counts)?;
                let sum_e_i = encrypt_vec(pk, unit(n, i).map(|u| u * (a + b)), rng, counts)?;
                let e_i = encrypt_vec(pk, unit(n, i), rng, counts)?;
                let e_j = encrypt_vec(pk, unit(n, j), rng, counts)?;
                let z_e_j = encrypt_vec(pk, unit(n, j).map(|u| u * z), rng, counts)?;
                BgnBundle::Range {
                    ab,
                    sum_e_i,
                    e_i,
                    e_j,
                    z_e_j,
                }
            }
        };
        bundles.push(bundle);
    }
    Ok(BgnFunction { n, bundles })
}

/// `E(x)` together with `E(x_k^2)` for fields narrow enough for range
/// matching (wider fields carry `E(0)` there).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BgnPacket {
    fields: Vec<Ct>,
    squares: Option<Vec<Ct>>,
}

impl BgnPacket {
    pub fn fields(&self) -> &[Ct] {
        &self.fields
    }
}

pub fn encrypt_packet<R: Rng + ?Sized>(
    pk: &BgnPublicKey,
    x: &Packet,
    with_squares: bool,
    rng: &mut R,
    counts: &mut OpCounts,
) -> Result<BgnPacket, SchemeError> {
    let fields = encrypt_vec(pk, x.values().iter().copied(), rng, counts)?;
    let squares = if with_squares {
        let layout = x.layout();
        let sq = x.values().iter().zip(layout.fields()).map(|(&v, f)| {
            if f.bit_width <= MAX_RANGE_WIDTH {
                v * v
            } else {
                0
            }
        });
        Some(encrypt_vec(pk, sq, rng, counts)?)
    } else {
        None
    };
    Ok(BgnPacket { fields, squares })
}

/// Per-policy cloud output: `E(a(x))` in the target group and `E(c)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BgnPolicyResult {
    pub action: Vec<Ct>,
    pub c: Ct,
}

/// `E(x)` once, plus `(E(a(x)), E(c))` for every policy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BgnResult {
    pub x: Vec<Ct>,
    pub policies: Vec<BgnPolicyResult>,
}

impl BgnResult {
    /// The `(E(x), E(a(x)), E(c))` triple for policy `k`.
    pub fn triple(&self, k: usize) -> (&[Ct], &[Ct], &Ct) {
        let p = &self.policies[k];
        (&self.x, &p.action, &p.c)
    }
}

struct Ctx<'a> {
    pk: &'a BgnPublicKey,
    counts: &'a mut OpCounts,
}

impl Ctx<'_> {
    fn add(&mut self, a: &Ct, b: &Ct) -> Result<Ct, SchemeError> {
        self.counts.homomorphic_adds += 1;
        Ok(self.pk.add(a, b)?)
    }

    fn sub(&mut self, a: &Ct, b: &Ct) -> Result<Ct, SchemeError> {
        self.counts.homomorphic_adds += 1;
        Ok(self.pk.sub(a, b)?)
    }

    fn mul(&mut self, a: &Ct, b: &Ct) -> Result<Ct, SchemeError> {
        self.counts.homomorphic_muls += 1;
        self.counts.pairings += 1;
        Ok(self.pk.mul(a, b)?)
    }

    fn lift(&mut self, a: &Ct) -> Result<Ct, SchemeError> {
        self.counts.pairings += 1;
        Ok(self.pk.lift(*a)?)
    }

    fn inner(&mut self, xs: &[Ct], ys: &[Ct]) -> Result<Ct, SchemeError> {
        let mut acc = self.mul(&xs[0], &ys[0])?;
        for (x, y) in xs.iter().zip(ys).skip(1) {
            let t = self.mul(x, y)?;
            acc = self.add(&acc, &t)?;
        }
        Ok(acc)
    }

    fn sum(&mut self, xs: &[Ct]) -> Result<Ct, SchemeError> {
        let mut acc = xs[0];
        for x in &xs[1..] {
            acc = self.add(&acc, x)?;
        }
        Ok(acc)
    }
}

fn check_shape(f: &BgnFunction, x: &BgnPacket) -> Result<(), SchemeError> {
    if x.fields.len() != f.n {
        return Err(SchemeError::ShapeMismatch {
            expected: f.n,
            got: x.fields.len(),
        });
    }
    if f.has_range() && x.squares.is_none() {
        return Err(SchemeError::Corrupted("range policies need encrypted squares"));
    }
    Ok(())
}

fn match_value(ctx: &mut Ctx<'_>, bundle: &BgnBundle, x: &BgnPacket) -> Result<Ct, SchemeError> {
    match bundle {
        BgnBundle::Equality { one, e_i, y, .. } => {
            let dot = ctx.inner(&x.fields, e_i)?;
            let one = ctx.lift(one)?;
            let y = ctx.lift(y)?;
            let t = ctx.sub(&one, &dot)?;
            ctx.add(&t, &y)
        }
        BgnBundle::Range { ab, sum_e_i, e_i, .. } => {
            let squares = x.squares.as_deref().expect("checked by check_shape");
            let sq = ctx.inner(squares, e_i)?;
            let lin = ctx.inner(&x.fields, sum_e_i)?;
            let ab = ctx.lift(ab)?;
            let t = ctx.sub(&lin, &sq)?;
            ctx.sub(&t, &ab)
        }
    }
}

/// Cloud side: evaluates every bundle against an encrypted packet.
pub fn process(
    pk: &BgnPublicKey,
    f: &BgnFunction,
    x: &BgnPacket,
    counts: &mut OpCounts,
) -> Result<BgnResult, SchemeError> {
    check_shape(f, x)?;
    let mut ctx = Ctx { pk, counts };
    let lifted: Vec<Ct> = x.fields.iter().map(|c| ctx.lift(c)).collect::<Result<_, _>>()?;
    let mut policies = Vec::with_capacity(f.bundles.len());
    for bundle in &f.bundles {
        let c = match_value(&mut ctx, bundle, x)?;
        let (e_j, z_e_j) = bundle.action();
        let mut action = Vec::with_capacity(f.n);
        for k in 0..f.n {
            let masked = ctx.mul(&x.fields[k], &e_j[k])?;
            let z = ctx.lift(&z_e_j[k])?;
            let t = ctx.sub(&lifted[k], &masked)?;
            action.push(ctx.add(&t, &z)?);
        }
        policies.push(BgnPolicyResult { action, c });
    }
    Ok(BgnResult {
        x: x.fields.clone(),
        policies,
    })
}

/// Cloud side when it sees the plaintext packet: encrypts, then processes.
pub fn process_plain<R: Rng + ?Sized>(
    pk: &BgnPublicKey,
    f: &BgnFunction,
    x: &Packet,
    rng: &mut R,
    counts: &mut OpCounts,
) -> Result<BgnResult, SchemeError> {
    let enc = encrypt_packet(pk, x, f.has_range(), rng, counts)?;
    process(pk, f, &enc, counts)
}

/// The fixed-size per-policy form carried on the wire: the current value of
/// the action field, its replacement, and the match value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BgnCompact {
    /// `E(x_j)`, target group.
    pub current: Ct,
    /// `E(z)`, source group.
    pub replacement: Ct,
    /// `E(c)`, target group.
    pub c: Ct,
}

pub const COMPACT_BYTES: usize = 3 * ELEMENT_BYTES;

impl BgnCompact {
    pub fn to_bytes(&self, pk: &BgnPublicKey) -> [u8; COMPACT_BYTES] {
        let mut out = [0u8; COMPACT_BYTES];
        out[..32].copy_from_slice(&pk.encode(&self.current));
        out[32..64].copy_from_slice(&pk.encode(&self.replacement));
        out[64..].copy_from_slice(&pk.encode(&self.c));
        out
    }

    pub fn from_bytes(pk: &BgnPublicKey, bytes: &[u8]) -> Result<Self, SchemeError> {
        if bytes.len() != COMPACT_BYTES {
            return Err(SchemeError::Malformed("compact bgn body length"));
        }
        Ok(Self {
            current: pk.decode(&bytes[..32], Level::Target)?,
            replacement: pk.decode(&bytes[32..64], Level::Source)?,
            c: pk.decode(&bytes[64..], Level::Target)?,
        })
    }
}

/// Cloud side, compact form: one [`BgnCompact`] per policy.
pub fn process_compact(
    pk: &BgnPublicKey,
    f: &BgnFunction,
    x: &BgnPacket,
    counts: &mut OpCounts,
) -> Result<Vec<BgnCompact>, SchemeError> {
    check_shape(f, x)?;
    let mut ctx = Ctx { pk, counts };
    f.bundles
        .iter()
        .map(|bundle| {
            let c = match_value(&mut ctx, bundle, x)?;
            let (e_j, z_e_j) = bundle.action();
            let current = ctx.inner(&x.fields, e_j)?;
            let replacement = ctx.sum(z_e_j)?;
            Ok(BgnCompact {
                current,
                replacement,
                c,
            })
        })
        .collect()
}

/// Client side: whether a policy matched, from its `E(c)`.
pub fn matched(sk: &BgnSecretKey, range: bool, c: &Ct, counts: &mut OpCounts) -> Result<bool, SchemeError> {
    if range {
        counts.dlogs += 1;
        counts.decryptions += 1;
        Ok(sk.decrypt_signed(c, RANGE_BOUND)? >= 0)
    } else {
        counts.value_checks += 1;
        Ok(sk.is_value(c, 1))
    }
}

fn field_bound(layout: &Layout, slot: usize) -> u64 {
    1u64 << layout.fields()[slot].bit_width
}

fn decrypt_field(
    sk: &BgnSecretKey,
    layout: &Layout,
    slot: usize,
    c: &Ct,
    counts: &mut OpCounts,
) -> Result<u64, SchemeError> {
    counts.dlogs += 1;
    counts.decryptions += 1;
    Ok(sk.decrypt(c, field_bound(layout, slot))?)
}

fn check_result(nf: &NetworkFunction, layout: &Layout, r: &BgnResult) -> Result<(), SchemeError> {
    let n = layout.len();
    if r.x.len() != n || r.policies.len() != nf.len() {
        return Err(SchemeError::ShapeMismatch {
            expected: n,
            got: r.x.len(),
        });
    }
    if r.policies.iter().any(|p| p.action.len() != n) {
        return Err(SchemeError::Corrupted("action vector length"));
    }
    Ok(())
}

fn is_range(nf: &NetworkFunction, k: usize) -> bool {
    matches!(nf.policies()[k].matcher, Match::Range { .. })
}

/// Client side: recovers `psi(x)` from the cloud's triples. `nf` is the
/// client's own plaintext policy list.
///
/// Decrypts `E(x)`, then for every matched policy in order decrypts the
/// action field of `E(a(x))` and writes it.
pub fn decrypt_result(
    sk: &BgnSecretKey,
    nf: &NetworkFunction,
    layout: &Arc<Layout>,
    r: &BgnResult,
    counts: &mut OpCounts,
) -> Result<Packet, SchemeError> {
    check_result(nf, layout, r)?;
    let mut out: Vec<u64> = (0..layout.len())
        .map(|k| decrypt_field(sk, layout, k, &r.x[k], counts))
        .collect::<Result<_, _>>()?;
    for (k, p) in r.policies.iter().enumerate() {
        if matched(sk, is_range(nf, k), &p.c, counts)? {
            let j = nf.policies()[k].action.field().slot();
            out[j] = decrypt_field(sk, layout, j, &p.action[j], counts)?;
        }
    }
    Ok(Packet::new(layout.clone(), out)?)
}

/// Client side, single policy: decrypts all of `E(a(x))` if policy `k`
/// matched, else `E(x)`.
pub fn decrypt_policy(
    sk: &BgnSecretKey,
    nf: &NetworkFunction,
    layout: &Arc<Layout>,
    r: &BgnResult,
    k: usize,
    counts: &mut OpCounts,
) -> Result<Packet, SchemeError> {
    check_result(nf, layout, r)?;
    let (x, action, c) = r.triple(k);
    let source = if matched(sk, is_range(nf, k), c, counts)? {
        action
    } else {
        x
    };
    let values = source
        .iter()
        .enumerate()
        .map(|(slot, c)| decrypt_field(sk, layout, slot, c, counts))
        .collect::<Result<_, _>>()?;
    Ok(Packet::new(layout.clone(), values)?)
}

/// Client side, compact form: `(matched, value of the action field)`.
pub fn decrypt_compact(
    sk: &BgnSecretKey,
    range: bool,
    action_width: u8,
    compact: &BgnCompact,
    counts: &mut OpCounts,
) -> Result<(bool, u64), SchemeError> {
    let hit = matched(sk, range, &compact.c, counts)?;
    let chosen = if hit {
        &compact.replacement
    } else {
        &compact.current
    };
    counts.dlogs += 1;
    counts.decryptions += 1;
    Ok((hit, sk.decrypt(chosen, 1u64 << action_width)?))
}
