use std::net::Ipv4Addr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::crypto::{
    BgnPublicKey, BgnSecretKey, FhePublicKey, FheSecretKey, PeksCiphertext, Permutation, PrpKey,
};
use crate::netfn::{conn_state, ipv4, tag, FieldIndex, Layout, Match, NetworkFunction, Packet};
use crate::ops::OpCounts;
use crate::schemes::bgn::{self, BgnCompact, BgnFunction};
use crate::schemes::fhe::{self, FheFunction, FhePacket};
use crate::schemes::peks::{self, PeksClientKeys, PeksFunction, PeksPublicKeys};
use crate::schemes::state::{self, StateAnnex, StateFields, StateMessage, StateRequest, StateTable};
use crate::schemes::{keyword, SchemeId};

use super::fabric::{EntryBody, Message, Role};
use super::frame::{fields_from_frame, tcp_flags, RawFrame, PROTO_TCP};
use super::wire::{ciphertext_list, encapsulate, parse_ciphertext_list, EncapsulatedPacket, PnfvPayload};
use super::{SimError, Verdict};

#[derive(Clone, Debug)]
pub struct SimConfig {
    /// `Fhe`, `Bgn` or `Peks`.
    pub scheme: SchemeId,
    /// Keep a private state table in the cloud (BGN and PEKS only).
    pub stateful: bool,
    pub seed: u64,
    pub bgn_prime_bits: u32,
    pub cloud_ip: Ipv4Addr,
    pub client_ip: Ipv4Addr,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeId::Bgn,
            stateful: false,
            seed: 0,
            bgn_prime_bits: bgn::DEFAULT_PRIME_BITS,
            cloud_ip: Ipv4Addr::new(198, 51, 100, 1),
            client_ip: Ipv4Addr::new(203, 0, 113, 1),
        }
    }
}

/// Per-delivery scratch space handed to role handlers.
pub(crate) struct Ctx {
    pub sends: Vec<(Role, Message)>,
    pub events: Vec<(Role, &'static str, String)>,
    pub verdicts: Vec<(Verdict, String)>,
}

impl Ctx {
    pub fn new() -> Self {
        Self {
            sends: Vec::new(),
            events: Vec::new(),
            verdicts: Vec::new(),
        }
    }

    fn log(&mut self, role: Role, event: &'static str, detail: String) {
        self.events.push((role, event, detail));
    }
}

fn role_rng(seed: u64, role: Role) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(role as u64 + 1);
    rng
}

fn ops_detail(c: &OpCounts) -> String {
    format!(
        "static_ops={} enc={} dec={} tests={} index_tests={} state_tests={} pairings={} dlogs={}",
        c.static_policy_ops(),
        c.encryptions,
        c.decryptions,
        c.tests,
        c.index_tests,
        c.state_tests,
        c.pairings,
        c.dlogs
    )
}

/// The three middleboxes of one deployment, wired with fresh keys.
pub struct Deployment {
    pub entry: EntryMb,
    pub cloud: CloudMb,
    pub client: ClientMb,
}

impl Deployment {
    /// Generates keys at the client, transforms `nf` and hands the public
    /// parts to the entry and cloud middleboxes.
    pub fn new(cfg: &SimConfig, nf: NetworkFunction) -> Result<Self, SimError> {
        if !matches!(cfg.scheme, SchemeId::Fhe | SchemeId::Bgn | SchemeId::Peks) {
            return Err(SimError::Unsupported("scheme must be fhe, bgn or peks"));
        }
        if cfg.stateful && cfg.scheme == SchemeId::Fhe {
            return Err(SimError::Unsupported(
                "state tables need the searchable backend; use bgn or peks",
            ));
        }
        let layout = Arc::new(Layout::ipv4());
        nf.validate(&layout)?;
        let mut rng = role_rng(cfg.seed, Role::Client);
        let mut setup = OpCounts::default();
        let peks_keys = (cfg.scheme == SchemeId::Peks || cfg.stateful).then(|| peks::keygen(&mut rng));
        let pks = peks_keys.as_ref().map(|(p, _)| p.clone());

        let mut bgn_sk = None;
        let mut fhe_sk = None;
        let (function, entry_fhe) = match cfg.scheme {
            SchemeId::Bgn => {
                let (pk, sk) = bgn::keygen(cfg.bgn_prime_bits, &mut rng)?;
                let f = bgn::transform(&pk, &nf, &layout, &mut rng, &mut setup)?;
                bgn_sk = Some(sk);
                (CloudFunction::Bgn { pk, f }, None)
            }
            SchemeId::Peks => {
                let (_, keys) = peks_keys.as_ref().expect("generated above");
                (
                    CloudFunction::Peks(peks::transform(keys, &nf, &layout, &mut rng, &mut setup)?),
                    None,
                )
            }
            _ => {
                let (pk, sk) = fhe::keygen(&mut rng);
                let f = fhe::transform(&pk, &nf, &layout, &mut rng, &mut setup)?;
                fhe_sk = Some(sk);
                (CloudFunction::Fhe { pk, f }, Some(pk))
            }
        };

        let mut entry_rng = role_rng(cfg.seed, Role::Entry);
        let entry = EntryMb {
            scheme: cfg.scheme,
            stateful: cfg.stateful,
            layout: layout.clone(),
            pks: pks.clone(),
            fhe: entry_fhe,
            prp: PrpKey::generate(&mut entry_rng),
            nonce: 0,
            rng: entry_rng,
            counts: OpCounts::default(),
        };
        let cloud = CloudMb {
            layout: layout.clone(),
            function,
            pks,
            table: cfg.stateful.then(|| StateTable::new(StateFields::IPV4)),
            cloud_ip: cfg.cloud_ip,
            client_ip: cfg.client_ip,
            rng: role_rng(cfg.seed, Role::Cloud),
            counts: OpCounts::default(),
            observed: Vec::new(),
        };
        let client = ClientMb {
            scheme: cfg.scheme,
            stateful: cfg.stateful,
            layout,
            nf,
            bgn_sk,
            fhe_sk,
            peks: peks_keys.map(|(_, k)| k),
            rng,
            counts: setup,
        };
        Ok(Self { entry, cloud, client })
    }
}

/// Sits at the network edge with public keys only.
pub struct EntryMb {
    scheme: SchemeId,
    stateful: bool,
    layout: Arc<Layout>,
    pks: Option<PeksPublicKeys>,
    fhe: Option<FhePublicKey>,
    prp: PrpKey,
    nonce: u64,
    rng: ChaCha20Rng,
    counts: OpCounts,
}

impl EntryMb {
    pub fn counts(&self) -> OpCounts {
        self.counts
    }

    pub(crate) fn handle(&mut self, mut frame: RawFrame, ctx: &mut Ctx) -> Result<(), SimError> {
        let x = fields_from_frame(&frame, &self.layout)?;
        let mut c = OpCounts::default();
        let body = match (self.scheme, &self.pks, self.fhe) {
            (SchemeId::Peks, Some(pks), _) => {
                let out = peks::entry_process(pks, &self.prp, self.nonce, &x, &mut self.rng, &mut c)?;
                frame.zero_five_tuple();
                EntryBody::Peks(out)
            }
            (SchemeId::Fhe, _, Some(pk)) => {
                let p = fhe::encrypt_packet(&pk, &x, &mut self.rng, &mut c);
                frame.zero_five_tuple();
                EntryBody::Fhe(p)
            }
            (SchemeId::Bgn, Some(pks), _) if self.stateful => {
                EntryBody::Searchable(searchable(pks, &self.prp, self.nonce, &x, &mut self.rng, &mut c))
            }
            _ => EntryBody::Plain,
        };
        self.nonce += 1;
        self.counts += c;
        ctx.log(
            Role::Entry,
            "forward",
            format!("{} enc={}", frame.summary(), c.encryptions),
        );
        ctx.sends.push((Role::Cloud, Message::Forward { frame, body }));
        Ok(())
    }
}

/// `σ(Ɛ(x || I))` alone, for state lookups next to a plaintext frame.
fn searchable(
    pks: &PeksPublicKeys,
    prp: &PrpKey,
    nonce: u64,
    x: &Packet,
    rng: &mut ChaCha20Rng,
    c: &mut OpCounts,
) -> Vec<PeksCiphertext> {
    let sigma = Permutation::shuffle(prp, nonce, x.len());
    let cts: Vec<_> = x
        .values()
        .iter()
        .enumerate()
        .map(|(slot, &v)| pks.peks.encrypt(&keyword(v, FieldIndex::from_slot(slot)), rng))
        .collect();
    c.encryptions += cts.len() as u64;
    sigma.apply(&cts)
}

enum CloudFunction {
    Bgn { pk: BgnPublicKey, f: BgnFunction },
    Peks(PeksFunction),
    Fhe { pk: FhePublicKey, f: FheFunction },
}

/// Holds the transformed function and the state table.
pub struct CloudMb {
    layout: Arc<Layout>,
    function: CloudFunction,
    pks: Option<PeksPublicKeys>,
    table: Option<StateTable>,
    cloud_ip: Ipv4Addr,
    client_ip: Ipv4Addr,
    rng: ChaCha20Rng,
    counts: OpCounts,
    observed: Vec<RawFrame>,
}

impl CloudMb {
    pub fn counts(&self) -> OpCounts {
        self.counts
    }

    /// Every frame this middlebox has received, as received.
    pub fn observed_frames(&self) -> &[RawFrame] {
        &self.observed
    }

    pub fn state_table(&self) -> Option<&StateTable> {
        self.table.as_ref()
    }

    fn emit(&mut self, frame: &RawFrame, payloads: Vec<PnfvPayload>, ctx: &mut Ctx) -> Result<(), SimError> {
        let mut packets = Vec::with_capacity(payloads.len());
        for p in payloads {
            let e = encapsulate(frame, &p, self.cloud_ip, self.client_ip)?;
            let bytes = e.to_bytes()?;
            ctx.log(
                Role::Cloud,
                "send",
                format!("bytes={} scheme={} id={}", bytes.len(), p.scheme, p.id),
            );
            packets.push(bytes);
        }
        ctx.sends.push((Role::Client, Message::Encapsulated(packets)));
        Ok(())
    }

    pub(crate) fn handle_forward(
        &mut self,
        frame: RawFrame,
        body: EntryBody,
        ctx: &mut Ctx,
    ) -> Result<(), SimError> {
        self.observed.push(frame.clone());
        ctx.log(Role::Cloud, "recv", frame.summary());
        let mut c = OpCounts::default();

        if let (Some(table), Some(pks)) = (&self.table, &self.pks) {
            let searchable = match &body {
                EntryBody::Peks(out) => Some(&out.searchable[..]),
                EntryBody::Searchable(s) => Some(&s[..]),
                _ => None,
            };
            if let Some(s) = searchable {
                if let Some(id) = table.lookup(pks, s, &mut c) {
                    let annex = table.annex(pks, id, &mut self.rng, &mut c)?;
                    let mut cts = match &body {
                        EntryBody::Peks(out) => out.fields.clone(),
                        _ => Vec::new(),
                    };
                    cts.extend([annex.enc_id, annex.enc_state, annex.enc_tag]);
                    ctx.log(Role::Cloud, "state-hit", format!("id={id} {}", ops_detail(&c)));
                    self.counts += c;
                    let p = PnfvPayload::new(SchemeId::State, id, ciphertext_list(&cts))?;
                    return self.emit(&frame, vec![p], ctx);
                }
                ctx.log(
                    Role::Cloud,
                    "state-miss",
                    format!("state_tests={}", c.state_tests),
                );
            }
        }

        let payloads = match (&self.function, body) {
            (CloudFunction::Bgn { pk, f }, EntryBody::Plain | EntryBody::Searchable(_)) => {
                let x = fields_from_frame(&frame, &self.layout)?;
                let enc = bgn::encrypt_packet(pk, &x, f.has_range(), &mut self.rng, &mut c)?;
                bgn::process_compact(pk, f, &enc, &mut c)?
                    .iter()
                    .enumerate()
                    .map(|(k, compact)| PnfvPayload::bgn(k as u32, compact, pk))
                    .collect::<Result<Vec<_>, _>>()?
            }
            (CloudFunction::Peks(f), EntryBody::Peks(out)) => {
                let pks = self.pks.as_ref().expect("peks deployment has public keys");
                let cts = peks::cloud_process(pks, f, out, &mut c)?;
                vec![PnfvPayload::new(SchemeId::Peks, 0, ciphertext_list(&cts))?]
            }
            (CloudFunction::Fhe { pk, f }, EntryBody::Fhe(p)) => {
                let out = fhe::process(pk, f, &p, &mut c)?;
                vec![PnfvPayload::new(SchemeId::Fhe, 0, out.to_bytes())?]
            }
            _ => {
                return Err(SimError::Unsupported(
                    "entry output does not fit the cloud function",
                ))
            }
        };
        ctx.log(Role::Cloud, "process", ops_detail(&c));
        self.counts += c;
        self.emit(&frame, payloads, ctx)
    }

    pub(crate) fn handle_request(&mut self, bytes: &[u8], ctx: &mut Ctx) -> Result<(), SimError> {
        let (Some(table), Some(pks)) = (&mut self.table, &self.pks) else {
            return Err(SimError::Unsupported("state request without a state table"));
        };
        let id = table.register(StateRequest::from_bytes(pks, bytes)?)?;
        ctx.log(
            Role::Cloud,
            "state-register",
            format!("id={id} entries={}", table.len()),
        );
        ctx.sends.push((Role::Client, Message::StateRegistered(id)));
        Ok(())
    }

    pub(crate) fn handle_maintenance(&mut self, bytes: &[u8], ctx: &mut Ctx) -> Result<(), SimError> {
        let Some(table) = &mut self.table else {
            return Err(SimError::Unsupported("state message without a state table"));
        };
        let msg = StateMessage::from_bytes(bytes)?;
        let (event, id) = match &msg {
            StateMessage::Update { id, .. } => ("state-update", *id),
            StateMessage::Delete { id } => ("state-delete", *id),
        };
        table.apply(msg)?;
        ctx.log(Role::Cloud, event, format!("id={id} entries={}", table.len()));
        Ok(())
    }
}

fn tag_verdict(tag_value: u64) -> Verdict {
    if tag_value == tag::DROP {
        Verdict::Drop
    } else {
        Verdict::Forward
    }
}

/// Applies BGN per-policy payloads to the plaintext packet `x` in policy
/// order and derives the verdict from the tag field.
///
/// A payload whose `E(c)` decrypts to 1 (equality) or to a non-negative
/// value (range) matched: its replacement value is decrypted and written.
/// Otherwise the packet is left as is.
pub fn client_verdict(
    sk: &BgnSecretKey,
    nf: &NetworkFunction,
    mut x: Packet,
    payloads: &[PnfvPayload],
    counts: &mut OpCounts,
) -> Result<(Verdict, Packet), SimError> {
    let pk = sk.public_key();
    for p in payloads {
        if p.scheme != SchemeId::Bgn {
            return Err(SimError::UnknownScheme(p.scheme as u8));
        }
        let policy = nf
            .policies()
            .get(p.id as usize)
            .ok_or(SimError::MalformedHeader("payload names an unknown policy"))?;
        let compact = BgnCompact::from_bytes(pk, &p.body)?;
        let range = matches!(policy.matcher, Match::Range { .. });
        if bgn::matched(sk, range, &compact.c, counts)? {
            let j = policy.action.field();
            let width = x.layout().width(j)?;
            counts.dlogs += 1;
            counts.decryptions += 1;
            let z = sk.decrypt(&compact.replacement, 1u64 << width)?;
            x.set(j, z)?;
        }
    }
    Ok((tag_verdict(x.get(ipv4::TAG)?), x))
}

/// Holds every secret key and the plaintext policy list.
pub struct ClientMb {
    scheme: SchemeId,
    stateful: bool,
    layout: Arc<Layout>,
    nf: NetworkFunction,
    bgn_sk: Option<BgnSecretKey>,
    fhe_sk: Option<FheSecretKey>,
    peks: Option<PeksClientKeys>,
    rng: ChaCha20Rng,
    counts: OpCounts,
}

impl ClientMb {
    /// Includes the one-off policy transformation.
    pub fn counts(&self) -> OpCounts {
        self.counts
    }

    pub(crate) fn handle_encapsulated(&mut self, packets: &[Vec<u8>], ctx: &mut Ctx) -> Result<(), SimError> {
        let decoded = packets
            .iter()
            .map(|b| EncapsulatedPacket::parse(b))
            .collect::<Result<Vec<_>, _>>()?;
        let inner = decoded
            .first()
            .map(|e| e.inner.clone())
            .ok_or(SimError::MalformedHeader("empty delivery"))?;
        let payloads: Vec<PnfvPayload> = decoded.into_iter().map(|e| e.payload).collect();
        let mut c = OpCounts::default();

        let (verdict, x) = if payloads[0].scheme == SchemeId::State {
            self.state_hit(&inner, &payloads[0], &mut c, ctx)?
        } else {
            let (verdict, x) = self.static_result(&inner, &payloads, &mut c)?;
            let syn_only = self
                .tcp_flags(&inner, &x)
                .is_some_and(|f| f & tcp_flags::SYN != 0 && f & tcp_flags::ACK == 0);
            if self.stateful && verdict == Verdict::Forward && syn_only {
                let keys = self.peks.as_ref().expect("stateful deployment has peks keys");
                let req = state::create(
                    keys,
                    StateFields::IPV4,
                    &x,
                    &ipv4::FIVE_TUPLE,
                    conn_state::NEW,
                    tag::ALLOW,
                    &mut self.rng,
                    &mut c,
                )?;
                ctx.log(Role::Client, "state-create", "state=new".into());
                ctx.sends
                    .push((Role::Cloud, Message::StateRequest(req.to_bytes(&keys.public()))));
            }
            (verdict, x)
        };
        self.counts += c;

        let mut out = inner;
        out.apply_packet(&x)?;
        ctx.log(
            Role::Client,
            "verdict",
            format!(
                "{verdict} {} tag={} {}",
                out.summary(),
                x.get(ipv4::TAG)?,
                ops_detail(&c)
            ),
        );
        ctx.verdicts.push((verdict, out.summary()));
        if verdict == Verdict::Forward {
            ctx.sends.push((Role::Net, Message::Egress(out)));
        }
        Ok(())
    }

    /// TCP flags of the original packet, judged by the recovered protocol.
    fn tcp_flags(&self, inner: &RawFrame, x: &Packet) -> Option<u8> {
        (x.get(ipv4::PROT).ok()? == u64::from(PROTO_TCP))
            .then(|| inner.tcp_flags())
            .flatten()
    }

    fn static_result(
        &mut self,
        inner: &RawFrame,
        payloads: &[PnfvPayload],
        c: &mut OpCounts,
    ) -> Result<(Verdict, Packet), SimError> {
        if payloads.iter().any(|p| p.scheme != self.scheme) {
            let p = payloads
                .iter()
                .find(|p| p.scheme != self.scheme)
                .expect("found above");
            return Err(SimError::UnknownScheme(p.scheme as u8));
        }
        let x = match self.scheme {
            SchemeId::Bgn => {
                let sk = self.bgn_sk.as_ref().expect("bgn deployment has a bgn key");
                let x = fields_from_frame(inner, &self.layout)?;
                return client_verdict(sk, &self.nf, x, payloads, c);
            }
            SchemeId::Peks => {
                let keys = self.peks.as_ref().expect("peks deployment has peks keys");
                let cts = parse_ciphertext_list(&only(payloads)?.body)?;
                peks::decrypt(keys, &self.layout, &cts, c)?
            }
            _ => {
                let sk = self.fhe_sk.as_ref().expect("fhe deployment has an fhe key");
                let p = FhePacket::from_bytes(&only(payloads)?.body)?;
                fhe::decrypt(sk, &self.layout, &p, c)?
            }
        };
        Ok((tag_verdict(x.get(ipv4::TAG)?), x))
    }

    fn state_hit(
        &mut self,
        inner: &RawFrame,
        payload: &PnfvPayload,
        c: &mut OpCounts,
        ctx: &mut Ctx,
    ) -> Result<(Verdict, Packet), SimError> {
        let keys = self
            .peks
            .as_ref()
            .ok_or(SimError::Unsupported("state payload in a stateless deployment"))?;
        let mut cts = parse_ciphertext_list(&payload.body)?;
        if cts.len() < 3 {
            return Err(SimError::MalformedHeader("state annex"));
        }
        let annex_cts = cts.split_off(cts.len() - 3);
        let annex = StateAnnex {
            enc_id: annex_cts[0],
            enc_state: annex_cts[1],
            enc_tag: annex_cts[2],
        };
        let mut x = if cts.is_empty() {
            fields_from_frame(inner, &self.layout)?
        } else {
            peks::decrypt(keys, &self.layout, &cts, c)?
        };
        let view = state::open_annex(keys, StateFields::IPV4, &annex, c)?;
        if view.id != payload.id {
            return Err(SimError::MalformedHeader("annex id differs from header id"));
        }
        view.apply_to(StateFields::IPV4, &mut x)?;

        let flags = self.tcp_flags(inner, &x).unwrap_or(0);
        if flags & (tcp_flags::FIN | tcp_flags::RST) != 0 {
            let msg = StateMessage::Delete { id: view.id };
            ctx.log(
                Role::Client,
                "state-delete",
                format!("id={} {}->deleted", view.id, state_name(view.state)),
            );
            ctx.sends
                .push((Role::Cloud, Message::StateMaintenance(msg.to_bytes())));
        } else if flags & tcp_flags::ACK != 0 && view.state == conn_state::NEW {
            let msg = state::update_message(
                keys,
                StateFields::IPV4,
                view.id,
                conn_state::EST,
                &mut self.rng,
                c,
            )?;
            ctx.log(Role::Client, "state-update", format!("id={} new->est", view.id));
            ctx.sends
                .push((Role::Cloud, Message::StateMaintenance(msg.to_bytes())));
        }
        Ok((tag_verdict(view.tag), x))
    }

    pub(crate) fn handle_registered(&mut self, id: u32, ctx: &mut Ctx) {
        ctx.log(Role::Client, "state-created", format!("id={id} state=new"));
    }
}

fn only(payloads: &[PnfvPayload]) -> Result<&PnfvPayload, SimError> {
    match payloads {
        [p] => Ok(p),
        _ => Err(SimError::MalformedHeader("expected a single payload")),
    }
}

fn state_name(s: u64) -> &'static str {
    match s {
        conn_state::NEW => "new",
        conn_state::EST => "est",
        _ => "unknown",
    }
}
