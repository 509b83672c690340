use std::net::Ipv4Addr;
use std::path::PathBuf;
use std::sync::Arc;

use pnfv::crypto::pke::PkeCiphertext;
use pnfv::netfn::{eval, ipv4, tag, Layout, NetworkFunction, Packet, Policy};
use pnfv::ops::OpCounts;
use pnfv::schemes::bgn::{self, BgnCompact};
use pnfv::schemes::{peks, SchemeId};
use pnfv::sim::frame::{ipv4_checksum, tcp_flags, PROTO_TCP, PROTO_UDP};
use pnfv::sim::{
    client_verdict, decapsulate, encapsulate, fields_from_frame, run_scenario, run_scenario_file,
    PnfvPayload, RawFrame, SimConfig, SimError, Simulator, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/scenarios")
}

fn ip(s: &str) -> Ipv4Addr {
    s.parse().unwrap()
}

/// A hand-assembled minimal TCP frame, independent of the builders.
fn handmade_tcp() -> Vec<u8> {
    let mut b = vec![0u8; 12];
    b.extend_from_slice(&[0x08, 0x00]);
    let mut h = vec![
        0x45, 0, 0, 40, 0, 0, 0x40, 0, 64, 6, 0, 0, 10, 0, 0, 1, 10, 0, 0, 2,
    ];
    // RFC 1071 by hand
    let mut sum: u32 = h.chunks(2).map(|w| u32::from(w[0]) << 8 | u32::from(w[1])).sum();
    while sum >> 16 != 0 {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    let c = !(sum as u16);
    h[10] = (c >> 8) as u8;
    h[11] = c as u8;
    b.extend_from_slice(&h);
    let mut tcp = vec![0u8; 20];
    tcp[0..2].copy_from_slice(&120u16.to_be_bytes());
    tcp[2..4].copy_from_slice(&121u16.to_be_bytes());
    tcp[12] = 0x50;
    tcp[13] = 0x02;
    b.extend_from_slice(&tcp);
    b
}

#[test]
fn five_tuple_read_by_offset() {
    let bytes = handmade_tcp();
    let f = RawFrame::parse(&bytes).unwrap();
    assert!(f.checksum_ok());
    let layout = Arc::new(Layout::ipv4());
    let x = fields_from_frame(&f, &layout).unwrap();
    let be32 = |at: usize| u32::from_be_bytes(bytes[at..at + 4].try_into().unwrap()) as u64;
    let be16 = |at: usize| u16::from_be_bytes(bytes[at..at + 2].try_into().unwrap()) as u64;
    assert_eq!(
        &x.values()[..5],
        &[be32(26), be32(30), be16(34), be16(36), bytes[23] as u64]
    );
    assert_eq!(&x.values()[..5], &[0x0a00_0001, 0x0a00_0002, 120, 121, 6]);
    assert_eq!(&x.values()[5..], &[0, 0, 0]);
    assert_eq!(
        RawFrame::tcp(ip("10.0.0.1"), 120, ip("10.0.0.2"), 121, tcp_flags::SYN).as_bytes()[14..34],
        bytes[14..34]
    );
}

#[test]
fn udp_protocol_and_portless_frames() {
    let layout = Arc::new(Layout::ipv4());
    let f = RawFrame::udp(ip("1.2.3.4"), 53, ip("5.6.7.8"), 5353, b"q").unwrap();
    let x = fields_from_frame(&f, &layout).unwrap();
    assert_eq!(x.get(ipv4::PROT).unwrap(), PROTO_UDP as u64);
    assert_eq!(x.get(ipv4::D_PORT).unwrap(), 5353);
    let icmp = RawFrame::build(ip("1.2.3.4"), ip("5.6.7.8"), 1, &[8, 0, 0, 0]).unwrap();
    let x = fields_from_frame(&icmp, &layout).unwrap();
    assert_eq!(
        (x.get(ipv4::S_PORT).unwrap(), x.get(ipv4::D_PORT).unwrap()),
        (0, 0)
    );
}

#[test]
fn malformed_frames_are_rejected() {
    let bytes = handmade_tcp();
    assert!(matches!(
        RawFrame::parse(&bytes[..33]),
        Err(SimError::TruncatedFrame { len: 33 })
    ));
    let mut v6 = bytes.clone();
    v6[14] = 0x65;
    assert!(matches!(
        RawFrame::parse(&v6),
        Err(SimError::NotIpv4 { version: 6 })
    ));
    let mut long = bytes.clone();
    long.push(0);
    assert!(matches!(
        RawFrame::parse(&long),
        Err(SimError::LengthMismatch { .. })
    ));
}

#[test]
fn checksum_follows_mutation() {
    let mut f = RawFrame::tcp(ip("10.0.0.1"), 1, ip("10.0.0.2"), 2, 0);
    let before = f.checksum();
    f.set_src(ip("10.9.9.9"));
    assert_ne!(f.checksum(), before);
    assert!(f.checksum_ok());
    assert_eq!(f.checksum(), ipv4_checksum(f.ip_header()));
    f.zero_five_tuple();
    assert!(f.checksum_ok());
    assert!(f.five_tuple_is_zero());
    assert_eq!(f.tcp_flags(), Some(0));
}

fn bgn_payload(seed: u64) -> (PnfvPayload, pnfv::crypto::BgnSecretKey) {
    let mut r = rng(seed);
    let (pk, sk) = bgn::keygen(bgn::DEFAULT_PRIME_BITS, &mut r).unwrap();
    let compact = BgnCompact {
        current: pk.encrypt_target(0, &mut r).unwrap(),
        replacement: pk.encrypt(tag::DROP, &mut r).unwrap(),
        c: pk.encrypt_target(1, &mut r).unwrap(),
    };
    (PnfvPayload::bgn(0, &compact, &pk).unwrap(), sk)
}

#[test]
fn minimal_frame_with_bgn_payload_is_153_bytes() {
    let x = RawFrame::build(ip("127.0.0.1"), ip("10.0.0.2"), 0, &[]).unwrap();
    assert_eq!(x.len(), 34);
    let (p, _) = bgn_payload(1);
    assert_eq!(p.to_bytes().unwrap().len(), 99);
    let e = encapsulate(&x, &p, ip("198.51.100.1"), ip("203.0.113.1")).unwrap();
    let bytes = e.to_bytes().unwrap();
    assert_eq!(bytes.len(), 153);
    assert_eq!(bytes.len(), 34 + 20 + 99);
    assert_eq!(decapsulate(&bytes).unwrap(), (x, p));
}

#[test]
fn payload_header_packing() {
    let p = PnfvPayload::new(SchemeId::Peks, 0xABCDE, vec![7; 5]).unwrap();
    let b = p.to_bytes().unwrap();
    assert_eq!(&b[..3], &[0x3A, 0xBC, 0xDE]);
    assert_eq!(&b[3..5], &[0, 5]);
    assert!(matches!(
        PnfvPayload::new(SchemeId::Peks, 1 << 20, vec![]),
        Err(SimError::IdTooWide { id }) if id == 1 << 20
    ));
    assert!(PnfvPayload::new(SchemeId::Bgn, 0, vec![0; 95]).is_err());
    let mut unknown = b.clone();
    unknown[0] = 0x9A;
    assert!(matches!(
        PnfvPayload::from_bytes(&unknown),
        Err(SimError::UnknownScheme(9))
    ));
}

fn random_frame(r: &mut ChaCha8Rng) -> RawFrame {
    let src = Ipv4Addr::from(r.gen::<u32>());
    let dst = Ipv4Addr::from(r.gen::<u32>());
    match r.gen_range(0..3) {
        0 => RawFrame::tcp(src, r.gen(), dst, r.gen(), r.gen()),
        1 => {
            let data: Vec<u8> = (0..r.gen_range(0..64)).map(|_| r.gen()).collect();
            RawFrame::udp(src, r.gen(), dst, r.gen(), &data).unwrap()
        }
        _ => {
            let data: Vec<u8> = (0..r.gen_range(0..32)).map(|_| r.gen()).collect();
            RawFrame::build(src, dst, r.gen(), &data).unwrap()
        }
    }
}

#[test]
fn fuzzed_round_trips_are_byte_exact() {
    let mut r = rng(2);
    let (bgn_p, _) = bgn_payload(3);
    let (pks, _) = peks::keygen(&mut r);
    for k in 0..1000 {
        let x = random_frame(&mut r);
        let id = r.gen_range(0..=pnfv::sim::wire::MAX_PAYLOAD_ID);
        let p = match k % 4 {
            0 => PnfvPayload { id, ..bgn_p.clone() },
            1 | 2 => {
                let n = r.gen_range(1..10);
                let cts: Vec<PkeCiphertext> = (0..n)
                    .map(|_| pks.pke.encrypt(&r.gen::<[u8; 6]>(), &mut r).unwrap())
                    .collect();
                let scheme = if k % 4 == 1 {
                    SchemeId::Peks
                } else {
                    SchemeId::State
                };
                let body = pnfv::sim::wire::ciphertext_list(&cts);
                assert_eq!(pnfv::sim::wire::parse_ciphertext_list(&body).unwrap(), cts);
                PnfvPayload::new(scheme, id, body).unwrap()
            }
            _ => {
                let body: Vec<u8> = (0..r.gen_range(0..300)).map(|_| r.gen()).collect();
                PnfvPayload::new(SchemeId::Fhe, id, body).unwrap()
            }
        };
        let e = encapsulate(
            &x,
            &p,
            Ipv4Addr::from(r.gen::<u32>()),
            Ipv4Addr::from(r.gen::<u32>()),
        )
        .unwrap();
        let bytes = e.to_bytes().unwrap();
        assert_eq!(bytes.len(), x.len() + 20 + p.to_bytes().unwrap().len());
        let (x2, p2) = decapsulate(&bytes).unwrap();
        assert_eq!(x2.as_bytes(), x.as_bytes());
        assert_eq!(p2.to_bytes().unwrap(), p.to_bytes().unwrap());
        assert_eq!(
            encapsulate(&x2, &p2, e.cloud, e.client)
                .unwrap()
                .to_bytes()
                .unwrap(),
            bytes
        );
    }
}

#[test]
fn corrupted_encapsulation_is_rejected() {
    let x = RawFrame::tcp(ip("10.0.0.1"), 1, ip("10.0.0.2"), 2, 0);
    let (p, _) = bgn_payload(4);
    let bytes = encapsulate(&x, &p, ip("1.1.1.1"), ip("2.2.2.2"))
        .unwrap()
        .to_bytes()
        .unwrap();
    assert!(decapsulate(&bytes[..bytes.len() - 1]).is_err());
    let mut bad = bytes.clone();
    bad[12] ^= 1;
    assert!(decapsulate(&bad).is_err());
}

fn firewall() -> NetworkFunction {
    NetworkFunction::single(Policy::equality(
        ipv4::S_IP,
        u32::from(ip("127.0.0.1")) as u64,
        ipv4::TAG,
        tag::DROP,
    ))
}

#[test]
fn client_verdict_follows_the_match_value() {
    let (p, sk) = bgn_payload(5);
    let layout = Arc::new(Layout::ipv4());
    let x = Packet::zeroed(layout.clone());
    let mut c = OpCounts::default();
    let (v, out) = client_verdict(&sk, &firewall(), x.clone(), &[p], &mut c).unwrap();
    assert_eq!(v, Verdict::Drop);
    assert_eq!(out.get(ipv4::TAG).unwrap(), tag::DROP);

    let mut r = rng(6);
    let pk = sk.public_key();
    let seven = BgnCompact {
        current: pk.encrypt_target(0, &mut r).unwrap(),
        replacement: pk.encrypt(tag::DROP, &mut r).unwrap(),
        c: pk.encrypt_target(7, &mut r).unwrap(),
    };
    let p7 = PnfvPayload::bgn(0, &seven, pk).unwrap();
    let (v, out) = client_verdict(&sk, &firewall(), x.clone(), &[p7], &mut c).unwrap();
    assert_eq!(v, Verdict::Forward);
    assert_eq!(out, x);

    let other = PnfvPayload::new(SchemeId::Peks, 0, vec![]).unwrap();
    assert!(matches!(
        client_verdict(&sk, &firewall(), x, &[other], &mut c),
        Err(SimError::UnknownScheme(3))
    ));
}

/// Plaintext firewall: drop exactly when the evaluated tag is DROP.
fn oracle_verdict(nf: &NetworkFunction, frame: &RawFrame) -> Verdict {
    let x = fields_from_frame(frame, &Arc::new(Layout::ipv4())).unwrap();
    if eval(nf, &x).unwrap().get(ipv4::TAG).unwrap() == tag::DROP {
        Verdict::Drop
    } else {
        Verdict::Forward
    }
}

fn firewall_frames(r: &mut ChaCha8Rng, count: usize) -> Vec<RawFrame> {
    (0..count)
        .map(|_| {
            let src = if r.gen_bool(0.3) {
                ip("127.0.0.1")
            } else {
                Ipv4Addr::from(r.gen::<u32>())
            };
            let d_port = if r.gen_bool(0.2) { 22 } else { r.gen() };
            RawFrame::tcp(src, r.gen(), ip("10.0.0.2"), d_port, tcp_flags::SYN)
        })
        .collect()
}

#[test]
fn bgn_verdicts_match_the_plaintext_firewall() {
    let nf = NetworkFunction::new(vec![
        firewall().policies()[0],
        Policy::equality(ipv4::D_PORT, 22, ipv4::TAG, tag::DROP),
    ])
    .unwrap();
    let mut sim = Simulator::new(&SimConfig::default(), nf.clone()).unwrap();
    let mut r = rng(7);
    for f in firewall_frames(&mut r, 500) {
        let want = oracle_verdict(&nf, &f);
        assert_eq!(sim.inject(f, Some(want)).unwrap(), want);
    }
    let trace = sim.into_trace();
    assert_eq!(trace.verdicts.len(), 500);
    assert_eq!(trace.mismatches(), 0);
    assert!(trace.verdicts.iter().any(|v| v.verdict == Verdict::Drop));
}

#[test]
fn peks_and_fhe_verdicts_match_the_plaintext_firewall() {
    let nf = firewall();
    for scheme in [SchemeId::Peks, SchemeId::Fhe] {
        let cfg = SimConfig {
            scheme,
            ..SimConfig::default()
        };
        let mut sim = Simulator::new(&cfg, nf.clone()).unwrap();
        let mut r = rng(8);
        for f in firewall_frames(&mut r, 60) {
            let want = oracle_verdict(&nf, &f);
            assert_eq!(sim.inject(f, Some(want)).unwrap(), want, "{scheme}");
        }
    }
}

#[test]
fn peks_cloud_never_sees_a_plaintext_five_tuple() {
    let cfg = SimConfig {
        scheme: SchemeId::Peks,
        stateful: true,
        ..SimConfig::default()
    };
    let mut sim = Simulator::new(&cfg, firewall()).unwrap();
    let mut r = rng(9);
    for f in firewall_frames(&mut r, 30) {
        sim.inject(f, None).unwrap();
    }
    let seen = sim.deployment().cloud.observed_frames();
    assert_eq!(seen.len(), 30);
    assert!(seen.iter().all(|f| f.five_tuple_is_zero() && f.checksum_ok()));
}

#[test]
fn forwarded_frames_restore_the_tuple() {
    let cfg = SimConfig {
        scheme: SchemeId::Peks,
        ..SimConfig::default()
    };
    let mut sim = Simulator::new(&cfg, firewall()).unwrap();
    let f = RawFrame::tcp(ip("10.1.2.3"), 4444, ip("10.0.0.2"), 80, tcp_flags::SYN);
    sim.inject(f.clone(), Some(Verdict::Forward)).unwrap();
    let egress = sim.trace().events_named("egress").next().unwrap();
    assert_eq!(egress.detail, f.summary());
}

#[test]
fn firewall_scenario() {
    let trace = run_scenario_file(scenarios().join("firewall.pnfv")).unwrap();
    let verdicts: Vec<_> = trace.verdicts.iter().map(|v| v.verdict).collect();
    use Verdict::*;
    assert_eq!(verdicts, [Drop, Forward, Drop, Forward]);
    assert_eq!(trace.mismatches(), 0);
    for line in trace.to_string().lines() {
        assert_eq!(line.split('\t').count(), 4, "{line}");
    }
    for send in trace.events_named("send") {
        assert!(send.detail.starts_with("bytes="), "{}", send.detail);
    }
    // 54-byte TCP frames, one 99-byte payload each
    assert!(trace
        .events_named("send")
        .any(|e| e.detail.starts_with("bytes=173 ")));
}

fn run_handshake(scheme: &str) -> pnfv::sim::Trace {
    let script = std::fs::read_to_string(scenarios().join("tcp_handshake.pnfv"))
        .unwrap()
        .replace("scheme peks", &format!("scheme {scheme}"));
    run_scenario(&script, scenarios()).unwrap()
}

#[test]
fn tcp_handshake_lifecycle() {
    for scheme in ["peks", "bgn"] {
        let trace = run_handshake(scheme);
        assert_eq!(trace.mismatches(), 0, "{scheme}");
        let client: Vec<(u64, &str)> = trace
            .events
            .iter()
            .filter(|e| e.role == pnfv::sim::Role::Client && e.event.starts_with("state-"))
            .map(|e| (e.time, e.event.as_str()))
            .collect();
        assert_eq!(
            client,
            [
                (10, "state-create"),
                (10, "state-created"),
                (20, "state-update"),
                (40, "state-delete")
            ],
            "{scheme}"
        );
        assert!(trace
            .events_named("state-update")
            .any(|e| e.detail.ends_with("new->est")));
        let hits: Vec<_> = trace.events_named("state-hit").collect();
        assert_eq!(hits.len(), 3, "{scheme}");
        assert!(hits.iter().all(|e| e.detail.contains("static_ops=0 ")));
        let cloud_deletes = trace
            .events_named("state-delete")
            .filter(|e| e.role == pnfv::sim::Role::Cloud)
            .count();
        assert_eq!(cloud_deletes, 1);
        assert!(trace
            .events_named("state-delete")
            .any(|e| e.role == pnfv::sim::Role::Cloud && e.detail.ends_with("entries=0")));
    }
}

#[test]
fn nat_scenario_rewrites_destination() {
    let trace = run_scenario_file(scenarios().join("nat.pnfv")).unwrap();
    assert_eq!(trace.mismatches(), 0);
    let egress: Vec<_> = trace.events_named("egress").map(|e| e.detail.clone()).collect();
    assert_eq!(egress.len(), 2);
    assert!(egress[0].contains("-> 10.0.0.80:443"), "{}", egress[0]);
    assert!(egress[1].contains("-> 203.0.113.11:443"), "{}", egress[1]);
}

#[test]
fn script_edge_cases() {
    let t = run_scenario("", ".").unwrap();
    assert!(t.is_empty() && t.verdicts.is_empty());
    let t = run_scenario("# only comments\n\n", ".").unwrap();
    assert!(t.is_empty());
    assert!(matches!(
        run_scenario("policies missing.pol\n", scenarios()),
        Err(SimError::UnknownPolicyFile { .. })
    ));
    let err = run_scenario("scheme nope\n", ".").unwrap_err();
    assert!(matches!(err, SimError::Script { line: 1, .. }));
    let late = "policy eq 1 1 set 6 2\nudp 1.1.1.1:1 2.2.2.2:2 expect forward\nscheme peks\n";
    assert!(matches!(
        run_scenario(late, "."),
        Err(SimError::Script { line: 3, .. })
    ));
    let stateful_fhe =
        "scheme fhe\nstateful on\npolicy eq 1 1 set 6 2\nudp 1.1.1.1:1 2.2.2.2:2 expect forward\n";
    assert!(matches!(
        run_scenario(stateful_fhe, "."),
        Err(SimError::Unsupported(_))
    ));
}

#[test]
fn hex_injection_matches_builder() {
    let f = RawFrame::tcp(ip("127.0.0.1"), 9, ip("10.0.0.2"), 80, tcp_flags::SYN);
    let script = format!(
        "scheme bgn\npolicies firewall.pol\ninject {} expect drop\n",
        hex::encode(f.as_bytes())
    );
    let trace = run_scenario(&script, scenarios()).unwrap();
    assert_eq!(trace.verdicts[0].verdict, Verdict::Drop);
    assert_eq!(trace.verdicts[0].frame, f.summary());
    assert_eq!(f.protocol(), PROTO_TCP);
}

#[test]
fn same_seed_same_trace() {
    let a = run_scenario_file(scenarios().join("tcp_handshake.pnfv")).unwrap();
    let b = run_scenario_file(scenarios().join("tcp_handshake.pnfv")).unwrap();
    assert_eq!(a.to_string(), b.to_string());
    assert_eq!(a.cloud_counts, b.cloud_counts);
}
