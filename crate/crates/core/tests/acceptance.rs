//! One pass/fail line per acceptance criterion. Tolerances are the
//! constants below.

mod common;

use std::collections::HashSet;
use std::net::Ipv4Addr;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::*;
use pnfv::bench::{aggregate_ms, run_benchmark, sweep, trends, Axis, BenchConfig, BenchRow, Phase};
use pnfv::crypto::{bgn as bgn_crypto, peks as peks_crypto, pke, Permutation, PrpKey};
use pnfv::netfn::{bitwise_and_eq, bitwise_geq, bitwise_leq, tag, NetworkFunction, Packet, Policy};
use pnfv::ops::OpCounts;
use pnfv::schemes::bgn::{self, BgnCompact};
use pnfv::schemes::{fhe, peks, SchemeId};
use pnfv::sim::{decapsulate, encapsulate, run_scenario_file, PnfvPayload, RawFrame, Role};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORACLE_CASES: usize = 1000;
const ORACLE_BUDGET: Duration = Duration::from_secs(120);
const RANGE_CASES: usize = 1000;
const WIRE_ROUND_TRIPS: usize = 1000;
const MINIMAL_FRAME_BYTES: usize = 153;
const GRID_FIELDS: [usize; 6] = [5, 10, 15, 20, 25, 30];
const GRID_POLICIES: [usize; 5] = [1, 5, 10, 20, 30];
const TREND_FIELDS: usize = 5;
const TREND_TRIALS: usize = 5;
const FLAT_SPREAD: f64 = 1.5;
const HOMOMORPHISM_CASES: usize = 10_000;
const BSGS_STRIDE: usize = 97;
const PEKS_MISMATCH_TRIALS: usize = 10_000;
const FRESHNESS_SAMPLES: usize = 1000;
const PRP_NONCE_TRIALS: u64 = 1000;
const PRP_DISTINCT_FRACTION: f64 = 0.99;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let shapes = |case: usize| ([5, 10][case % 2], [1, 5, 10][(case / 2) % 3]);

    let mut r = rng(100);
    let (pk, sk) = bgn::keygen(bgn::DEFAULT_PRIME_BITS, &mut r).map_err(|e| e.to_string())?;
    sk.precompute();
    for case in 0..ORACLE_CASES {
        let (n, big_n) = shapes(case);
        let l = layout(n, 32);
        let nf = independent_equalities(&mut r, &l, big_n);
        let x = random_packet(&mut r, &l);
        let mut c = OpCounts::default();
        let f = bgn::transform(&pk, &nf, &l, &mut r, &mut c).map_err(|e| e.to_string())?;
        let res = bgn::process_plain(&pk, &f, &x, &mut r, &mut c).map_err(|e| e.to_string())?;
        let out = bgn::decrypt_result(&sk, &nf, &l, &res, &mut c).map_err(|e| e.to_string())?;
        check(out.values() == reference_eval(&nf, &x), || {
            format!("bgn case {case}")
        })?;
    }

    let mut r = rng(101);
    let (pks, keys) = peks::keygen(&mut r);
    let prp = PrpKey::generate(&mut r);
    for case in 0..ORACLE_CASES {
        let (n, big_n) = shapes(case);
        let l = layout(n, 32);
        let nf = random_equalities(&mut r, &l, big_n);
        let x = random_packet(&mut r, &l);
        let mut c = OpCounts::default();
        let f = peks::transform(&keys, &nf, &l, &mut r, &mut c).map_err(|e| e.to_string())?;
        let entry =
            peks::entry_process(&pks, &prp, case as u64, &x, &mut r, &mut c).map_err(|e| e.to_string())?;
        let cloud = peks::cloud_process(&pks, &f, entry, &mut c).map_err(|e| e.to_string())?;
        let out = peks::decrypt(&keys, &l, &cloud, &mut c).map_err(|e| e.to_string())?;
        check(out.values() == reference_eval(&nf, &x), || {
            format!("peks case {case}")
        })?;
    }

    let mut r = rng(102);
    let (fpk, fsk) = fhe::keygen(&mut r);
    for case in 0..ORACLE_CASES {
        let (n, big_n) = shapes(case);
        let l = layout(n, 32);
        let nf = random_equalities(&mut r, &l, big_n);
        let x = random_packet(&mut r, &l);
        let out = run_fhe(&fpk, &fsk, &nf, &x, &mut r)?;
        check(out.values() == reference_eval(&nf, &x), || {
            format!("fhe case {case}")
        })?;
    }

    let took = start.elapsed();
    check(took < ORACLE_BUDGET, || format!("took {took:?}"))?;
    Ok(format!(
        "{ORACLE_CASES} cases per scheme, 0 mismatches, {:.1} s",
        took.as_secs_f64()
    ))
}

fn run_fhe(
    pk: &pnfv::crypto::FhePublicKey,
    sk: &pnfv::crypto::FheSecretKey,
    nf: &NetworkFunction,
    x: &Packet,
    r: &mut ChaCha8Rng,
) -> Result<Packet, String> {
    let mut c = OpCounts::default();
    let f = fhe::transform(pk, nf, x.layout(), r, &mut c).map_err(|e| e.to_string())?;
    let ex = fhe::encrypt_packet(pk, x, r, &mut c);
    let out = fhe::process(pk, &f, &ex, &mut c).map_err(|e| e.to_string())?;
    fhe::decrypt(sk, x.layout(), &out, &mut c).map_err(|e| e.to_string())
}

/// Field 1 is matched, field 2 starts at 0 and is set to 1 on a match.
fn range_case(r: &mut ChaCha8Rng, case: usize) -> (Policy, Packet, bool) {
    let w: u8 = [8, 12, 16][case % 3];
    let max = (1u64 << w) - 1;
    let a = r.gen_range(0..=max);
    let span = r.gen_range(0..=max);
    let b = r.gen_range(a..=max.min(a + span));
    let x = match case % 5 {
        0 => a,
        1 => b,
        2 => a.saturating_sub(1),
        3 => (b + 1).min(max),
        _ => r.gen_range(0..=max),
    };
    let l = layout(3, w);
    let p = Policy::range(idx(1), a, b, idx(2), 1);
    let inside = a <= x && x <= b;
    (
        p,
        Packet::new(l, vec![x, 0, r.gen_range(0..=max)]).unwrap(),
        inside,
    )
}

fn range_matching() -> Outcome {
    let mut r = rng(200);
    let (pk, sk) = bgn::keygen(bgn::DEFAULT_PRIME_BITS, &mut r).map_err(|e| e.to_string())?;
    sk.precompute();
    let mut boundaries = 0;
    for case in 0..RANGE_CASES {
        let (p, x, inside) = range_case(&mut r, case);
        boundaries += usize::from(case % 5 < 2);
        let nf = NetworkFunction::single(p);
        let l = x.layout().clone();
        let mut c = OpCounts::default();
        let f = bgn::transform(&pk, &nf, &l, &mut r, &mut c).map_err(|e| e.to_string())?;
        let res = bgn::process_plain(&pk, &f, &x, &mut r, &mut c).map_err(|e| e.to_string())?;
        let m = sk
            .decrypt_signed(&res.policies[0].c, 1 << 32)
            .map_err(|e| format!("bgn case {case}: {e}"))?;
        check((m >= 0) == inside, || {
            format!("bgn case {case}: c = {m}, inside = {inside}")
        })?;
        let out = bgn::decrypt_result(&sk, &nf, &l, &res, &mut c).map_err(|e| e.to_string())?;
        check(out.values()[1] == u64::from(inside), || {
            format!("bgn case {case}: output")
        })?;
    }
    let (fpk, fsk) = fhe::keygen(&mut r);
    for case in 0..RANGE_CASES {
        let (p, x, inside) = range_case(&mut r, case);
        let out = run_fhe(&fpk, &fsk, &NetworkFunction::single(p), &x, &mut r)?;
        check(out.values()[1] == u64::from(inside), || {
            format!("fhe case {case}")
        })?;
    }
    Ok(format!(
        "{RANGE_CASES} cases each for bgn and fhe, {boundaries} on a boundary, 0 disagreements"
    ))
}

fn bitwise_algebra() -> Outcome {
    let mut pairs = 0;
    for a in 0..256u64 {
        for b in 0..256u64 {
            check(bitwise_and_eq(a, b, 8) == u8::from(a == b), || {
                format!("and_eq {a} {b}")
            })?;
            check(bitwise_geq(a, b, 8) == u8::from(a >= b), || {
                format!("geq {a} {b}")
            })?;
            check(bitwise_leq(a, b, 8) == u8::from(a <= b), || {
                format!("leq {a} {b}")
            })?;
            pairs += 1;
        }
    }
    Ok(format!("{pairs} pairs for each predicate"))
}

fn random_frame(r: &mut ChaCha8Rng) -> RawFrame {
    let src = Ipv4Addr::from(r.gen::<u32>());
    let dst = Ipv4Addr::from(r.gen::<u32>());
    if r.gen_bool(0.5) {
        RawFrame::tcp(src, r.gen(), dst, r.gen(), r.gen())
    } else {
        let data: Vec<u8> = (0..r.gen_range(0..64)).map(|_| r.gen()).collect();
        RawFrame::udp(src, r.gen(), dst, r.gen(), &data).unwrap()
    }
}

fn wire_format() -> Outcome {
    let mut r = rng(300);
    let (pk, _) = bgn::keygen(bgn::DEFAULT_PRIME_BITS, &mut r).map_err(|e| e.to_string())?;
    let compact = BgnCompact {
        current: pk.encrypt_target(0, &mut r).unwrap(),
        replacement: pk.encrypt(tag::DROP, &mut r).unwrap(),
        c: pk.encrypt_target(1, &mut r).unwrap(),
    };
    let payload = PnfvPayload::bgn(0, &compact, &pk).map_err(|e| e.to_string())?;
    let minimal = RawFrame::build(Ipv4Addr::LOCALHOST, Ipv4Addr::new(10, 0, 0, 2), 0, &[]).unwrap();
    let cloud = Ipv4Addr::new(198, 51, 100, 1);
    let client = Ipv4Addr::new(203, 0, 113, 1);
    let bytes = encapsulate(&minimal, &payload, cloud, client)
        .and_then(|e| e.to_bytes())
        .map_err(|e| e.to_string())?;
    check(bytes.len() == MINIMAL_FRAME_BYTES, || {
        format!("minimal frame gives {} bytes", bytes.len())
    })?;
    let (pks, _) = peks::keygen(&mut r);
    for k in 0..WIRE_ROUND_TRIPS {
        let x = random_frame(&mut r);
        let id = r.gen_range(0..=pnfv::sim::wire::MAX_PAYLOAD_ID);
        let p = if k % 2 == 0 {
            PnfvPayload {
                id,
                ..payload.clone()
            }
        } else {
            let cts: Vec<_> = (0..r.gen_range(1..8))
                .map(|_| pks.pke.encrypt(&r.gen::<[u8; 6]>(), &mut r).unwrap())
                .collect();
            PnfvPayload::new(SchemeId::Peks, id, pnfv::sim::wire::ciphertext_list(&cts)).unwrap()
        };
        let b = encapsulate(&x, &p, cloud, client)
            .and_then(|e| e.to_bytes())
            .map_err(|e| e.to_string())?;
        let (x2, p2) = decapsulate(&b).map_err(|e| format!("round trip {k}: {e}"))?;
        let again = encapsulate(&x2, &p2, cloud, client)
            .and_then(|e| e.to_bytes())
            .unwrap();
        check(x2.as_bytes() == x.as_bytes() && again == b, || {
            format!("round trip {k} differs")
        })?;
    }
    Ok(format!(
        "34 + 20 + 99 = {} bytes; {WIRE_ROUND_TRIPS} round trips byte-exact",
        bytes.len()
    ))
}

fn state_lifecycle() -> Outcome {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/scenarios/tcp_handshake.pnfv");
    let trace = run_scenario_file(&path).map_err(|e| e.to_string())?;
    check(trace.mismatches() == 0, || {
        format!("{} verdict mismatches", trace.mismatches())
    })?;
    let client: Vec<&str> = trace
        .events
        .iter()
        .filter(|e| e.role == Role::Client && e.event.starts_with("state-"))
        .map(|e| e.event.as_str())
        .collect();
    check(
        client == ["state-create", "state-created", "state-update", "state-delete"],
        || format!("client state events {client:?}"),
    )?;
    check(
        trace
            .events_named("state-create")
            .any(|e| e.detail.contains("state=new")),
        || "entry not created as new".into(),
    )?;
    check(
        trace
            .events_named("state-update")
            .any(|e| e.detail.ends_with("new->est")),
        || "no new->est update".into(),
    )?;
    check(
        trace
            .events_named("state-delete")
            .any(|e| e.role == Role::Cloud && e.detail.ends_with("entries=0")),
        || "entry not deleted".into(),
    )?;
    let hits: Vec<_> = trace.events_named("state-hit").collect();
    check(!hits.is_empty(), || "no table hits".into())?;
    check(hits.iter().all(|e| e.detail.contains("static_ops=0 ")), || {
        "static-policy ops on a table hit".into()
    })?;
    Ok(format!(
        "created new, updated to est, deleted on FIN-ACK; {} hits with 0 static ops",
        hits.len()
    ))
}

fn bench(
    scheme: SchemeId,
    n_fields: usize,
    n_policies: usize,
    trials: usize,
) -> Result<Vec<BenchRow>, String> {
    run_benchmark(&BenchConfig {
        scheme,
        n_fields,
        n_policies,
        trials,
        ..BenchConfig::default()
    })
    .map_err(|e| e.to_string())
}

fn ops(rows: &[BenchRow], phase: Phase) -> OpCounts {
    rows.iter()
        .find(|r| r.phase == phase)
        .expect("every phase reported")
        .ops
}

fn complexity_audits() -> Outcome {
    let mut points = 0;
    for n in GRID_FIELDS {
        for big_n in GRID_POLICIES {
            let p = bench(SchemeId::Peks, n, big_n, 3)?;
            let tests = ops(&p, Phase::CloudProcess).tests;
            check(tests == (n * big_n) as u64, || {
                format!("peks n={n} N={big_n}: {tests} tests")
            })?;
            let dec = ops(&p, Phase::ClientDecrypt).decryptions;
            check(dec == n as u64, || {
                format!("peks n={n} N={big_n}: {dec} client decryptions")
            })?;
            let b = bench(SchemeId::Bgn, n, big_n, 3)?;
            let enc = ops(&b, Phase::Transform).encryptions;
            check(enc == ((3 * n + 2) * big_n) as u64, || {
                format!("bgn n={n} N={big_n}: {enc} ciphertexts")
            })?;
            if n == 5 {
                check(enc == 17 * big_n as u64, || format!("bgn n=5 N={big_n}: {enc}"))?;
            }
            points += 1;
        }
    }
    Ok(format!(
        "{points} grid points: peks tests = N*n, peks decryptions = n, bgn transform = 17*N at n=5"
    ))
}

fn trend_reproduction() -> Outcome {
    let base = BenchConfig {
        trials: TREND_TRIALS,
        ..BenchConfig::default()
    };
    let mut rows = Vec::new();
    for scheme in [SchemeId::Bgn, SchemeId::Peks] {
        rows.extend(
            sweep(
                &BenchConfig {
                    scheme,
                    ..base.clone()
                },
                Axis::Policies,
                TREND_FIELDS,
                &GRID_POLICIES,
            )
            .map_err(|e| e.to_string())?,
        );
    }
    let ts = trends(&rows, Axis::Policies);
    let find = |s, p| {
        ts.iter()
            .find(|t| t.scheme == s && t.phase == p)
            .expect("trend present")
    };
    let bgn_cloud = find(SchemeId::Bgn, Phase::CloudProcess);
    check(bgn_cloud.strictly_increasing(), || {
        format!("bgn cloud not increasing: {bgn_cloud}")
    })?;
    let peks_dec = find(SchemeId::Peks, Phase::ClientDecrypt);
    check(peks_dec.spread() <= FLAT_SPREAD, || {
        format!("peks decrypt not flat: {peks_dec}")
    })?;

    let mut worst: f64 = 0.0;
    for n in GRID_FIELDS {
        for big_n in GRID_POLICIES.into_iter().filter(|&v| v >= 5) {
            let p = aggregate_ms(&bench(SchemeId::Peks, n, big_n, TREND_TRIALS)?);
            let b = aggregate_ms(&bench(SchemeId::Bgn, n, big_n, TREND_TRIALS)?);
            check(p < b, || {
                format!("n={n} N={big_n}: peks {p:.4} ms >= bgn {b:.4} ms")
            })?;
            worst = worst.max(p / b);
        }
    }
    Ok(format!(
        "bgn cloud increasing in N, peks decrypt spread {:.2}, peks/bgn aggregate at most {worst:.3}",
        peks_dec.spread()
    ))
}

fn crypto_suite() -> Outcome {
    let mut r = rng(800);
    let (pk, sk) = bgn_crypto::keygen(bgn_crypto::DEFAULT_PRIME_BITS, &mut r).map_err(|e| e.to_string())?;
    sk.precompute();
    for case in 0..HOMOMORPHISM_CASES {
        let (m1, m2) = (r.gen_range(0..1u64 << 16), r.gen_range(0..1u64 << 16));
        let (c1, c2) = (pk.encrypt(m1, &mut r).unwrap(), pk.encrypt(m2, &mut r).unwrap());
        let sum = sk
            .decrypt(&pk.add(&c1, &c2).unwrap(), 1 << 18)
            .map_err(|e| e.to_string())?;
        check(sum == m1 + m2, || format!("add case {case}"))?;
        check(sk.is_value(&pk.mul(&c1, &c2).unwrap(), (m1 * m2) as i64), || {
            format!("mul case {case}")
        })?;
    }
    let mut recovered = 0;
    let signed = [-1i64, -97, -(1 << 20), -(1 << 32)];
    for m in (0..1u64 << 20).step_by(BSGS_STRIDE).chain([0, 1, (1 << 32) - 1]) {
        let got = sk
            .decrypt(&pk.encrypt(m, &mut r).unwrap(), 1 << 32)
            .map_err(|e| e.to_string())?;
        check(got == m, || format!("dlog of {m}"))?;
        recovered += 1;
    }
    for m in signed {
        let got = sk
            .decrypt_signed(&pk.encrypt_signed(m, &mut r), 1 << 32)
            .map_err(|e| e.to_string())?;
        check(got == m, || format!("signed dlog of {m}"))?;
    }

    let (ppk, psk) = peks_crypto::keygen(&mut r);
    let mut false_positives = 0;
    for _ in 0..PEKS_MISMATCH_TRIALS {
        let w: [u8; 6] = r.gen();
        let mut other = w;
        other[r.gen_range(0..6)] ^= 1 << r.gen_range(0..8);
        let c = ppk.encrypt(&w, &mut r);
        check(ppk.test(&c, &psk.trapdoor(&w)), || "peks completeness".into())?;
        false_positives += usize::from(ppk.test(&c, &psk.trapdoor(&other)));
    }
    check(false_positives == 0, || {
        format!("{false_positives} peks false positives")
    })?;

    let (epk, _) = pke::keygen(&mut r);
    let mut seen = [HashSet::new(), HashSet::new(), HashSet::new()];
    for _ in 0..FRESHNESS_SAMPLES {
        seen[0].insert(pk.encode(&pk.encrypt(7, &mut r).unwrap()).to_vec());
        seen[1].insert(ppk.encode_ciphertext(&ppk.encrypt(b"fixed", &mut r)).to_vec());
        seen[2].insert(epk.encrypt(b"fixed", &mut r).unwrap().as_bytes().to_vec());
    }
    check(seen.iter().all(|s| s.len() == FRESHNESS_SAMPLES), || {
        "ciphertext collision".into()
    })?;

    let key = PrpKey::generate(&mut r);
    let mut distinct = 0;
    for t in 0..PRP_NONCE_TRIALS {
        let n = 8 + (t as usize % 23);
        let p = Permutation::shuffle(&key, t, n);
        let mut img = p.as_slice().to_vec();
        img.sort_unstable();
        check(img == (0..n).collect::<Vec<_>>(), || {
            format!("prp not bijective at n={n}")
        })?;
        check(p == Permutation::shuffle(&key, t, n), || {
            "prp not deterministic".into()
        })?;
        distinct += usize::from(p != Permutation::shuffle(&key, t + PRP_NONCE_TRIALS, n));
    }
    let frac = distinct as f64 / PRP_NONCE_TRIALS as f64;
    check(frac >= PRP_DISTINCT_FRACTION, || {
        format!("only {frac:.3} of nonce pairs differ")
    })?;
    Ok(format!(
        "{HOMOMORPHISM_CASES} add/mul cases, {recovered} dlogs + {} signed, 0/{PEKS_MISMATCH_TRIALS} false positives, \
         0 collisions in {FRESHNESS_SAMPLES} x 3, prp distinct {frac:.3}",
        signed.len()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("range matching", range_matching),
        ("bitwise algebra", bitwise_algebra),
        ("wire format", wire_format),
        ("state table lifecycle", state_lifecycle),
        ("complexity audits", complexity_audits),
        ("trend reproduction", trend_reproduction),
        ("crypto property suite", crypto_suite),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
