mod common;

use std::sync::Arc;

use common::*;
use pnfv::netfn::{
    bitwise_and_eq, bitwise_geq, bitwise_leq, eval, match_equality, match_range, parse_policy_file, Layout,
    NetworkFunction, Packet, Policy,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn packet_strategy() -> impl Strategy<Value = Packet> {
    (1usize..=8, 1u8..=32).prop_flat_map(|(n, w)| {
        let l = layout(n, w);
        prop::collection::vec(0..(1u64 << w), n).prop_map(move |v| Packet::new(l.clone(), v).unwrap())
    })
}

#[test]
fn bitwise_predicates_exhaustive_at_8_bits() {
    for a in 0..256u64 {
        for b in 0..256u64 {
            assert_eq!(bitwise_and_eq(a, b, 8), u8::from(a == b), "{a} {b}");
            assert_eq!(bitwise_geq(a, b, 8), u8::from(a >= b), "{a} {b}");
            assert_eq!(bitwise_leq(a, b, 8), u8::from(a <= b), "{a} {b}");
        }
    }
}

#[test]
fn range_with_equal_bounds_is_equality() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let l = Layout::ipv4().into_shared();
    for _ in 0..10_000 {
        let x = random_packet(&mut r, &l);
        let i = idx(r.gen_range(1..=l.len() as u16));
        let y = if r.gen_bool(0.3) {
            x.get(i).unwrap()
        } else {
            small_value(&mut r, l.width(i).unwrap())
        };
        let eq = Policy::equality(i, y, idx(6), 1);
        let rg = Policy::range(i, y, y, idx(6), 1);
        assert_eq!(match_range(&rg, &x).unwrap(), match_equality(&eq, &x).unwrap());
    }
}

proptest! {
    #[test]
    fn bitwise_predicates_match_integer_comparison(w in 1u32..=32, a in any::<u32>(), b in any::<u32>()) {
        let m = (1u64 << w) - 1;
        let (a, b) = (u64::from(a) & m, u64::from(b) & m);
        prop_assert_eq!(bitwise_and_eq(a, b, w), u8::from(a == b));
        prop_assert_eq!(bitwise_geq(a, b, w), u8::from(a >= b));
        prop_assert_eq!(bitwise_leq(a, b, w), u8::from(a <= b));
    }

    #[test]
    fn non_matching_policy_is_identity(x in packet_strategy(), i in 0usize..8, j in 0usize..8, z in any::<u32>()) {
        let l = x.layout().clone();
        let i = idx((i % l.len()) as u16 + 1);
        let j = idx((j % l.len()) as u16 + 1);
        let w = l.width(i).unwrap();
        let y = (x.get(i).unwrap() + 1) & ((1u64 << w) - 1);
        let z = u64::from(z) & ((1u64 << l.width(j).unwrap()) - 1);
        let nf = NetworkFunction::single(Policy::equality(i, y, j, z));
        prop_assert_eq!(eval(&nf, &x).unwrap(), x);
    }

    #[test]
    fn eval_matches_straight_line_reference(seed in any::<u64>(), n in 2usize..10, count in 1usize..12) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let l = layout(n, 8);
        let nf = random_equalities(&mut r, &l, count);
        let x = random_packet(&mut r, &l);
        let got = eval(&nf, &x).unwrap();
        prop_assert_eq!(got.values(), &reference_eval(&nf, &x)[..]);
    }

    #[test]
    fn range_membership(x in 0u64..1 << 16, a in 0u64..1 << 16, span in 0u64..1 << 10) {
        let b = (a + span).min((1 << 16) - 1);
        let l = layout(2, 16);
        let p = Policy::range(idx(1), a, b, idx(2), 1);
        let pkt = Packet::new(l, vec![x, 0]).unwrap();
        prop_assert_eq!(match_range(&p, &pkt).unwrap(), u8::from(a <= x && x <= b));
    }

    #[test]
    fn packet_values_respect_widths(w in 1u8..=32, v in any::<u64>()) {
        let l: Arc<Layout> = layout(1, w);
        let fits = v < 1u64 << w;
        prop_assert_eq!(Packet::new(l, vec![v]).is_ok(), fits);
    }
}

#[test]
fn layout_rejects_bad_widths_and_empty_functions() {
    assert!(Layout::uniform(3, 0).is_err());
    assert!(Layout::uniform(3, 33).is_err());
    assert!(Layout::uniform(0, 8).is_err());
    assert!(NetworkFunction::new(vec![]).is_err());
    let l = layout(2, 8);
    assert!(Policy::range(idx(1), 5, 4, idx(2), 0).validate(&l).is_err());
    assert!(Policy::equality(idx(3), 0, idx(1), 0).validate(&l).is_err());
    assert!(Policy::equality(idx(1), 256, idx(2), 0).validate(&l).is_err());
}

#[test]
fn policy_file_evaluates_like_constructed_policies() {
    let l = Layout::ipv4();
    let nf = parse_policy_file("# nat\neq 2 203.0.113.10 set 2 10.0.0.80\neq 4 22 set 6 2\n", &l).unwrap();
    let built = NetworkFunction::new(vec![
        Policy::equality(idx(2), 0xCB00_710A, idx(2), 0x0A00_0050),
        Policy::equality(idx(4), 22, idx(6), 2),
    ])
    .unwrap();
    assert_eq!(nf, built);
}
