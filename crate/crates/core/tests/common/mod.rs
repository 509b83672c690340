#![allow(dead_code)]

use std::sync::Arc;

use pnfv::netfn::{FieldIndex, Layout, NetworkFunction, Packet, Policy};
use rand::Rng;

pub fn idx(i: u16) -> FieldIndex {
    FieldIndex::new(i).unwrap()
}

pub fn layout(n: usize, width: u8) -> Arc<Layout> {
    Layout::uniform(n, width).unwrap().into_shared()
}

/// Values drawn from a small pool so that random policies match often.
pub fn small_value<R: Rng>(rng: &mut R, width: u8) -> u64 {
    if rng.gen_bool(0.5) {
        rng.gen_range(0..4)
    } else {
        rng.gen_range(0..(1u64 << width))
    }
}

pub fn random_packet<R: Rng>(rng: &mut R, layout: &Arc<Layout>) -> Packet {
    let values = layout
        .fields()
        .iter()
        .map(|f| small_value(rng, f.bit_width))
        .collect();
    Packet::new(layout.clone(), values).unwrap()
}

fn random_field<R: Rng>(rng: &mut R, n: usize) -> FieldIndex {
    idx(rng.gen_range(1..=n as u16))
}

pub fn random_equality<R: Rng>(rng: &mut R, layout: &Layout) -> Policy {
    let n = layout.len();
    let i = random_field(rng, n);
    let j = random_field(rng, n);
    let wi = layout.width(i).unwrap();
    let wj = layout.width(j).unwrap();
    Policy::equality(i, small_value(rng, wi), j, small_value(rng, wj))
}

/// A policy list in which no policy matches on a field an earlier policy
/// writes, so that every match can be decided on the original packet.
/// Action fields come from a random proper subset, match fields from the
/// rest.
pub fn independent_equalities<R: Rng>(rng: &mut R, layout: &Layout, count: usize) -> NetworkFunction {
    use rand::seq::SliceRandom;
    let n = layout.len();
    assert!(n >= 2);
    let mut slots: Vec<usize> = (0..n).collect();
    slots.shuffle(rng);
    let k = rng.gen_range(1..n);
    let (writes, reads) = slots.split_at(k);
    let policies = (0..count)
        .map(|_| {
            let i = FieldIndex::from_slot(*reads.choose(rng).unwrap());
            let j = FieldIndex::from_slot(*writes.choose(rng).unwrap());
            let wi = layout.width(i).unwrap();
            let wj = layout.width(j).unwrap();
            Policy::equality(i, small_value(rng, wi), j, small_value(rng, wj))
        })
        .collect();
    NetworkFunction::new(policies).unwrap()
}

pub fn random_equalities<R: Rng>(rng: &mut R, layout: &Layout, count: usize) -> NetworkFunction {
    NetworkFunction::new((0..count).map(|_| random_equality(rng, layout)).collect()).unwrap()
}

/// Straight-line reference: apply each policy by hand.
pub fn reference_eval(nf: &NetworkFunction, x: &Packet) -> Vec<u64> {
    use pnfv::netfn::{Action, Match};
    let mut v = x.values().to_vec();
    for p in nf.policies() {
        let hit = match p.matcher {
            Match::Equality { field, value } => v[field.slot()] == value,
            Match::Range { field, low, high } => low <= v[field.slot()] && v[field.slot()] <= high,
        };
        if hit {
            match p.action {
                Action::Replace { field, value } => v[field.slot()] = value,
                Action::Add { field, delta } => {
                    let w = x.layout().width(field).unwrap();
                    let m = 1i128 << w;
                    v[field.slot()] = ((v[field.slot()] as i128 + delta as i128).rem_euclid(m)) as u64;
                }
            }
        }
    }
    v
}
