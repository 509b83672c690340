//! Seeded policy and packet workloads.

use std::sync::Arc;

use rand::Rng;

use crate::netfn::{FieldIndex, Layout, Match, NetworkFunction, Packet, Policy};

/// Field width of equality workloads: 4-byte attributes.
pub const EQUALITY_WIDTH: u8 = 32;
/// Field width of range workloads, the widest range matching supports.
pub const RANGE_WIDTH: u8 = 16;
const MAX_RANGE_SPAN: u64 = 1 << 8;

#[derive(Clone, Debug)]
pub struct Workload {
    pub layout: Arc<Layout>,
    pub nf: NetworkFunction,
}

fn field<R: Rng + ?Sized>(rng: &mut R, n: usize) -> FieldIndex {
    FieldIndex::from_slot(rng.gen_range(0..n))
}

impl Workload {
    pub fn generate<R: Rng + ?Sized>(rng: &mut R, n_fields: usize, n_policies: usize, ranges: bool) -> Self {
        let width = if ranges { RANGE_WIDTH } else { EQUALITY_WIDTH };
        let layout = Arc::new(Layout::uniform(n_fields, width).expect("1..=30 fields"));
        let max = (1u64 << width) - 1;
        let policies = (0..n_policies)
            .map(|_| {
                let i = field(rng, n_fields);
                let j = field(rng, n_fields);
                let z = rng.gen_range(0..=max);
                if ranges {
                    let a = rng.gen_range(0..=max - MAX_RANGE_SPAN);
                    Policy::range(i, a, a + rng.gen_range(0..MAX_RANGE_SPAN), j, z)
                } else {
                    Policy::equality(i, rng.gen_range(0..=max), j, z)
                }
            })
            .collect();
        Self {
            layout,
            nf: NetworkFunction::new(policies).expect("at least one policy"),
        }
    }

    /// A packet that matches no policy, or with probability `match_rate`
    /// one that matches a randomly chosen policy.
    pub fn packet<R: Rng + ?Sized>(&self, rng: &mut R, match_rate: f64) -> Packet {
        let max = (1u64 << self.layout.max_width()) - 1;
        loop {
            let values = (0..self.layout.len()).map(|_| rng.gen_range(0..=max)).collect();
            let mut x = Packet::new(self.layout.clone(), values).expect("values fit");
            if match_rate > 0.0 && rng.gen_bool(match_rate) {
                let p = &self.nf.policies()[rng.gen_range(0..self.nf.len())];
                let v = match p.matcher {
                    Match::Equality { value, .. } => value,
                    Match::Range { low, high, .. } => rng.gen_range(low..=high),
                };
                x.set(p.matcher.field(), v).expect("value fits");
                return x;
            }
            let any = self
                .nf
                .policies()
                .iter()
                .any(|p| p.matches(&x).expect("workload policies fit the layout"));
            if !any {
                return x;
            }
        }
    }
}
