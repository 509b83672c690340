//! Baby-step giant-step discrete logarithms over a bounded range.
//!
//! The baby table holds `base^j` for `j < 2^16`; each giant step multiplies
//! the target by `base^-(2^16)`, so a search over `[0, B)` costs at most
//! `ceil(B / 2^16)` table lookups.

use std::collections::HashMap;

use rustc_hash::FxBuildHasher;

use super::group::CyclicGroup;

pub const BABY_STEPS: u64 = 1 << 16;

pub struct BsgsTable<G: CyclicGroup> {
    baby: HashMap<G::Elem, u32, FxBuildHasher>,
    giant_stride: G::Elem,
}

impl<G: CyclicGroup> BsgsTable<G> {
    /// Precomputes `base^0 .. base^(2^16 - 1)`.
    pub fn new(group: &G, base: G::Elem) -> Self {
        let mut baby = HashMap::with_capacity_and_hasher(BABY_STEPS as usize, FxBuildHasher);
        let mut cur = group.identity();
        for j in 0..BABY_STEPS as u32 {
            baby.entry(cur).or_insert(j);
            cur = group.op(cur, base);
        }
        let giant_stride = group.inverse(cur);
        Self { baby, giant_stride }
    }

    /// Smallest `m` in `[0, bound)` with `base^m == target`.
    pub fn solve(&self, group: &G, target: G::Elem, bound: u64) -> Option<u64> {
        let giants = bound.div_ceil(BABY_STEPS);
        let mut gamma = target;
        for i in 0..giants {
            if let Some(&j) = self.baby.get(&gamma) {
                let m = i * BABY_STEPS + j as u64;
                return (m < bound).then_some(m);
            }
            gamma = group.op(gamma, self.giant_stride);
        }
        None
    }

    /// `m` in `[-bound, bound)` with `base^m == target`; tries the
    /// non-negative half first.
    pub fn solve_signed(&self, group: &G, target: G::Elem, bound: u64) -> Option<i64> {
        if let Some(m) = self.solve(group, target, bound) {
            return Some(m as i64);
        }
        self.solve(group, group.inverse(target), bound + 1)
            .filter(|&m| m > 0)
            .map(|m| -(m as i64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::group::{ExpElem, ExpGroup, Source};

    fn setup() -> (ExpGroup<Source>, BsgsTable<ExpGroup<Source>>, ExpElem<Source>) {
        // 2^61 - 1 is prime; base 12345 generates the full group
        let g = ExpGroup::<Source>::new((1 << 61) - 1);
        let base = ExpElem::from_exponent(12345);
        let t = BsgsTable::new(&g, base);
        (g, t, base)
    }

    #[test]
    fn recovers_boundaries() {
        let (g, t, base) = setup();
        for m in [0u64, 1, BABY_STEPS - 1, BABY_STEPS, (1 << 32) - 1] {
            assert_eq!(t.solve(&g, g.pow(base, m as u128), 1 << 32), Some(m));
        }
        assert_eq!(t.solve(&g, g.pow(base, 1 << 32), 1 << 32), None);
        assert_eq!(t.solve(&g, g.pow(base, 100), 100), None);
        assert_eq!(t.solve(&g, g.pow(base, 99), 100), Some(99));
    }

    #[test]
    fn signed_search() {
        let (g, t, base) = setup();
        for m in [-1i64, -6, -(1 << 32), 5, (1 << 32) - 1] {
            assert_eq!(
                t.solve_signed(&g, g.pow_signed(base, m as i128), 1 << 32),
                Some(m)
            );
        }
        assert_eq!(
            t.solve_signed(&g, g.pow_signed(base, -(1 << 32) - 1), 1 << 32),
            None
        );
    }
}
