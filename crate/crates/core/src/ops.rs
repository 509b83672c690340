//! Operation counters for complexity audits.

use std::ops::{Add, AddAssign};

/// Cryptographic operations performed by one role during one phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct OpCounts {
    pub encryptions: u64,
    pub decryptions: u64,
    /// Homomorphic additions, subtractions and scalings.
    pub homomorphic_adds: u64,
    /// Homomorphic multiplications (for BGN these are also pairings).
    pub homomorphic_muls: u64,
    pub pairings: u64,
    pub dlogs: u64,
    /// Decryption-free `c == v` checks.
    pub value_checks: u64,
    pub trapdoors: u64,
    /// Keyword match tests against static policies.
    pub tests: u64,
    /// Tests locating the action field of a matched policy.
    pub index_tests: u64,
    /// Tests against state-table entries.
    pub state_tests: u64,
}

impl OpCounts {
    /// Every operation attributable to static policy evaluation.
    pub fn static_policy_ops(&self) -> u64 {
        self.homomorphic_adds + self.homomorphic_muls + self.tests + self.index_tests
    }
}

impl AddAssign for OpCounts {
    fn add_assign(&mut self, o: Self) {
        self.encryptions += o.encryptions;
        self.decryptions += o.decryptions;
        self.homomorphic_adds += o.homomorphic_adds;
        self.homomorphic_muls += o.homomorphic_muls;
        self.pairings += o.pairings;
        self.dlogs += o.dlogs;
        self.value_checks += o.value_checks;
        self.trapdoors += o.trapdoors;
        self.tests += o.tests;
        self.index_tests += o.index_tests;
        self.state_tests += o.state_tests;
    }
}

impl Add for OpCounts {
    type Output = Self;

    fn add(mut self, o: Self) -> Self {
        self += o;
        self
    }
}
