//! Abstract cyclic groups with a bilinear map, and the exponent-tracking
//! backend.
//!
//! The exponent backend represents an element `base^e` by `e mod order` and
//! evaluates the pairing symbolically: `e(base^a, base^b) = gt^(ab)`. Every
//! algebraic identity of a real pairing group holds exactly, which makes it
//! suitable for functional testing and benchmarking protocol shape. It has
//! no security whatsoever: discrete logs are free.

use std::fmt::Debug;
use std::hash::Hash;
use std::marker::PhantomData;

use rand::Rng;

use super::arith::{add_mod, mul_mod, neg_mod, MAX_MODULUS_BITS};
use super::CryptoError;

/// Serialized size of a group element (G1 and G2).
pub const ELEMENT_BYTES: usize = 32;

pub trait CyclicGroup: Send + Sync {
    type Elem: Copy + Eq + Hash + Debug + Send + Sync;

    fn order(&self) -> u128;
    fn identity(&self) -> Self::Elem;
    /// The group law, written multiplicatively.
    fn op(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem;
    fn inverse(&self, a: Self::Elem) -> Self::Elem;
    fn pow(&self, a: Self::Elem, k: u128) -> Self::Elem;
    fn encode(&self, a: Self::Elem) -> [u8; ELEMENT_BYTES];
    fn decode(&self, bytes: &[u8]) -> Result<Self::Elem, CryptoError>;

    fn div(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem {
        self.op(a, self.inverse(b))
    }

    fn pow_signed(&self, a: Self::Elem, k: i128) -> Self::Elem {
        let r = self.pow(a, k.unsigned_abs());
        if k < 0 {
            self.inverse(r)
        } else {
            r
        }
    }
}

/// `e: G1 x G1 -> G2`.
pub trait Pairing: Send + Sync {
    type G1: CyclicGroup;
    type Gt: CyclicGroup;

    fn g1(&self) -> &Self::G1;
    fn gt(&self) -> &Self::Gt;
    fn pair(
        &self,
        a: <Self::G1 as CyclicGroup>::Elem,
        b: <Self::G1 as CyclicGroup>::Elem,
    ) -> <Self::Gt as CyclicGroup>::Elem;
}

/// Marker for the source group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Source;
/// Marker for the target group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Target;

/// `base^exp` in a group of the given level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ExpElem<L> {
    exp: u128,
    _level: PhantomData<L>,
}

impl<L> ExpElem<L> {
    pub fn from_exponent(exp: u128) -> Self {
        Self {
            exp,
            _level: PhantomData,
        }
    }

    pub fn exponent(self) -> u128 {
        self.exp
    }
}

/// Cyclic group `<base>` of a fixed order, elements stored as exponents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpGroup<L> {
    order: u128,
    _level: PhantomData<L>,
}

impl<L> ExpGroup<L> {
    pub fn new(order: u128) -> Self {
        assert!(order > 1 && order < (1u128 << MAX_MODULUS_BITS));
        Self {
            order,
            _level: PhantomData,
        }
    }

    /// The distinguished generator `base`.
    pub fn base(&self) -> ExpElem<L> {
        ExpElem::from_exponent(1)
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> ExpElem<L> {
        ExpElem::from_exponent(rng.gen_range(0..self.order))
    }
}

impl<L> CyclicGroup for ExpGroup<L>
where
    L: Copy + Eq + Hash + Debug + Send + Sync,
{
    type Elem = ExpElem<L>;

    fn order(&self) -> u128 {
        self.order
    }

    fn identity(&self) -> Self::Elem {
        ExpElem::from_exponent(0)
    }

    fn op(&self, a: Self::Elem, b: Self::Elem) -> Self::Elem {
        ExpElem::from_exponent(add_mod(a.exp, b.exp, self.order))
    }

    fn inverse(&self, a: Self::Elem) -> Self::Elem {
        ExpElem::from_exponent(neg_mod(a.exp, self.order))
    }

    fn pow(&self, a: Self::Elem, k: u128) -> Self::Elem {
        ExpElem::from_exponent(mul_mod(a.exp, k, self.order))
    }

    fn encode(&self, a: Self::Elem) -> [u8; ELEMENT_BYTES] {
        let mut out = [0u8; ELEMENT_BYTES];
        out[16..].copy_from_slice(&a.exp.to_be_bytes());
        out
    }

    fn decode(&self, bytes: &[u8]) -> Result<Self::Elem, CryptoError> {
        let bytes: &[u8; ELEMENT_BYTES] = bytes
            .try_into()
            .map_err(|_| CryptoError::Malformed("element length"))?;
        if bytes[..16].iter().any(|&b| b != 0) {
            return Err(CryptoError::Malformed("element out of range"));
        }
        let exp = u128::from_be_bytes(bytes[16..].try_into().expect("16 bytes"));
        if exp >= self.order {
            return Err(CryptoError::Malformed("element out of range"));
        }
        Ok(ExpElem::from_exponent(exp))
    }
}

/// Symbolic pairing between two exponent groups of the same order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpPairing {
    g1: ExpGroup<Source>,
    gt: ExpGroup<Target>,
}

impl ExpPairing {
    pub fn new(order: u128) -> Self {
        Self {
            g1: ExpGroup::new(order),
            gt: ExpGroup::new(order),
        }
    }

    pub fn order(&self) -> u128 {
        self.g1.order
    }
}

impl Pairing for ExpPairing {
    type G1 = ExpGroup<Source>;
    type Gt = ExpGroup<Target>;

    fn g1(&self) -> &Self::G1 {
        &self.g1
    }

    fn gt(&self) -> &Self::Gt {
        &self.gt
    }

    fn pair(&self, a: ExpElem<Source>, b: ExpElem<Source>) -> ExpElem<Target> {
        ExpElem::from_exponent(mul_mod(a.exp, b.exp, self.g1.order))
    }
}

pub type G1 = ExpElem<Source>;
pub type Gt = ExpElem<Target>;
