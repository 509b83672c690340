//! Keyed small-domain permutation: Fisher–Yates driven by a ChaCha stream
//! seeded from `SHA-256(key || nonce || n)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub const KEY_BYTES: usize = 32;

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct PrpKey([u8; KEY_BYTES]);

impl PrpKey {
    pub fn generate<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut k = [0u8; KEY_BYTES];
        rng.fill(&mut k);
        Self(k)
    }

    pub fn from_bytes(bytes: [u8; KEY_BYTES]) -> Self {
        Self(bytes)
    }
}

impl std::fmt::Debug for PrpKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("PrpKey(..)")
    }
}

/// A bijection on `0..n`. Slot `i` of the input lands at `image(i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn shuffle(key: &PrpKey, nonce: u64, n: usize) -> Self {
        let seed: [u8; 32] = Sha256::new()
            .chain_update(key.0)
            .chain_update(nonce.to_be_bytes())
            .chain_update((n as u64).to_be_bytes())
            .finalize()
            .into();
        let mut rng = ChaCha20Rng::from_seed(seed);
        let mut map: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            map.swap(i, j);
        }
        Self { map }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn image(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    /// `out[σ(i)] = items[i]`.
    pub fn apply<T: Clone>(&self, items: &[T]) -> Vec<T> {
        assert_eq!(items.len(), self.map.len(), "permutation length");
        let mut out: Vec<Option<T>> = vec![None; items.len()];
        for (i, item) in items.iter().enumerate() {
            out[self.map[i]] = Some(item.clone());
        }
        out.into_iter().map(|v| v.expect("bijective")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bijective_and_deterministic() {
        let key = PrpKey::from_bytes([7; 32]);
        for n in 1..40 {
            let p = Permutation::shuffle(&key, 3, n);
            let mut s = p.as_slice().to_vec();
            s.sort_unstable();
            assert_eq!(s, (0..n).collect::<Vec<_>>());
            assert_eq!(p, Permutation::shuffle(&key, 3, n));
        }
        assert_eq!(Permutation::shuffle(&key, 9, 1), Permutation::identity(1));
    }

    #[test]
    fn apply_places_items() {
        let p = Permutation::shuffle(&PrpKey::from_bytes([1; 32]), 0, 6);
        let out = p.apply(&[10, 11, 12, 13, 14, 15]);
        for i in 0..6 {
            assert_eq!(out[p.image(i)], 10 + i);
        }
    }
}
