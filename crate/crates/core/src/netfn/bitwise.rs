//! Bit-level comparison predicates written as sums and products over bits,
//! the form an arithmetic circuit evaluates them in.
//!
//! Bits are numbered `1..=w` with the most significant bit at position `w`.

fn bit(x: u64, k: u32) -> u64 {
    (x >> (k - 1)) & 1
}

/// `c_k = a_k b_k + (1 - a_k)(1 - b_k)`: 1 iff bit `k` agrees.
fn agree(a: u64, b: u64, k: u32) -> u64 {
    let (ak, bk) = (bit(a, k), bit(b, k));
    ak * bk + (1 - ak) * (1 - bk)
}

/// Bitwise AND `a ⊙ b`, the product of all `c_k`. Returns 1 iff `a == b`.
pub fn bitwise_and_eq(a: u64, b: u64, width: u32) -> u8 {
    assert!((1..=64).contains(&width));
    (1..=width).map(|k| agree(a, b, k)).product::<u64>() as u8
}

/// `a ⊵ b`: the sum over `k` of `c_w ... c_{k+1} a_k (1 - b_k)` plus the
/// all-agree term. Exactly one term is 1 when `a >= b`.
pub fn bitwise_geq(a: u64, b: u64, width: u32) -> u8 {
    assert!((1..=64).contains(&width));
    let mut prefix = 1u64;
    let mut sum = 0u64;
    for k in (1..=width).rev() {
        sum += prefix * bit(a, k) * (1 - bit(b, k));
        prefix *= agree(a, b, k);
    }
    (sum + prefix) as u8
}

/// `a ⊴ b`, defined as `b ⊵ a`.
pub fn bitwise_leq(a: u64, b: u64, width: u32) -> u8 {
    bitwise_geq(b, a, width)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(bitwise_and_eq(5, 5, 8), 1);
        assert_eq!(bitwise_and_eq(5, 3, 8), 0);
        assert_eq!(bitwise_geq(5, 3, 8), 1);
        assert_eq!(bitwise_geq(3, 5, 8), 0);
        assert_eq!(bitwise_geq(4, 4, 8), 1);
        assert_eq!(bitwise_leq(3, 5, 8), 1);
        assert_eq!(bitwise_leq(5, 3, 8), 0);
    }

    #[test]
    fn full_width() {
        let max = u32::MAX as u64;
        assert_eq!(bitwise_geq(max, max - 1, 32), 1);
        assert_eq!(bitwise_leq(max, max - 1, 32), 0);
        assert_eq!(bitwise_and_eq(max, max, 32), 1);
    }
}
