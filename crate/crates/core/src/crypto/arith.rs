//! Modular arithmetic on `u128` for moduli below 2^95.

use rand::Rng;

/// Largest supported modulus bit length.
pub const MAX_MODULUS_BITS: u32 = 95;

#[inline]
pub fn add_mod(a: u128, b: u128, m: u128) -> u128 {
    debug_assert!(a < m && b < m);
    if a >= m - b {
        a - (m - b)
    } else {
        a + b
    }
}

#[inline]
pub fn sub_mod(a: u128, b: u128, m: u128) -> u128 {
    debug_assert!(a < m && b < m);
    if a >= b {
        a - b
    } else {
        m - (b - a)
    }
}

#[inline]
pub fn neg_mod(a: u128, m: u128) -> u128 {
    if a == 0 {
        0
    } else {
        m - a
    }
}

/// `a * b mod m`. Splits `b` into 32-bit limbs so every intermediate stays
/// below 2^128 when `m < 2^95`.
pub fn mul_mod(a: u128, b: u128, m: u128) -> u128 {
    debug_assert!(m < (1u128 << MAX_MODULUS_BITS));
    let a = a % m;
    let b = b % m;
    if let Some(p) = a.checked_mul(b) {
        return p % m;
    }
    let mut r = 0u128;
    for shift in [64u32, 32, 0] {
        let limb = (b >> shift) & 0xFFFF_FFFF;
        r = ((r << 32) % m + a * limb) % m;
    }
    r
}

pub fn pow_mod(base: u128, mut exp: u128, m: u128) -> u128 {
    if m == 1 {
        return 0;
    }
    let mut result = 1u128;
    let mut b = base % m;
    while exp > 0 {
        if exp & 1 == 1 {
            result = mul_mod(result, b, m);
        }
        b = mul_mod(b, b, m);
        exp >>= 1;
    }
    result
}

pub fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u128, m: u128) -> Option<u128> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u128)
}

// Deterministic for n < 3.3 * 10^24.
const WITNESSES: [u128; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

pub fn is_prime(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    for p in WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A uniformly chosen prime with exactly `bits` bits.
pub fn random_prime<R: Rng + ?Sized>(bits: u32, rng: &mut R) -> u128 {
    assert!((8..=64).contains(&bits));
    let top = 1u128 << (bits - 1);
    loop {
        let candidate = top | rng.gen_range(0..top) | 1;
        if is_prime(candidate) {
            return candidate;
        }
    }
}

/// Uniform element of `[1, m)` coprime to `m`.
pub fn random_unit<R: Rng + ?Sized>(m: u128, rng: &mut R) -> u128 {
    loop {
        let x = rng.gen_range(1..m);
        if gcd(x, m) == 1 {
            return x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn primality_small() {
        let primes: Vec<u128> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(
            primes,
            vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
        );
        assert!(is_prime((1 << 61) - 1));
        assert!(!is_prime(((1u128 << 61) - 1) * 3));
        // Carmichael number
        assert!(!is_prime(561));
    }

    #[test]
    fn random_prime_has_requested_size() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for bits in [34, 40, 47] {
            let p = random_prime(bits, &mut rng);
            assert_eq!(128 - p.leading_zeros(), bits);
            assert!(is_prime(p));
        }
    }

    proptest! {
        #[test]
        fn mul_mod_matches_schoolbook(a in any::<u128>(), b in any::<u128>(), m in 2u128..(1u128 << 94)) {
            // reference: double-and-add
            let (mut x, mut y, mut r) = (a % m, b % m, 0u128);
            while y > 0 {
                if y & 1 == 1 { r = add_mod(r, x, m); }
                x = add_mod(x, x, m);
                y >>= 1;
            }
            prop_assert_eq!(mul_mod(a, b, m), r);
        }

        #[test]
        fn inverse_is_inverse(a in 1u128..(1u128 << 90), m in 3u128..(1u128 << 90)) {
            if let Some(inv) = inv_mod(a, m) {
                prop_assert_eq!(mul_mod(a, inv, m), 1 % m);
            } else {
                prop_assert!(gcd(a, m) != 1);
            }
        }
    }
}
