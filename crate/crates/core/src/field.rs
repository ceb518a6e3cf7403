//! Arithmetic modulo the Mersenne prime 2^61 - 1, seeded hash families and
//! seed derivation.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// The prime 2^61 - 1.
pub const MODULUS: u64 = (1 << 61) - 1;

#[inline]
pub fn reduce(x: u64) -> u64 {
    let r = (x & MODULUS) + (x >> 61);
    if r >= MODULUS {
        r - MODULUS
    } else {
        r
    }
}

#[inline]
pub fn add_mod(a: u64, b: u64) -> u64 {
    let r = a + b;
    if r >= MODULUS {
        r - MODULUS
    } else {
        r
    }
}

#[inline]
pub fn sub_mod(a: u64, b: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + MODULUS - b
    }
}

#[inline]
pub fn mul_mod(a: u64, b: u64) -> u64 {
    let p = (a as u128) * (b as u128);
    let lo = (p as u64) & MODULUS;
    let hi = (p >> 61) as u64;
    reduce(lo + hi)
}

pub fn pow_mod(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1u64;
    base = reduce(base);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base);
        }
        base = mul_mod(base, base);
        exp >>= 1;
    }
    acc
}

/// Maps a signed integer to its residue.
#[inline]
pub fn from_signed(x: i64) -> u64 {
    let r = (x as i128).rem_euclid(MODULUS as i128);
    r as u64
}

/// Deterministic generator for one named stream of a seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw from `[0, bound)`.
pub fn below(rng: &mut impl RngCore, bound: u64) -> u64 {
    assert!(bound > 0, "empty range");
    let zone = u64::MAX - (u64::MAX % bound);
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % bound;
        }
    }
}

/// Mixes several words into one seed (splitmix64 finalizer chain).
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut h = 0x9e37_79b9_7f4a_7c15u64;
    for &p in parts {
        h ^= p.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(h << 6).wrapping_add(h >> 2);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

/// Pairwise-independent hash `x -> (a*x + b) mod p` over the 2^61 - 1 field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairwiseHash {
    a: u64,
    b: u64,
}

impl PairwiseHash {
    pub fn draw(rng: &mut impl RngCore) -> Self {
        let a = 1 + below(rng, MODULUS - 1);
        let b = below(rng, MODULUS);
        PairwiseHash { a, b }
    }

    #[inline]
    pub fn hash(&self, x: u64) -> u64 {
        add_mod(mul_mod(self.a, reduce(x)), self.b)
    }

    /// Hash folded into `[0, buckets)`.
    #[inline]
    pub fn bucket(&self, x: u64, buckets: u64) -> u64 {
        ((self.hash(x) as u128 * buckets as u128) / MODULUS as u128) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_matches_wide_reference() {
        let cases = [(0, 5), (1, MODULUS - 1), (MODULUS - 1, MODULUS - 1), (123_456_789, 987_654_321_012)];
        for (a, b) in cases {
            let want = ((a as u128 * b as u128) % MODULUS as u128) as u64;
            assert_eq!(mul_mod(a, b), want);
        }
    }

    #[test]
    fn pow_small() {
        assert_eq!(pow_mod(3, 0), 1);
        assert_eq!(pow_mod(3, 5), 243);
        assert_eq!(pow_mod(2, 61), 1);
    }

    #[test]
    fn signed_residue() {
        assert_eq!(from_signed(-1), MODULUS - 1);
        assert_eq!(from_signed(7), 7);
    }

    #[test]
    fn buckets_in_range() {
        let mut rng = stream_rng(3, 0);
        let h = PairwiseHash::draw(&mut rng);
        for x in 0..1000 {
            assert!(h.bucket(x, 7) < 7);
        }
    }
}
