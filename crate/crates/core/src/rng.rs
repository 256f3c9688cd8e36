//! Seeded random streams.
//!
//! Every random decision draws from a stream identified by the user seed and
//! a path of integer tags (outer run, state, replica or batch, ...). A
//! stream's seed is obtained by folding the tags into the seed with the
//! SplitMix64 finalizer:
//!
//! ```text
//! h0 = mix(seed)
//! h(k+1) = mix(h(k) ^ mix(tag(k) + 0x9E3779B97F4A7C15))
//! ```
//!
//! and the stream is `Pcg64Mcg::seed_from_u64(h)`. Streams therefore do not
//! depend on the order in which work is scheduled.

use num_bigint::{BigUint, RandBigInt};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;

pub type StreamRng = Pcg64Mcg;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream at `tags` below `seed`.
pub fn derive(seed: u64, tags: &[u64]) -> u64 {
    let mut h = splitmix64(seed);
    for &t in tags {
        h = splitmix64(h ^ splitmix64(t.wrapping_add(GOLDEN)));
    }
    h
}

pub fn stream(seed: u64, tags: &[u64]) -> StreamRng {
    Pcg64Mcg::seed_from_u64(derive(seed, tags))
}

/// A probability `num/den` prepared for repeated exact Bernoulli draws.
#[derive(Clone, Debug)]
pub struct ExactProbability {
    num: BigUint,
    den: BigUint,
    small: Option<(u64, u64)>,
    one: bool,
    zero: bool,
}

impl ExactProbability {
    /// `p` must lie in `[0, 1]`.
    pub fn new(p: &BigRational) -> Option<Self> {
        if p.is_negative() || p > &BigRational::one() {
            return None;
        }
        let num = p.numer().to_biguint()?;
        let den = p.denom().to_biguint()?;
        let small = num.to_u64().zip(den.to_u64());
        let one = num == den;
        let zero = num.is_zero();
        Some(ExactProbability { num, den, small, one, zero })
    }

    pub fn is_one(&self) -> bool {
        self.one
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    /// Draws a uniform integer below the denominator and compares it with
    /// the numerator.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        if self.is_one() {
            return true;
        }
        if self.is_zero() {
            return false;
        }
        match self.small {
            Some((n, d)) => rng.gen_range(0..d) < n,
            None => rng.gen_biguint_below(&self.den) < self.num,
        }
    }

    pub fn to_f64(&self) -> f64 {
        crate::rational::to_f64(&BigRational::new(self.num.clone().into(), self.den.clone().into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn derivation_is_stable_and_tag_sensitive() {
        assert_eq!(derive(7, &[1, 2]), derive(7, &[1, 2]));
        assert_ne!(derive(7, &[1, 2]), derive(7, &[2, 1]));
        assert_ne!(derive(7, &[1]), derive(8, &[1]));
        assert_ne!(derive(7, &[]), derive(7, &[0]));
        let mut a = stream(1, &[3]);
        let mut b = stream(1, &[3]);
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn exact_bernoulli_edges_and_rate() {
        let one = ExactProbability::new(&BigRational::one()).unwrap();
        let zero = ExactProbability::new(&BigRational::zero()).unwrap();
        assert!(ExactProbability::new(&BigRational::new(3.into(), 2.into())).is_none());
        let mut rng = stream(0, &[]);
        assert!((0..100).all(|_| one.sample(&mut rng)));
        assert!((0..100).all(|_| !zero.sample(&mut rng)));

        let third = ExactProbability::new(&BigRational::new(1.into(), 3.into())).unwrap();
        let hits = (0..30_000).filter(|_| third.sample(&mut rng)).count();
        assert!((hits as i64 - 10_000).abs() < 500, "{hits}");

        let big = BigRational::new(1.into(), num_bigint::BigInt::from(2u8).pow(70) * 2u8);
        let tiny = ExactProbability::new(&(BigRational::one() - big)).unwrap();
        assert!((0..100).all(|_| tiny.sample(&mut rng)));
    }
}
