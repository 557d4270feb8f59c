//! Polynomial hash families over the Mersenne prime field `GF(2^61 - 1)`.
//!
//! A polynomial with `kappa` uniformly random coefficients is a `kappa`-wise
//! independent function on the field; reducing the field value `mod range`
//! gives the 2-universal / 2-independent building blocks from which the
//! class Z is assembled (`kappa = 2`), or the higher-independence variant.

use rand::Rng;

use crate::error::{param, Error, Result};
use crate::prng::Prng;

/// The field modulus. Keys must be strictly smaller.
pub const PRIME: u64 = (1 << 61) - 1;

/// Largest supported independence degree.
pub const MAX_KAPPA: usize = 64;

#[inline]
fn reduce(x: u128) -> u64 {
    // x < 2^122, so two folds bring it below 2^62
    let folded = (x & PRIME as u128) + (x >> 61);
    let folded = (folded & PRIME as u128) as u64 + (folded >> 61) as u64;
    if folded >= PRIME {
        folded - PRIME
    } else {
        folded
    }
}

#[inline]
pub(crate) fn mul_add_mod(acc: u64, x: u64, coeff: u64) -> u64 {
    reduce(acc as u128 * x as u128 + coeff as u128)
}

/// Checks that a key lies in the admissible universe `[0, PRIME)`.
#[inline]
pub fn check_key(x: u64) -> Result<()> {
    if x < PRIME {
        Ok(())
    } else {
        Err(Error::Domain { key: x, bound: PRIME })
    }
}

/// `x -> ((sum_i a_i x^i) mod p) mod range`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyHash {
    coeffs: Vec<u64>,
    range: u64,
}

impl PolyHash {
    /// `coeffs[i]` multiplies `x^i`.
    pub fn new(coeffs: Vec<u64>, range: u64) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() > MAX_KAPPA {
            return Err(param(format!(
                "polynomial needs 1..={MAX_KAPPA} coefficients, got {}",
                coeffs.len()
            )));
        }
        if range == 0 {
            return Err(param("hash range must be at least 1"));
        }
        if let Some(&c) = coeffs.iter().find(|&&c| c >= PRIME) {
            return Err(param(format!("coefficient {c} is not a field element")));
        }
        Ok(PolyHash { coeffs, range })
    }

    /// Draws `kappa` coefficients uniformly from the field. The leading
    /// coefficient may be zero.
    pub fn draw(prng: &mut Prng, kappa: usize, range: u64) -> Result<Self> {
        if kappa == 0 || kappa > MAX_KAPPA {
            return Err(param(format!("kappa must lie in 1..={MAX_KAPPA}, got {kappa}")));
        }
        if range == 0 {
            return Err(param("hash range must be at least 1"));
        }
        let coeffs = (0..kappa).map(|_| prng.random_range(0..PRIME)).collect();
        Ok(PolyHash { coeffs, range })
    }

    pub fn eval(&self, x: u64) -> Result<u64> {
        check_key(x)?;
        Ok(self.eval_unchecked(x))
    }

    /// Horner evaluation; the caller guarantees `x < PRIME`.
    #[inline]
    pub fn eval_unchecked(&self, x: u64) -> u64 {
        self.field_value(x) % self.range
    }

    #[inline]
    pub(crate) fn field_value(&self, x: u64) -> u64 {
        let mut acc = 0u64;
        for &a in self.coeffs.iter().rev() {
            acc = mul_add_mod(acc, x, a);
        }
        acc
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn kappa(&self) -> usize {
        self.coeffs.len()
    }

    pub fn range(&self) -> u64 {
        self.range
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use num_bigint::BigUint;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn wide_eval(coeffs: &[u64], x: u64, range: u64) -> u64 {
        let p = BigUint::from(PRIME);
        let x = BigUint::from(x);
        let mut sum = BigUint::from(0u32);
        let mut power = BigUint::from(1u32);
        for &a in coeffs {
            sum += BigUint::from(a) * &power;
            power *= &x;
        }
        let v = (sum % p) % BigUint::from(range);
        v.try_into().unwrap()
    }

    #[test]
    fn draws_are_deterministic() {
        let a = PolyHash::draw(&mut Prng::new(1), 2, 10).unwrap();
        let b = PolyHash::draw(&mut Prng::new(1), 2, 10).unwrap();
        assert_eq!(a.coefficients(), b.coefficients());
        assert_eq!(a.kappa(), 2);
    }

    #[test]
    fn zero_polynomial_maps_everything_to_zero() {
        let h = PolyHash::new(vec![0, 0, 0], 13).unwrap();
        for x in [0, 1, 12345, PRIME - 1] {
            assert_eq!(h.eval(x).unwrap(), 0);
        }
    }

    #[test]
    fn constant_polynomial() {
        let h = PolyHash::new(vec![5], 3).unwrap();
        assert_eq!(h.eval(77).unwrap(), 2);
        assert_eq!(h.eval(0).unwrap(), 2);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(PolyHash::draw(&mut Prng::new(0), 2, 0), Err(Error::Parameter(_))));
        assert!(matches!(PolyHash::draw(&mut Prng::new(0), 0, 5), Err(Error::Parameter(_))));
        assert!(matches!(PolyHash::draw(&mut Prng::new(0), 65, 5), Err(Error::Parameter(_))));
        assert!(PolyHash::new(vec![PRIME], 5).is_err());
        assert!(PolyHash::new(vec![], 5).is_err());
    }

    #[test]
    fn keys_at_or_above_the_prime_are_rejected() {
        let h = PolyHash::new(vec![1, 1], 100).unwrap();
        assert!(matches!(h.eval(PRIME), Err(Error::Domain { .. })));
        assert!(matches!(h.eval(u64::MAX), Err(Error::Domain { .. })));
        assert!(h.eval(PRIME - 1).is_ok());
    }

    #[test]
    fn pair_collision_rate_within_two_universal_bound() {
        let r = 97u64;
        let h = PolyHash::draw(&mut Prng::new(7), 3, r).unwrap();
        let mut keys = Prng::new(1007);
        let trials = 10_000u32;
        let mut hits = 0u32;
        for _ in 0..trials {
            let x = keys.random_range(0..PRIME);
            let mut y = keys.random_range(0..PRIME);
            while y == x {
                y = keys.random_range(0..PRIME);
            }
            if h.eval(x).unwrap() == h.eval(y).unwrap() {
                hits += 1;
            }
        }
        let bound = 2.0 / r as f64;
        let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
        let rate = hits as f64 / trials as f64;
        assert!(rate <= bound + 3.0 * sigma, "rate {rate} > {bound} + 3*{sigma}");
    }

    #[test]
    fn four_wise_joint_distribution_is_uniform() {
        let keys = [3u64, 1_000_003, 77_777_777, PRIME - 2];
        let r = 4u64;
        let draws = 10_000;
        let mut counts = vec![0u64; 256];
        let root = Prng::new(4242);
        for i in 0..draws {
            let h = PolyHash::draw(&mut root.child(i), 4, r).unwrap();
            let idx = keys
                .iter()
                .fold(0usize, |acc, &x| acc * 4 + h.eval(x).unwrap() as usize);
            counts[idx] += 1;
        }
        let expected = draws as f64 / 256.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let p = 1.0 - ChiSquared::new(255.0).unwrap().cdf(chi2);
        assert!(p > 0.001, "chi2 = {chi2}, p = {p}");
    }

    proptest! {
        #[test]
        fn horner_matches_wide_arithmetic(
            coeffs in prop::collection::vec(0..PRIME, 1..8),
            x in 0..PRIME,
            range in 1u64..u64::MAX,
        ) {
            let h = PolyHash::new(coeffs.clone(), range).unwrap();
            prop_assert_eq!(h.eval(x).unwrap(), wide_eval(&coeffs, x, range));
        }

        #[test]
        fn linear_case_matches_wide_arithmetic(a in 0..PRIME, b in 0..PRIME, x in 0..PRIME, r in 1u64..1_000_000) {
            let h = PolyHash::new(vec![b, a], r).unwrap();
            prop_assert_eq!(h.eval(x).unwrap(), wide_eval(&[b, a], x, r));
            prop_assert!(h.eval(x).unwrap() < r);
        }
    }
}
