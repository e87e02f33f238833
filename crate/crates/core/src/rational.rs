//! Rational helpers on top of [`num_rational::BigRational`].

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = num_rational::BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn from_biguint_ratio(num: &BigUint, den: &BigUint) -> Rational {
    Rational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

/// `floor(q)` as `i64`, saturating.
pub fn floor_i64(q: &Rational) -> i64 {
    q.floor().to_integer().to_i64().unwrap_or(if q.is_negative() { i64::MIN } else { i64::MAX })
}

/// `ceil(q)` as `i64`, saturating.
pub fn ceil_i64(q: &Rational) -> i64 {
    q.ceil().to_integer().to_i64().unwrap_or(if q.is_negative() { i64::MIN } else { i64::MAX })
}

/// Nonnegative floor as a budget.
pub fn floor_budget(q: &Rational) -> u64 {
    if q.is_negative() {
        0
    } else {
        q.floor().to_integer().to_u64().unwrap_or(u64::MAX)
    }
}

pub fn to_f64(q: &Rational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    // Keep roughly 64 significant bits of the quotient, then rescale.
    let shift = q.denom().bits() as i64 - q.numer().bits() as i64 + 64;
    let scaled = if shift >= 0 {
        (q.numer() << (shift as usize)) / q.denom()
    } else {
        q.numer() / (q.denom() << ((-shift) as usize))
    };
    scaled.to_f64().unwrap_or(f64::NAN) * libm::exp2(-(shift as f64))
}

/// Integer `q`-th root bounds: returns `(floor, ceil)` of `x^(1/q)`.
pub fn root_bounds(x: &BigUint, q: u32) -> (BigUint, BigUint) {
    let lo = x.nth_root(q);
    let hi = if num_traits::Pow::pow(&lo, q) == *x { lo.clone() } else { &lo + 1u32 };
    (lo, hi)
}

/// `floor(n^e)` for a nonnegative rational exponent `e`, computed exactly.
pub fn floor_pow(n: u64, e: &Rational) -> u64 {
    assert!(!e.is_negative(), "exponent must be nonnegative");
    let p = e.numer().to_u32().expect("exponent numerator too large");
    let q = e.denom().to_u32().expect("exponent denominator too large");
    let x = num_traits::Pow::pow(&BigUint::from(n), p);
    root_bounds(&x, q).0.to_u64().unwrap_or(u64::MAX)
}

/// A rational `t` with `t <= n^(-e)` and `n^(-e) - t < 10^-digits`, for a
/// nonnegative rational exponent `e`.
pub fn neg_pow_lower(n: u64, e: &Rational, digits: u32) -> Rational {
    assert!(!e.is_negative(), "exponent must be nonnegative");
    if e.is_zero() || n <= 1 {
        return Rational::one();
    }
    let p = e.numer().to_u32().expect("exponent numerator too large");
    let q = e.denom().to_u32().expect("exponent denominator too large");
    // n^(p/q) * S = (n^p * S^q)^(1/q); taking the ceiling bounds n^(-p/q) from below.
    let scale = num_traits::Pow::pow(&BigUint::from(10u32), digits);
    let x = num_traits::Pow::pow(&BigUint::from(n), p) * num_traits::Pow::pow(&scale, q);
    let (_, hi) = root_bounds(&x, q);
    Rational::new(BigInt::from(scale), BigInt::from(hi))
}

/// Greatest common divisor of a sequence of unsigned integers (0 for empty).
pub fn gcd_all<'a>(it: impl IntoIterator<Item = &'a BigUint>) -> BigUint {
    let mut g = BigUint::zero();
    for x in it {
        g = g.gcd(x);
        if g.is_one() {
            break;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_pow_is_exact() {
        assert_eq!(floor_pow(64, &rat(1, 2)), 8);
        assert_eq!(floor_pow(64, &rat(9, 10)), 42);
        assert_eq!(floor_pow(100, &rat(1, 1)), 100);
        assert_eq!(floor_pow(7, &rat(0, 1)), 1);
    }

    #[test]
    fn neg_pow_lower_brackets_value() {
        let t = neg_pow_lower(64, &rat(1, 2), 12);
        assert_eq!(t, rat(1, 8));
        let t = neg_pow_lower(10, &rat(1, 3), 12);
        let f = to_f64(&t);
        assert!(f <= 10f64.powf(-1.0 / 3.0) + 1e-15);
        assert!((f - 10f64.powf(-1.0 / 3.0)).abs() < 1e-11);
    }

    #[test]
    fn to_f64_handles_huge_denominators() {
        let tiny = Rational::new(BigInt::one(), BigInt::one() << 2000usize);
        assert_eq!(to_f64(&tiny), 0.0);
        let q = Rational::new(BigInt::from(3) << 1500usize, BigInt::one() << 1501usize);
        assert!((to_f64(&q) - 1.5).abs() < 1e-12);
    }
}
