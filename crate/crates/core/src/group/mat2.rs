use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

/// A 2x2 rational matrix stored as integer numerators over one positive
/// common denominator, reduced so that the gcd of all five numbers is 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mat2 {
    num: [BigInt; 4],
    den: BigInt,
}

impl Mat2 {
    /// Builds a matrix from row-major rational entries.
    pub fn new(entries: [Rational; 4]) -> Self {
        let den = entries.iter().fold(BigInt::one(), |acc, e| acc.lcm(e.denom()));
        let num = entries.map(|e| e.numer() * (&den / e.denom()));
        Self::reduce(num, den)
    }

    pub fn identity() -> Self {
        Mat2 { num: [BigInt::one(), BigInt::zero(), BigInt::zero(), BigInt::one()], den: BigInt::one() }
    }

    fn reduce(mut num: [BigInt; 4], mut den: BigInt) -> Self {
        if den.is_negative() {
            den = -den;
            for x in num.iter_mut() {
                *x = -&*x;
            }
        }
        let g = num.iter().fold(den.clone(), |acc, x| acc.gcd(x));
        if !g.is_one() && !g.is_zero() {
            for x in num.iter_mut() {
                *x = &*x / &g;
            }
            den /= &g;
        }
        Mat2 { num, den }
    }

    pub(crate) fn is_canonical(&self) -> bool {
        self.den.is_positive() && *self == Self::reduce(self.num.clone(), self.den.clone())
    }

    pub fn entries(&self) -> [Rational; 4] {
        core::array::from_fn(|i| Rational::new(self.num[i].clone(), self.den.clone()))
    }

    pub fn det(&self) -> Rational {
        let n = &self.num;
        Rational::new(&n[0] * &n[3] - &n[1] * &n[2], &self.den * &self.den)
    }

    pub fn trace(&self) -> Rational {
        Rational::new(&self.num[0] + &self.num[3], self.den.clone())
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let (a, b) = (&self.num, &o.num);
        let num = [
            &a[0] * &b[0] + &a[1] * &b[2],
            &a[0] * &b[1] + &a[1] * &b[3],
            &a[2] * &b[0] + &a[3] * &b[2],
            &a[2] * &b[1] + &a[3] * &b[3],
        ];
        Self::reduce(num, &self.den * &o.den)
    }

    /// Inverse of a determinant-1 matrix: the adjugate.
    ///
    /// For a general invertible matrix this divides by the determinant.
    pub fn inverse(&self) -> Mat2 {
        let n = &self.num;
        let adj = [n[3].clone(), -&n[1], -&n[2], n[0].clone()];
        let det_num = &n[0] * &n[3] - &n[1] * &n[2];
        // inverse = adj / (den * det), with det = det_num / den^2
        // entries: (adj_i / den) / (det_num / den^2) = adj_i * den / det_num
        let scaled = adj.map(|x| x * &self.den);
        Self::reduce(scaled, det_num)
    }

    /// Entry-wise floating point approximation, row-major.
    pub fn to_f64(&self) -> [f64; 4] {
        self.entries().map(|e| crate::rational::to_f64(&e))
    }

    /// Largest absolute value among the entries.
    pub fn max_abs_entry(&self) -> Rational {
        Rational::new(self.num.iter().map(|x| x.abs()).max().unwrap_or_default(), self.den.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn canonical_form_is_unique() {
        let a = Mat2::new([rat(2, 4), rat(0, 1), rat(0, 1), rat(2, 1)]);
        let b = Mat2::new([rat(1, 2), rat(0, 3), rat(0, 7), rat(4, 2)]);
        assert_eq!(a, b);
        assert!(a.is_canonical());
    }

    #[test]
    fn inverse_round_trip() {
        let m = Mat2::new([rat(3, 2), rat(-1, 1), rat(1, 1), rat(0, 1)]);
        assert_eq!(m.det(), rat(1, 1));
        assert_eq!(m.mul(&m.inverse()), Mat2::identity());
        assert_eq!(m.inverse().mul(&m), Mat2::identity());
    }

    #[test]
    fn inverse_of_general_matrix() {
        let m = Mat2::new([rat(2, 1), rat(0, 1), rat(0, 1), rat(3, 1)]);
        assert_eq!(m.inverse().entries(), [rat(1, 2), rat(0, 1), rat(0, 1), rat(1, 3)]);
    }
}
