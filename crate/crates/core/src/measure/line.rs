//! Dense dynamic programming for walks on `Z` and `Z/m`.
//!
//! Distributions are kept as arrays of integer numerators over one common
//! denominator; a step with atoms `(a_k, n_k / d)` maps `f` to
//! `sum_k n_k f(. - a_k)` and multiplies the denominator by `d`.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

use super::{Measure, WalkSpec};
use crate::error::{Error, Result};
use crate::group::{GroupContext, GroupElement};
use crate::rational::{from_biguint_ratio, Rational};

/// A distribution on a contiguous range of integers (or on all residues).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineDistribution {
    /// Value represented by `num[0]`.
    pub offset: i64,
    pub num: Vec<BigUint>,
    pub den: BigUint,
}

impl LineDistribution {
    pub fn probability(&self, x: i64) -> Rational {
        let idx = x - self.offset;
        if idx < 0 || idx as usize >= self.num.len() {
            return Rational::zero();
        }
        from_biguint_ratio(&self.num[idx as usize], &self.den)
    }

    /// Largest point mass and the least point attaining it.
    pub fn max(&self) -> (Rational, i64) {
        let mut best = 0;
        for (i, n) in self.num.iter().enumerate() {
            if *n > self.num[best] {
                best = i;
            }
        }
        (from_biguint_ratio(&self.num[best], &self.den), self.offset + best as i64)
    }

    pub fn l2sq(&self) -> Rational {
        let s: BigUint = self.num.iter().map(|n| n * n).sum();
        from_biguint_ratio(&s, &(&self.den * &self.den))
    }
}

/// Integer atoms `(value, numerator)` over a common step denominator.
fn step_atoms(m: &Measure, value: impl Fn(&GroupElement) -> i64) -> (Vec<(i64, BigUint)>, BigUint) {
    let mut atoms: Vec<(i64, BigUint)> = m.raw_atoms().iter().map(|(g, n)| (value(g), n.clone())).collect();
    atoms.sort_by_key(|a| a.0);
    (atoms, m.denominator().clone())
}

/// Exact distribution of a walk on `lattice(1)` by dense convolution.
///
/// Cost is `O(n * range * atoms)` big-integer operations, where `range` is the
/// span of reachable sums.
pub fn integer_line_distribution(walk: &WalkSpec) -> Result<LineDistribution> {
    if *walk.ctx() != (GroupContext::Lattice { dim: 1 }) {
        return Err(Error::domain("line DP needs a walk on lattice(1)"));
    }
    let mut dist = LineDistribution { offset: 0, num: vec![BigUint::one()], den: BigUint::one() };
    for step in walk.steps() {
        let (atoms, d) = step_atoms(step, |g| match g {
            GroupElement::Vector(v) => v[0],
            _ => unreachable!(),
        });
        let lo = atoms.first().map(|a| a.0).unwrap_or(0);
        let hi = atoms.last().map(|a| a.0).unwrap_or(0);
        let len = dist.num.len() + (hi - lo) as usize;
        let mut next = vec![BigUint::zero(); len];
        for (a, w) in &atoms {
            let shift = (a - lo) as usize;
            for (i, f) in dist.num.iter().enumerate() {
                if !f.is_zero() {
                    next[i + shift] += f * w;
                }
            }
        }
        dist = LineDistribution { offset: dist.offset + lo, num: next, den: &dist.den * d };
    }
    Ok(reduce(dist))
}

/// Exact distribution of a walk on `cyclic(m)`, indexed by residue.
pub fn cyclic_walk_distribution(walk: &WalkSpec) -> Result<LineDistribution> {
    let GroupContext::Cyclic { modulus } = *walk.ctx() else {
        return Err(Error::domain("cyclic DP needs a walk on a cyclic group"));
    };
    let m = usize::try_from(modulus).map_err(|_| Error::domain("modulus too large"))?;
    let mut num = vec![BigUint::zero(); m];
    num[0] = BigUint::one();
    let mut den = BigUint::one();
    for step in walk.steps() {
        let (atoms, d) = step_atoms(step, |g| match g {
            GroupElement::Residue(r) => *r as i64,
            _ => unreachable!(),
        });
        let mut next = vec![BigUint::zero(); m];
        for (a, w) in &atoms {
            for (i, f) in num.iter().enumerate() {
                if !f.is_zero() {
                    next[(i + *a as usize) % m] += f * w;
                }
            }
        }
        num = next;
        den *= d;
    }
    Ok(reduce(LineDistribution { offset: 0, num, den }))
}

fn reduce(mut d: LineDistribution) -> LineDistribution {
    let g = d.num.iter().fold(d.den.clone(), |acc, x| acc.gcd(x));
    if !g.is_one() {
        for x in d.num.iter_mut() {
            *x /= &g;
        }
        d.den /= &g;
    }
    d
}

/// Symmetric `+-a_i` walk on the integer line.
pub fn sign_walk(values: &[i64]) -> Result<WalkSpec> {
    let ctx = GroupContext::lattice(1)?;
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let steps = values
        .iter()
        .map(|&a| {
            Measure::from_atoms(
                &ctx,
                [(GroupElement::Vector(vec![a]), half.clone()), (GroupElement::Vector(vec![-a]), half.clone())],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    WalkSpec::new(&ctx, steps, Rational::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::StepOrder;
    use crate::rational::rat;

    #[test]
    fn matches_hash_convolution() {
        let w = sign_walk(&[1, 3, 4, 7, 2]).unwrap();
        let d = integer_line_distribution(&w).unwrap();
        let m = w.window(1, 5, StepOrder::LaterLeft, 1000).unwrap();
        for (g, p) in m.atoms() {
            let GroupElement::Vector(v) = g else { unreachable!() };
            assert_eq!(d.probability(v[0]), p);
        }
        assert_eq!(d.max().0, m.linf().0);
        assert_eq!(d.l2sq(), m.l2sq());
    }

    #[test]
    fn binomial_center() {
        let d = integer_line_distribution(&sign_walk(&[1; 4]).unwrap()).unwrap();
        assert_eq!(d.max(), (rat(3, 8), 0));
    }

    #[test]
    fn cyclic_matches_hash_convolution() {
        let ctx = GroupContext::cyclic(3).unwrap();
        let s = Measure::uniform(&ctx, &[GroupElement::Residue(0), GroupElement::Residue(1)]).unwrap();
        let w = WalkSpec::new(&ctx, vec![s; 3], Rational::zero()).unwrap();
        let d = cyclic_walk_distribution(&w).unwrap();
        assert_eq!(d.probability(0), rat(2, 8));
        assert_eq!(d.probability(1), rat(3, 8));
        assert_eq!(d.probability(2), rat(3, 8));
    }
}
