//! Multiplicative energy and the three-way truncation of a measure.

use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::group::{GroupContext, GroupElement};
use crate::measure::Measure;
use crate::rational::{int, Rational};
use crate::ElementMap;

/// `E(B1, B2) = #{(b1, b1', b2, b2') : b1 b2 = b1' b2'} = sum_g r(g)^2`.
pub fn mult_energy(ctx: &GroupContext, b1: &[GroupElement], b2: &[GroupElement], cap: usize) -> Result<u128> {
    let work = b1.len().saturating_mul(b2.len());
    if work > cap {
        return Err(Error::resource("energy products", cap, work));
    }
    let mut r: ElementMap<u64> = ElementMap::default();
    for x in b1 {
        for y in b2 {
            *r.entry(ctx.mul(x, y)).or_insert(0) += 1;
        }
    }
    Ok(r.values().map(|&c| c as u128 * c as u128).sum())
}

/// `K`, `M = 10 K` and `delta = 1 / (100 K^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationParams {
    pub k: Rational,
    pub m: Rational,
    pub delta: Rational,
}

impl TruncationParams {
    pub fn new(k: Rational) -> Result<Self> {
        if k < Rational::one() {
            return Err(Error::domain("K must be at least 1"));
        }
        let m = int(10) * &k;
        let delta = Rational::one() / (int(100) * &k * &k);
        Ok(TruncationParams { k, m, delta })
    }

    /// `K = 1 / c`.
    pub fn from_flatness(c: &Rational) -> Result<Self> {
        if c <= &Rational::zero() {
            return Err(Error::domain("c must be positive"));
        }
        Self::new(Rational::one() / c)
    }
}

/// A finitely supported sub-probability measure, atoms in canonical order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SubMeasure {
    pub atoms: Vec<(GroupElement, Rational)>,
}

impl SubMeasure {
    pub fn mass(&self) -> Rational {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    pub fn l2sq(&self) -> Rational {
        self.atoms.iter().map(|(_, w)| w * w).sum()
    }

    pub fn support(&self) -> Vec<GroupElement> {
        self.atoms.iter().map(|(g, _)| g.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// `mu = mu' + mu'' + mu~` with the heavy part `mu'`, the light part `mu''`
/// and the middle `mu~`.
#[derive(Clone, Debug, PartialEq)]
pub struct Truncation {
    pub params: TruncationParams,
    pub l2sq: Rational,
    /// Atoms with `mu(g) >= M ||mu||_2^2`.
    pub heavy: SubMeasure,
    /// Atoms with `mu(g) <= delta ||mu||_2^2`.
    pub light: SubMeasure,
    pub middle: SubMeasure,
    /// `||mu'||_1 <= 1/M`.
    pub heavy_bound_holds: bool,
    /// `||mu''||_2^2 <= delta ||mu||_2^2`.
    pub light_bound_holds: bool,
}

impl Truncation {
    /// Whether the three parts add back up to `mu`.
    pub fn partitions(&self, mu: &Measure) -> bool {
        let mut seen = 0;
        for part in [&self.heavy, &self.light, &self.middle] {
            for (g, w) in &part.atoms {
                if mu.weight(g) != *w {
                    return false;
                }
                seen += 1;
            }
        }
        seen == mu.len()
    }
}

pub fn truncate_measure(mu: &Measure, params: &TruncationParams) -> Truncation {
    let l2sq = mu.l2sq();
    let hi = &params.m * &l2sq;
    let lo = &params.delta * &l2sq;
    let (mut heavy, mut light, mut middle) = (SubMeasure::default(), SubMeasure::default(), SubMeasure::default());
    for (g, w) in mu.atoms() {
        if w >= hi {
            heavy.atoms.push((g, w));
        } else if w <= lo {
            light.atoms.push((g, w));
        } else {
            middle.atoms.push((g, w));
        }
    }
    let heavy_bound_holds = heavy.mass() <= Rational::one() / &params.m;
    let light_bound_holds = light.l2sq() <= &params.delta * &l2sq;
    Truncation { params: params.clone(), l2sq, heavy, light, middle, heavy_bound_holds, light_bound_holds }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use alloc::vec;

    #[test]
    fn energy_of_a_subgroup_is_cubic() {
        let ctx = GroupContext::cyclic(12).unwrap();
        let h: Vec<GroupElement> = [0, 3, 6, 9].into_iter().map(GroupElement::Residue).collect();
        assert_eq!(mult_energy(&ctx, &h, &h, 1000).unwrap(), 64);
    }

    #[test]
    fn energy_of_two_points() {
        let ctx = GroupContext::lattice(1).unwrap();
        let b = vec![GroupElement::Vector(vec![0]), GroupElement::Vector(vec![1])];
        assert_eq!(mult_energy(&ctx, &b, &b, 1000).unwrap(), 6);
    }

    #[test]
    fn energy_with_a_singleton() {
        let ctx = GroupContext::symmetric(3).unwrap();
        let b1 = vec![GroupElement::Perm(vec![1, 0, 2])];
        let b2 = vec![ctx.identity(), GroupElement::Perm(vec![1, 2, 0]), GroupElement::Perm(vec![2, 0, 1])];
        assert_eq!(mult_energy(&ctx, &b1, &b2, 1000).unwrap(), 3);
    }

    #[test]
    fn params_follow_k() {
        let p = TruncationParams::from_flatness(&rat(1, 2)).unwrap();
        assert_eq!(p.m, int(20));
        assert_eq!(p.delta, rat(1, 400));
    }

    #[test]
    fn point_mass_is_all_middle() {
        let ctx = GroupContext::cyclic(7).unwrap();
        let mu = Measure::delta(&ctx, GroupElement::Residue(3)).unwrap();
        let t = truncate_measure(&mu, &TruncationParams::new(int(1)).unwrap());
        assert!(t.heavy.is_empty() && t.light.is_empty());
        assert_eq!(t.middle.atoms.len(), 1);
        assert!(t.partitions(&mu));
    }

    #[test]
    fn skewed_measure_splits_three_ways() {
        let ctx = GroupContext::cyclic(1000).unwrap();
        // One heavy atom, a handful of middle ones and many light ones.
        let mut atoms = vec![(GroupElement::Residue(0), rat(1, 2))];
        for i in 1..=4 {
            atoms.push((GroupElement::Residue(i), rat(1, 10)));
        }
        for i in 5..105 {
            atoms.push((GroupElement::Residue(i), rat(1, 1000)));
        }
        let mu = Measure::from_atoms(&ctx, atoms).unwrap();
        let t = truncate_measure(&mu, &TruncationParams::new(int(1)).unwrap());
        assert!(t.partitions(&mu));
        assert!(t.heavy_bound_holds && t.light_bound_holds);
        assert_eq!(t.heavy.atoms.len(), 0);
        assert_eq!(t.light.atoms.len(), 100);
    }
}
