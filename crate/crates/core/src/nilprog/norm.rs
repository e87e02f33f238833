//! The `HP`-norm `inf{lambda : g in HP_lambda}` and its `(HP, X)` variant.
//!
//! Membership in `HP_lambda` only changes at the grid points `k / N_i`, so
//! both norms are found by binary search over that finite grid. Dilates are
//! enumerated once and cached.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::{enumerate_hp, CosetNilprogression};
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::rational::{int, Rational};
use crate::ElementSet;

/// Cached dilates of one coset nilprogression on its `lambda` grid.
pub struct NormOracle<'a> {
    hp: &'a CosetNilprogression,
    grid: Vec<Rational>,
    lambda_max: Rational,
    cap: usize,
    sets: BTreeMap<usize, ElementSet>,
}

impl<'a> NormOracle<'a> {
    pub fn new(hp: &'a CosetNilprogression, lambda_max: Rational, cap: usize) -> Self {
        let grid = hp.lambda_grid(&lambda_max);
        NormOracle { hp, grid, lambda_max, cap, sets: BTreeMap::new() }
    }

    /// Oracle with `lambda_max = 4`.
    pub fn with_default_max(hp: &'a CosetNilprogression, cap: usize) -> Self {
        Self::new(hp, int(4), cap)
    }

    pub fn grid(&self) -> &[Rational] {
        &self.grid
    }

    pub fn lambda_max(&self) -> &Rational {
        &self.lambda_max
    }

    fn set(&mut self, k: usize) -> Result<&ElementSet> {
        if !self.sets.contains_key(&k) {
            let s = enumerate_hp(self.hp, &self.grid[k], self.cap)?;
            self.sets.insert(k, s);
        }
        Ok(&self.sets[&k])
    }

    /// Smallest grid index `k` with `pred(HP_{grid[k]})`, assuming monotonicity.
    fn search(&mut self, mut pred: impl FnMut(&ElementSet) -> bool) -> Result<Option<usize>> {
        let last = self.grid.len() - 1;
        if !pred(self.set(last)?) {
            return Ok(None);
        }
        let (mut lo, mut hi) = (0usize, last);
        if pred(self.set(0)?) {
            return Ok(Some(0));
        }
        // pred fails at lo, holds at hi
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if pred(self.set(mid)?) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some(hi))
    }

    /// `inf{lambda : g in HP_lambda}`.
    pub fn norm(&mut self, g: &GroupElement) -> Result<Rational> {
        if self.hp.h_contains(g) {
            return Ok(int(0));
        }
        match self.search(|s| s.contains(g))? {
            Some(k) => Ok(self.grid[k].clone()),
            None => Err(Error::ExceedsLambdaMax(self.lambda_max.clone())),
        }
    }

    /// Whether `g in HP_lambda` for a grid value `lambda <= lambda_max`.
    pub fn contains_at(&mut self, g: &GroupElement, lambda: &Rational) -> Result<bool> {
        let k = self.grid.partition_point(|x| x <= lambda);
        if k == 0 {
            return Err(Error::domain("lambda must be non-negative"));
        }
        Ok(self.set(k - 1)?.contains(g))
    }

    /// The `(HP, X)`-norm with a witnessing matching.
    pub fn x_norm(&mut self, g: &GroupElement, xs: &[GroupElement]) -> Result<XNorm> {
        if xs.is_empty() {
            return Err(Error::domain("X must be non-empty"));
        }
        let ctx = self.hp.ctx().clone();
        // x^-1 g x' must lie in HP_lambda.
        let inv: Vec<GroupElement> = xs.iter().map(|x| ctx.inv(x)).collect();
        let conj: Vec<Vec<GroupElement>> = inv
            .iter()
            .map(|xi| xs.iter().map(|x2| ctx.product(&[xi.clone(), g.clone(), x2.clone()])).collect())
            .collect();
        let has_matching = |s: &ElementSet| matching(&conj, s).is_some();
        match self.search(has_matching)? {
            Some(k) => {
                let sigma = matching(&conj, self.set(k)?).expect("search succeeded");
                Ok(XNorm { lambda: self.grid[k].clone(), sigma })
            }
            None => Err(Error::ExceedsLambdaMax(self.lambda_max.clone())),
        }
    }
}

/// `lambda` and `sigma` with `g in x_i HP_lambda x_{sigma[i]}^-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct XNorm {
    pub lambda: Rational,
    pub sigma: Vec<usize>,
}

/// Perfect matching by augmenting paths: `edges[i][j]` is in `allowed`.
fn matching(conj: &[Vec<GroupElement>], allowed: &ElementSet) -> Option<Vec<usize>> {
    let n = conj.len();
    let adj: Vec<Vec<usize>> = conj.iter().map(|row| (0..n).filter(|&j| allowed.contains(&row[j])).collect()).collect();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    fn augment(i: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
        for &j in &adj[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|k| augment(k, adj, owner, seen)) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, &adj, &mut owner, &mut seen) {
            return None;
        }
    }
    let mut sigma = vec![0; n];
    for (j, o) in owner.iter().enumerate() {
        sigma[o.expect("perfect")] = j;
    }
    Some(sigma)
}

/// `inf{lambda : g in HP_lambda}` over the grid up to `lambda_max`.
pub fn hp_norm(g: &GroupElement, hp: &CosetNilprogression, lambda_max: &Rational, cap: usize) -> Result<Rational> {
    NormOracle::new(hp, lambda_max.clone(), cap).norm(g)
}

/// Smallest grid `lambda` admitting `sigma in Sym(X)` with `g in x HP_lambda sigma(x)^-1` for all `x`.
pub fn hp_x_norm(
    g: &GroupElement,
    hp: &CosetNilprogression,
    xs: &[GroupElement],
    lambda_max: &Rational,
    cap: usize,
) -> Result<XNorm> {
    NormOracle::new(hp, lambda_max.clone(), cap).x_norm(g, xs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupContext;
    use crate::nilprog::Progression;
    use crate::rational::rat;

    fn line(n: i64) -> CosetNilprogression {
        let ctx = GroupContext::lattice(1).unwrap();
        CosetNilprogression::trivial_h(
            Progression::new(&ctx, vec![GroupElement::Vector(vec![1])], vec![int(n)]).unwrap(),
        )
    }

    #[test]
    fn norm_on_the_line() {
        let hp = line(10);
        assert_eq!(hp_norm(&GroupElement::Vector(vec![5]), &hp, &int(4), 1000).unwrap(), rat(1, 2));
        assert_eq!(hp_norm(&GroupElement::Vector(vec![0]), &hp, &int(4), 1000).unwrap(), int(0));
        assert_eq!(hp_norm(&GroupElement::Vector(vec![-13]), &hp, &int(4), 1000).unwrap(), rat(13, 10));
        assert!(matches!(
            hp_norm(&GroupElement::Vector(vec![41]), &hp, &int(4), 1000),
            Err(Error::ExceedsLambdaMax(_))
        ));
    }

    #[test]
    fn h_elements_have_norm_zero_and_translation_invariance() {
        let ctx = GroupContext::lattice(2).unwrap();
        let p = Progression::new(&ctx, vec![GroupElement::Vector(vec![1, 0])], vec![int(6)]).unwrap();
        // Z^2 has no nontrivial finite subgroups; use the trivial one with a cyclic example below.
        let hp = CosetNilprogression::trivial_h(p);
        assert_eq!(hp_norm(&GroupElement::Vector(vec![3, 0]), &hp, &int(4), 1000).unwrap(), rat(1, 2));

        let ctx = GroupContext::cyclic(12).unwrap();
        let p = Progression::new(&ctx, vec![GroupElement::Residue(1)], vec![int(2)]).unwrap();
        let h: Vec<GroupElement> = [0, 4, 8].into_iter().map(GroupElement::Residue).collect();
        let hp = CosetNilprogression::new(p, h).unwrap();
        assert_eq!(hp_norm(&GroupElement::Residue(4), &hp, &int(4), 1000).unwrap(), int(0));
        let a = hp_norm(&GroupElement::Residue(1), &hp, &int(4), 1000).unwrap();
        let b = hp_norm(&GroupElement::Residue(9), &hp, &int(4), 1000).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, rat(1, 2));
    }

    #[test]
    fn x_norm_reduces_to_norm() {
        let hp = line(10);
        let g = GroupElement::Vector(vec![7]);
        let x = hp_x_norm(&g, &hp, &[GroupElement::Vector(vec![0])], &int(4), 1000).unwrap();
        assert_eq!(x.lambda, rat(7, 10));
        assert_eq!(x.sigma, vec![0]);
    }

    #[test]
    fn x_norm_of_identity_is_zero() {
        let ctx = GroupContext::symmetric(3).unwrap();
        let p = Progression::new(&ctx, vec![GroupElement::Perm(vec![1, 0, 2])], vec![int(1)]).unwrap();
        let hp = CosetNilprogression::trivial_h(p);
        let xs = vec![ctx.identity(), GroupElement::Perm(vec![1, 2, 0]), GroupElement::Perm(vec![0, 2, 1])];
        let r = hp_x_norm(&ctx.identity(), &hp, &xs, &int(4), 1000).unwrap();
        assert_eq!(r.lambda, int(0));
        assert_eq!(r.sigma, vec![0, 1, 2]);
    }

    #[test]
    fn x_norm_of_conjugate() {
        // t is central but outside <HP>, so g = t q t^-1 sits in both x HP x^-1.
        let ctx = GroupContext::Heisenberg;
        let p = Progression::new(&ctx, vec![GroupElement::Heisenberg([1, 0, 0])], vec![int(4)]).unwrap();
        let hp = CosetNilprogression::trivial_h(p);
        let t = GroupElement::Heisenberg([0, 0, 7]);
        let q = GroupElement::Heisenberg([3, 0, 0]);
        let g = ctx.product(&[t.clone(), q.clone(), ctx.inv(&t)]);
        let expected = hp_norm(&q, &hp, &int(4), 100_000).unwrap();
        assert_eq!(expected, rat(3, 4));
        let r = hp_x_norm(&g, &hp, &[ctx.identity(), t], &int(4), 100_000).unwrap();
        assert_eq!(r.lambda, expected);
        assert_eq!(r.sigma, vec![0, 1]);
    }

    #[test]
    fn x_norm_needs_a_permutation() {
        // Z/10 with P = {-1, 0, 1}, X = {0, 5}: g = 5 swaps the two translates.
        let ctx = GroupContext::cyclic(10).unwrap();
        let p = Progression::new(&ctx, vec![GroupElement::Residue(1)], vec![int(1)]).unwrap();
        let hp = CosetNilprogression::trivial_h(p);
        let g = GroupElement::Residue(5);
        let xs = vec![GroupElement::Residue(0), GroupElement::Residue(5)];
        let r = hp_x_norm(&g, &hp, &xs, &int(4), 1000).unwrap();
        assert_eq!(r.lambda, int(0));
        assert_eq!(r.sigma, vec![1, 0]);
        assert!(matches!(hp_norm(&g, &hp, &int(4), 1000), Err(Error::ExceedsLambdaMax(_))));
    }
}
