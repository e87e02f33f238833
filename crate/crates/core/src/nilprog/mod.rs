//! Progressions, nilprogressions and coset nilprogressions.
//!
//! `P(u_1, ..., u_r; N_1, ..., N_r)` is the set of products of the `u_i` and
//! their inverses in which `u_i` occurs at most `floor(N_i)` times and `u_i^-1`
//! occurs at most `floor(N_i)` times. The dilate `P_lambda` uses budgets
//! `floor(lambda N_i)`. A coset nilprogression `HP` multiplies by an explicit
//! finite subgroup `H` normalized by the generators.

mod collect;
mod enumerate;
mod growth;
mod norm;
mod normal_form;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};

pub use collect::{collect, letters_from_signed, CollectReport, Letter};
pub use enumerate::{enumerate_hp, enumerate_hp_words, enumerate_p};
pub use growth::{growth_profile, GrowthProfile};
pub use norm::{hp_norm, hp_x_norm, NormOracle, XNorm};
pub use normal_form::{
    shrink, square_root_check, verify_c_normal_form, Collision, NormalFormCert, ShrinkReport, SquareRootReport,
    TriangularWitness,
};

use crate::error::{Error, Result};
use crate::group::{GroupContext, GroupElement};
use crate::rational::{floor_budget, Rational};
use crate::ElementSet;

/// `P(u_1, ..., u_r; N_1, ..., N_r)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Progression {
    ctx: GroupContext,
    generators: Vec<GroupElement>,
    lengths: Vec<Rational>,
    step: Option<usize>,
    constant: Option<Rational>,
}

impl Progression {
    pub fn new(ctx: &GroupContext, generators: Vec<GroupElement>, lengths: Vec<Rational>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::domain("a progression needs at least one generator"));
        }
        if generators.len() != lengths.len() {
            return Err(Error::domain(format!("{} generators but {} lengths", generators.len(), lengths.len())));
        }
        if let Some(l) = lengths.iter().find(|l| !l.is_positive()) {
            return Err(Error::domain(format!("length {l} is not positive")));
        }
        for g in &generators {
            ctx.validate(g)?;
        }
        Ok(Progression { ctx: ctx.clone(), generators, lengths, step: None, constant: None })
    }

    /// Records and verifies a step claim: every iterated commutator of degree
    /// `s + 1` in the generators is trivial.
    pub fn with_step(mut self, s: usize) -> Result<Self> {
        if let Some(w) = self.step_violation(s) {
            return Err(Error::domain(format!("step {s} claim fails: commutator {w} is not trivial")));
        }
        self.step = Some(s);
        Ok(self)
    }

    pub fn with_constant(mut self, c: Rational) -> Self {
        self.constant = Some(c);
        self
    }

    /// A nontrivial iterated commutator of degree `s + 1`, if any.
    pub fn step_violation(&self, s: usize) -> Option<GroupElement> {
        let ctx = &self.ctx;
        // by_degree[k] = distinct values of all bracket arrangements of k + 1 generators.
        let mut by_degree: Vec<Vec<GroupElement>> = vec![dedup(self.generators.clone())];
        for k in 1..=s {
            let mut next = ElementSet::default();
            for i in 0..k {
                let j = k - 1 - i;
                for a in &by_degree[i] {
                    for b in &by_degree[j] {
                        next.insert(ctx.commutator(a, b));
                    }
                }
            }
            let mut v: Vec<GroupElement> = next.into_iter().collect();
            v.sort();
            by_degree.push(v);
        }
        by_degree[s].iter().find(|g| !ctx.is_identity(g)).cloned()
    }

    pub fn ctx(&self) -> &GroupContext {
        &self.ctx
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn lengths(&self) -> &[Rational] {
        &self.lengths
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn step(&self) -> Option<usize> {
        self.step
    }

    pub fn constant(&self) -> Option<&Rational> {
        self.constant.as_ref()
    }

    /// Occurrence budgets `floor(lambda N_i)`.
    pub fn budgets(&self, lambda: &Rational) -> Vec<u64> {
        self.lengths.iter().map(|n| floor_budget(&(lambda * n))).collect()
    }

    /// `P_lambda` as a progression with lengths `lambda N_i`.
    pub fn dilate(&self, lambda: &Rational) -> Result<Progression> {
        if !lambda.is_positive() {
            return Err(Error::domain("dilation factor must be positive"));
        }
        let mut p = self.clone();
        p.lengths = self.lengths.iter().map(|n| n * lambda).collect();
        Ok(p)
    }

    /// Largest `N_i`.
    pub fn max_length(&self) -> Rational {
        self.lengths.iter().max().cloned().unwrap_or_else(Rational::zero)
    }

    /// `u_1^{n_1} ... u_r^{n_r}`.
    pub fn normal_form_element(&self, exps: &[i64]) -> GroupElement {
        let ctx = &self.ctx;
        self.generators.iter().zip(exps).fold(ctx.identity(), |acc, (g, &e)| ctx.mul(&acc, &ctx.pow(g, e)))
    }

    /// Indices of generators commuting with every generator.
    pub(crate) fn central_indices(&self) -> Vec<usize> {
        (0..self.rank())
            .filter(|&i| self.generators.iter().all(|g| self.ctx.commutes(&self.generators[i], g)))
            .collect()
    }
}

fn dedup(mut v: Vec<GroupElement>) -> Vec<GroupElement> {
    v.sort();
    v.dedup();
    v
}

/// `HP` for an explicit finite subgroup `H` normalized by the generators.
#[derive(Clone, Debug, PartialEq)]
pub struct CosetNilprogression {
    progression: Progression,
    h: Vec<GroupElement>,
    h_set: ElementSet,
}

impl CosetNilprogression {
    /// Checks that `H` contains the identity, is closed under products and
    /// inverses, and satisfies `u_i H = H u_i` for every generator.
    pub fn new(progression: Progression, h: Vec<GroupElement>) -> Result<Self> {
        let ctx = progression.ctx().clone();
        let mut h = dedup(h);
        if h.is_empty() {
            h.push(ctx.identity());
        }
        for x in &h {
            ctx.validate(x)?;
        }
        let h_set: ElementSet = h.iter().cloned().collect();
        if !h_set.contains(&ctx.identity()) {
            return Err(Error::domain("H must contain the identity"));
        }
        for a in &h {
            if !h_set.contains(&ctx.inv(a)) {
                return Err(Error::domain(format!("H is not closed under inverses: {a}")));
            }
            for b in &h {
                if !h_set.contains(&ctx.mul(a, b)) {
                    return Err(Error::domain(format!("H is not closed: {a} * {b}")));
                }
            }
        }
        for u in progression.generators() {
            let left: ElementSet = h.iter().map(|x| ctx.mul(u, x)).collect();
            let right: ElementSet = h.iter().map(|x| ctx.mul(x, u)).collect();
            if left != right {
                return Err(Error::domain(format!("generator {u} does not normalize H")));
            }
        }
        Ok(CosetNilprogression { progression, h, h_set })
    }

    /// `P` with `H = {id}`.
    pub fn trivial_h(progression: Progression) -> Self {
        let id = progression.ctx().identity();
        let mut h_set = ElementSet::default();
        h_set.insert(id.clone());
        CosetNilprogression { progression, h: vec![id], h_set }
    }

    pub fn progression(&self) -> &Progression {
        &self.progression
    }

    pub fn ctx(&self) -> &GroupContext {
        self.progression.ctx()
    }

    /// Elements of `H` in canonical order.
    pub fn h(&self) -> &[GroupElement] {
        &self.h
    }

    pub fn h_contains(&self, g: &GroupElement) -> bool {
        self.h_set.contains(g)
    }

    /// Generators of `<HP>`.
    pub fn subgroup_generators(&self) -> Vec<GroupElement> {
        let mut v: Vec<GroupElement> = self.progression.generators().to_vec();
        v.extend(self.h.iter().filter(|x| !self.ctx().is_identity(x)).cloned());
        v
    }

    /// Same `H`, dilated progression.
    pub fn dilate(&self, lambda: &Rational) -> Result<Self> {
        Ok(CosetNilprogression {
            progression: self.progression.dilate(lambda)?,
            h: self.h.clone(),
            h_set: self.h_set.clone(),
        })
    }

    /// `lambda` values at which some budget `floor(lambda N_i)` increases, up to `lambda_max`, with 0.
    pub fn lambda_grid(&self, lambda_max: &Rational) -> Vec<Rational> {
        let mut grid = vec![Rational::zero()];
        for n in self.progression.lengths() {
            let kmax = floor_budget(&(lambda_max * n));
            for k in 1..=kmax {
                grid.push(Rational::from_integer(k.into()) / n);
            }
        }
        grid.sort();
        grid.dedup();
        grid.retain(|l| l <= lambda_max);
        grid
    }
}

/// One over the largest length: dilates below it collapse `HP` to `H`.
pub fn degenerate_threshold(p: &Progression) -> Rational {
    Rational::one() / p.max_length()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn heis(a: i64, b: i64, c: i64) -> GroupElement {
        GroupElement::Heisenberg([a, b, c])
    }

    #[test]
    fn heisenberg_generators_have_step_two() {
        let ctx = GroupContext::Heisenberg;
        let p = Progression::new(&ctx, vec![heis(1, 0, 0), heis(0, 1, 0)], vec![int(2), int(2)]).unwrap();
        assert!(p.step_violation(1).is_some());
        assert!(p.step_violation(2).is_none());
        assert!(p.clone().with_step(1).is_err());
        assert_eq!(p.with_step(2).unwrap().step(), Some(2));
    }

    #[test]
    fn symmetric_group_is_not_step_two() {
        let ctx = GroupContext::symmetric(3).unwrap();
        let t = GroupElement::Perm(vec![1, 0, 2]);
        let c = GroupElement::Perm(vec![1, 2, 0]);
        let p = Progression::new(&ctx, vec![t, c], vec![int(1), int(1)]).unwrap();
        assert!(p.step_violation(2).is_some());
    }

    #[test]
    fn h_must_be_normalized() {
        let ctx = GroupContext::symmetric(3).unwrap();
        let t12 = GroupElement::Perm(vec![1, 0, 2]);
        let c = GroupElement::Perm(vec![1, 2, 0]);
        let p = Progression::new(&ctx, vec![c.clone()], vec![int(1)]).unwrap();
        assert!(CosetNilprogression::new(p, vec![ctx.identity(), t12.clone()]).is_err());
        let p = Progression::new(&ctx, vec![t12], vec![int(1)]).unwrap();
        let a3 = vec![ctx.identity(), c.clone(), ctx.mul(&c, &c)];
        assert!(CosetNilprogression::new(p, a3).is_ok());
    }

    #[test]
    fn lambda_grid_contains_breakpoints() {
        let ctx = GroupContext::lattice(1).unwrap();
        let p = Progression::new(&ctx, vec![GroupElement::Vector(vec![1])], vec![int(4)]).unwrap();
        let hp = CosetNilprogression::trivial_h(p);
        assert_eq!(hp.lambda_grid(&int(1)), vec![int(0), rat(1, 4), rat(1, 2), rat(3, 4), int(1)]);
    }
}
