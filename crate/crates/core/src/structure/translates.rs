//! Maximal collections of disjoint translates `k_i HP` with `d_mu(k_i, id) <= delta`.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::One;

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::measure::{d_mu_shift, Measure};
use crate::nilprog::{enumerate_hp, CosetNilprogression};
use crate::rational::{int, Rational};
use crate::{ElementMap, ElementSet};

/// `HP` and `HP^2` enumerated once.
#[derive(Clone, Debug)]
pub struct HpSets {
    pub hp: ElementSet,
    pub hp2: ElementSet,
}

impl HpSets {
    pub fn new(hp: &CosetNilprogression, cap: usize) -> Result<Self> {
        let set = enumerate_hp(hp, &Rational::one(), cap)?;
        let elems: Vec<GroupElement> = set.iter().cloned().collect();
        let hp2 = hp.ctx().product_set(&elems, &elems, cap)?;
        Ok(HpSets { hp: set, hp2 })
    }
}

/// Memo of `d_mu(k, id)^2`.
pub struct DistanceCache<'a> {
    mu: &'a Measure,
    l2sq: Rational,
    memo: ElementMap<Rational>,
}

impl<'a> DistanceCache<'a> {
    pub fn new(mu: &'a Measure) -> Self {
        DistanceCache { mu, l2sq: mu.l2sq(), memo: ElementMap::default() }
    }

    pub fn measure(&self) -> &Measure {
        self.mu
    }

    /// `d_mu(k, id)^2`.
    pub fn to_id_sq(&mut self, k: &GroupElement) -> Rational {
        if let Some(v) = self.memo.get(k) {
            return v.clone();
        }
        let v = d_mu_shift(self.mu, k, &self.l2sq).squared;
        self.memo.insert(k.clone(), v.clone());
        v
    }

    /// `d_mu(g, h)^2 = d_mu(g h^-1, id)^2`.
    pub fn between_sq(&mut self, g: &GroupElement, h: &GroupElement) -> Rational {
        let ctx = self.mu.ctx();
        let k = ctx.mul(g, &ctx.inv(h));
        self.to_id_sq(&k)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TranslateCollection {
    /// `k_0 = id, k_1, ..., k_N`.
    pub representatives: Vec<GroupElement>,
    pub delta: Rational,
    /// Pool elements with `d_mu(k, id) <= delta`, in canonical order.
    pub candidates: Vec<GroupElement>,
    /// The translates `k_i HP` are pairwise disjoint (checked on the sets).
    pub disjoint: bool,
    /// Every representative is within `delta` of the identity.
    pub within_delta: bool,
    /// No candidate translate is disjoint from all members.
    pub maximal: bool,
    /// Every candidate lies in some `k_i HP^2`.
    pub covering: bool,
}

impl TranslateCollection {
    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    pub fn verified(&self) -> bool {
        self.disjoint && self.within_delta && self.maximal && self.covering
    }
}

/// `k HP` meets `k' HP` iff `k^-1 k'` lies in `HP (HP)^-1 = HP^2`.
fn meets(sets: &HpSets, hp: &CosetNilprogression, k: &GroupElement, k2: &GroupElement) -> bool {
    let ctx = hp.ctx();
    sets.hp2.contains(&ctx.mul(&ctx.inv(k), k2))
}

fn candidates_within(dist: &mut DistanceCache, pool: &[GroupElement], delta: &Rational) -> Vec<GroupElement> {
    let dsq = delta * delta;
    let set: BTreeSet<GroupElement> = pool.iter().filter(|k| dist.to_id_sq(k) <= dsq).cloned().collect();
    set.into_iter().collect()
}

fn extend(
    start: Vec<GroupElement>,
    candidates: &[GroupElement],
    sets: &HpSets,
    hp: &CosetNilprogression,
) -> Vec<GroupElement> {
    let mut reps = start;
    for k in candidates {
        if !reps.iter().any(|r| meets(sets, hp, r, k)) {
            reps.push(k.clone());
        }
    }
    reps
}

fn certify(
    reps: Vec<GroupElement>,
    candidates: Vec<GroupElement>,
    delta: &Rational,
    sets: &HpSets,
    hp: &CosetNilprogression,
    dist: &mut DistanceCache,
) -> TranslateCollection {
    let ctx = hp.ctx();
    let hp_elems: Vec<GroupElement> = sets.hp.iter().cloned().collect();
    let translates: Vec<ElementSet> = reps.iter().map(|k| hp_elems.iter().map(|h| ctx.mul(k, h)).collect()).collect();
    let disjoint =
        (0..translates.len()).all(|i| (i + 1..translates.len()).all(|j| translates[i].is_disjoint(&translates[j])));
    let dsq = delta * delta;
    let within_delta =
        reps.iter().skip(1).all(|k| dist.to_id_sq(k) <= dsq) && reps.first().is_some_and(|k| ctx.is_identity(k));
    let maximal = candidates.iter().all(|k| {
        reps.contains(k) || {
            let t: ElementSet = hp_elems.iter().map(|h| ctx.mul(k, h)).collect();
            translates.iter().any(|s| !s.is_disjoint(&t))
        }
    });
    let hp2: Vec<GroupElement> = sets.hp2.iter().cloned().collect();
    let mut union = ElementSet::default();
    for k in &reps {
        for h in &hp2 {
            union.insert(ctx.mul(k, h));
        }
    }
    let covering = candidates.iter().all(|k| union.contains(k));
    TranslateCollection {
        representatives: reps,
        delta: delta.clone(),
        candidates,
        disjoint,
        within_delta,
        maximal,
        covering,
    }
}

/// Greedy maximal collection of disjoint `k HP` from `k_0 = id`, candidates
/// taken from `pool` in canonical order.
pub fn maximal_disjoint_translates(
    mu: &Measure,
    hp: &CosetNilprogression,
    delta: &Rational,
    pool: &[GroupElement],
    cap: usize,
) -> Result<TranslateCollection> {
    let sets = HpSets::new(hp, cap)?;
    let mut dist = DistanceCache::new(mu);
    Ok(collection_with(&sets, hp, &mut dist, delta, pool, vec![hp.ctx().identity()]))
}

fn collection_with(
    sets: &HpSets,
    hp: &CosetNilprogression,
    dist: &mut DistanceCache,
    delta: &Rational,
    pool: &[GroupElement],
    start: Vec<GroupElement>,
) -> TranslateCollection {
    let candidates = candidates_within(dist, pool, delta);
    let reps = extend(start, &candidates, sets, hp);
    certify(reps, candidates, delta, sets, hp, dist)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stabilization {
    /// Least `l` with equal representatives at levels `l - 1` and `l + 1`.
    pub level: usize,
    /// Collections at thresholds `delta0 / C0^j` for `j = 0, ..., lmax + 1`.
    pub collections: Vec<TranslateCollection>,
}

impl Stabilization {
    pub fn level_sizes(&self) -> Vec<usize> {
        self.collections.iter().map(|c| c.len()).collect()
    }

    /// The collection at the stabilized level `l`.
    pub fn collection(&self) -> &TranslateCollection {
        &self.collections[self.level]
    }

    pub fn threshold(&self, j: usize) -> &Rational {
        &self.collections[j].delta
    }
}

/// Collections at thresholds `delta0 / C0^j` for `j = 0, ..., levels - 1`,
/// each extending the one at the next smaller threshold.
pub fn nested_collections(
    mu: &Measure,
    hp: &CosetNilprogression,
    delta0: &Rational,
    c0: u64,
    levels: usize,
    pool: &[GroupElement],
    cap: usize,
) -> Result<Vec<TranslateCollection>> {
    if c0 < 2 {
        return Err(Error::domain("C0 must be at least 2"));
    }
    let sets = HpSets::new(hp, cap)?;
    let mut dist = DistanceCache::new(mu);
    let c0 = int(c0 as i64);
    let mut thresholds = vec![delta0.clone()];
    for j in 1..levels {
        let t = &thresholds[j - 1] / &c0;
        thresholds.push(t);
    }
    let mut out: Vec<TranslateCollection> = Vec::with_capacity(levels);
    let mut start = vec![hp.ctx().identity()];
    for t in thresholds.iter().rev() {
        let c = collection_with(&sets, hp, &mut dist, t, pool, start);
        start = c.representatives.clone();
        out.push(c);
    }
    out.reverse();
    Ok(out)
}

/// Least `l` in `1..=lmax` whose neighbours `l - 1` and `l + 1` hold the same representatives.
pub fn stabilization_level(collections: &[TranslateCollection], lmax: usize) -> Option<usize> {
    let same = |a: &TranslateCollection, b: &TranslateCollection| {
        a.representatives.iter().collect::<BTreeSet<_>>() == b.representatives.iter().collect::<BTreeSet<_>>()
    };
    (1..=lmax.min(collections.len().saturating_sub(2))).find(|&l| same(&collections[l - 1], &collections[l + 1]))
}

/// Nested collections for `j = 0, ..., lmax + 1` and their stabilization level.
pub fn stabilize_collections(
    mu: &Measure,
    hp: &CosetNilprogression,
    delta0: &Rational,
    c0: u64,
    lmax: usize,
    pool: &[GroupElement],
    cap: usize,
) -> Result<Stabilization> {
    if c0 < 2 {
        return Err(Error::domain("C0 must be at least 2"));
    }
    if lmax == 0 {
        return Err(Error::NoStabilization { level_sizes: Vec::new() });
    }
    let collections = nested_collections(mu, hp, delta0, c0, lmax + 2, pool, cap)?;
    match stabilization_level(&collections, lmax) {
        Some(level) => Ok(Stabilization { level, collections }),
        None => Err(Error::NoStabilization { level_sizes: collections.iter().map(|c| c.len()).collect() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupContext;
    use crate::nilprog::Progression;
    use crate::rational::rat;

    fn v(x: i64) -> GroupElement {
        GroupElement::Vector(vec![x])
    }

    fn interval_hp(n: i64) -> CosetNilprogression {
        let ctx = GroupContext::lattice(1).unwrap();
        CosetNilprogression::trivial_h(Progression::new(&ctx, vec![v(1)], vec![int(n)]).unwrap())
    }

    fn wide_uniform(w: i64) -> Measure {
        let ctx = GroupContext::lattice(1).unwrap();
        let atoms: Vec<GroupElement> = (0..w).map(v).collect();
        Measure::uniform(&ctx, &atoms).unwrap()
    }

    #[test]
    fn zero_delta_keeps_only_the_base() {
        let mu = wide_uniform(50);
        let hp = interval_hp(2);
        let pool: Vec<GroupElement> = (-10..=10).map(v).collect();
        let c = maximal_disjoint_translates(&mu, &hp, &int(0), &pool, 10_000).unwrap();
        assert_eq!(c.representatives, vec![v(0)]);
        assert!(c.verified());
    }

    #[test]
    fn empty_pool_gives_the_base() {
        let mu = wide_uniform(5);
        let c = maximal_disjoint_translates(&mu, &interval_hp(1), &int(1), &[], 1000).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c.verified());
    }

    #[test]
    fn interval_pool_on_the_line() {
        // d_mu(k, id) <= sqrt(2) always, so delta = 2 admits the whole pool.
        let n = 3;
        let mu = wide_uniform(100);
        let hp = interval_hp(n);
        let pool: Vec<GroupElement> = (-3 * n..=3 * n).map(v).collect();
        let c = maximal_disjoint_translates(&mu, &hp, &int(2), &pool, 10_000).unwrap();
        assert!(c.verified());
        // Oracle: greedy over [-9, 9] in increasing order picks -9 (gap 9 > 2N), then 7.
        assert_eq!(c.representatives, vec![v(0), v(-9), v(7)]);
        for k in -3 * n..=3 * n {
            assert!(c
                .representatives
                .iter()
                .any(|r| matches!(r, GroupElement::Vector(x) if (k - x[0]).abs() <= 2 * n)));
        }
    }

    #[test]
    fn stabilizes_immediately_when_distances_are_zero_or_large() {
        // Z/12, mu uniform on {0, 6}: d(6, id) = 0, every other shift has d^2 = 2.
        let ctx = GroupContext::cyclic(12).unwrap();
        let mu = Measure::uniform(&ctx, &[GroupElement::Residue(0), GroupElement::Residue(6)]).unwrap();
        let hp = CosetNilprogression::trivial_h(
            Progression::new(&ctx, vec![GroupElement::Residue(0)], vec![int(1)]).unwrap(),
        );
        let pool: Vec<GroupElement> = (0..12).map(GroupElement::Residue).collect();
        let s = stabilize_collections(&mu, &hp, &rat(1, 2), 2, 4, &pool, 1000).unwrap();
        assert_eq!(s.level, 1);
        assert_eq!(s.collection().representatives, vec![GroupElement::Residue(0), GroupElement::Residue(6)]);
    }

    #[test]
    fn geometric_distances_stabilize_where_predicted() {
        // mu uniform on [0, W): d(k, id)^2 = 2|k| / W for |k| <= W. With HP = {0}
        // a shift k joins level j iff 2|k|/W <= (delta0 / C0^j)^2.
        let w = 4096;
        let mu = wide_uniform(w);
        let ctx = GroupContext::lattice(1).unwrap();
        let hp = CosetNilprogression::trivial_h(Progression::new(&ctx, vec![v(0)], vec![int(1)]).unwrap());
        // delta0 = 1, C0 = 2: thresholds^2 are 4^-j, so |k| <= 2048 / 4^j.
        // Pool {2048, 8}: level 0 holds both, levels 1..=3 hold 8, level 4 onward none.
        let pool = vec![v(2048), v(8)];
        let s = stabilize_collections(&mu, &hp, &int(1), 2, 8, &pool, 10_000).unwrap();
        let sizes = s.level_sizes();
        // Independent count of pool members per level.
        let expected: Vec<usize> = (0..=9)
            .map(|j| {
                1 + pool
                    .iter()
                    .filter(|k| matches!(k, GroupElement::Vector(x) if 2 * x[0].abs() * (1 << (2 * j)) <= w))
                    .count()
            })
            .collect();
        assert_eq!(sizes, expected);
        // Levels 1 and 3 agree, level 0 and 2 do not.
        assert_eq!(s.level, 2);
    }

    #[test]
    fn lmax_zero_fails() {
        let mu = wide_uniform(4);
        assert!(matches!(
            stabilize_collections(&mu, &interval_hp(1), &int(1), 2, 0, &[], 100),
            Err(Error::NoStabilization { .. })
        ));
    }

    #[test]
    fn no_stabilization_reports_sizes() {
        let w = 1 << 16;
        let mu = wide_uniform(w);
        let ctx = GroupContext::lattice(1).unwrap();
        let hp = CosetNilprogression::trivial_h(Progression::new(&ctx, vec![v(0)], vec![int(1)]).unwrap());
        // One new shift per level: |k| = 2^15 / 4^j.
        let pool: Vec<GroupElement> = (0..5).map(|j| v((1 << 15) >> (2 * j))).collect();
        match stabilize_collections(&mu, &hp, &int(1), 2, 3, &pool, 10_000) {
            Err(Error::NoStabilization { level_sizes }) => assert_eq!(level_sizes, vec![6, 5, 4, 3, 2]),
            other => panic!("{other:?}"),
        }
    }
}
