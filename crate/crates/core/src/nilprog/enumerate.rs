//! Exact enumeration of dilates `HP_lambda`.
//!
//! Generators that commute with every generator contribute an exponent box.
//! If exactly two non-central generators `u, v` remain and `c = [v, u]`
//! commutes with both, every word collects to `u^a v^b c^e` and the set of
//! reachable `e` for given `(a, b)` is an explicit integer interval. Anything
//! else falls back to a breadth-first word search with dominance pruning on
//! the vector of used occurrences.

use alloc::vec;
use alloc::vec::Vec;

use super::{CosetNilprogression, Progression};
use crate::error::{Error, Result};
use crate::group::{GroupContext, GroupElement};
use crate::rational::Rational;
use crate::{ElementMap, ElementSet};

/// `HP_lambda` as a set.
pub fn enumerate_hp(hp: &CosetNilprogression, lambda: &Rational, cap: usize) -> Result<ElementSet> {
    let p = enumerate_p(hp.progression(), lambda, cap)?;
    times_h(hp, p, cap)
}

/// `HP_lambda` by word search only, without any normal-form shortcut.
pub fn enumerate_hp_words(hp: &CosetNilprogression, lambda: &Rational, cap: usize) -> Result<ElementSet> {
    let prog = hp.progression();
    let p = word_search(prog.ctx(), prog.generators(), &prog.budgets(lambda), cap)?;
    times_h(hp, p, cap)
}

fn times_h(hp: &CosetNilprogression, p: ElementSet, cap: usize) -> Result<ElementSet> {
    if hp.h().len() == 1 {
        return Ok(p);
    }
    let ctx = hp.ctx();
    let mut out = ElementSet::default();
    for h in hp.h() {
        for x in &p {
            out.insert(ctx.mul(h, x));
            if out.len() > cap {
                return Err(Error::resource("HP enumeration", cap, out.len()));
            }
        }
    }
    Ok(out)
}

/// `P_lambda` as a set (no `H`).
pub fn enumerate_p(p: &Progression, lambda: &Rational, cap: usize) -> Result<ElementSet> {
    let ctx = p.ctx();
    let budgets = p.budgets(lambda);
    let central = p.central_indices();
    let rest: Vec<usize> = (0..p.rank()).filter(|i| !central.contains(i)).collect();
    let gens = p.generators();

    let core: ElementSet = match rest.as_slice() {
        [] => {
            let mut s = ElementSet::default();
            s.insert(ctx.identity());
            s
        }
        &[i, j]
            if {
                let c = ctx.commutator(&gens[j], &gens[i]);
                ctx.commutes(&c, &gens[i]) && ctx.commutes(&c, &gens[j])
            } =>
        {
            rank_two_step_two(ctx, &gens[i], &gens[j], budgets[i], budgets[j], cap)?
        }
        _ => {
            let g: Vec<GroupElement> = rest.iter().map(|&i| gens[i].clone()).collect();
            let b: Vec<u64> = rest.iter().map(|&i| budgets[i]).collect();
            word_search(ctx, &g, &b, cap)?
        }
    };
    let mut out = core;
    for &k in &central {
        if budgets[k] == 0 {
            continue;
        }
        let b = budgets[k] as i64;
        let powers: Vec<GroupElement> = (-b..=b).map(|e| ctx.pow(&gens[k], e)).collect();
        let mut next = ElementSet::default();
        for x in &out {
            for y in &powers {
                next.insert(ctx.mul(x, y));
                if next.len() > cap {
                    return Err(Error::resource("P enumeration", cap, next.len()));
                }
            }
        }
        out = next;
    }
    Ok(out)
}

/// Largest `alpha * hi - beta * lo` over the running maxima `hi` and minima
/// `lo` of a +-1 walk with `up` up-steps and `down` down-steps.
fn extreme_pairing(alpha: i64, beta: i64, up: i64, down: i64) -> i64 {
    let f = up - down;
    let span = up.max(down);
    let mut best = i64::MIN;
    for hi in f.max(0)..=up {
        let lo = (-down).max(hi - span);
        if lo <= f.min(0) {
            best = best.max(alpha * hi - beta * lo);
        }
    }
    best
}

fn rank_two_step_two(
    ctx: &GroupContext,
    u: &GroupElement,
    v: &GroupElement,
    bu: u64,
    bv: u64,
    cap: usize,
) -> Result<ElementSet> {
    let c = ctx.commutator(v, u);
    let (bu, bv) = (bu as i64, bv as i64);
    let counts = |a: i64, b: i64| if a >= 0 { (b, b - a) } else { (b + a, b) };
    let mut out = ElementSet::default();
    for a in -bu..=bu {
        let ua = ctx.pow(u, a);
        let (pp, pm) = counts(a, bu);
        for b in -bv..=bv {
            let (qp, qm) = counts(b, bv);
            let e_max = extreme_pairing(pp, pm, qp, qm);
            let e_min = -extreme_pairing(pm, pp, qp, qm);
            let base = ctx.mul(&ua, &ctx.pow(v, b));
            let mut x = ctx.mul(&base, &ctx.pow(&c, e_min));
            for _ in e_min..=e_max {
                out.insert(x.clone());
                if out.len() > cap {
                    return Err(Error::resource("P enumeration", cap, out.len()));
                }
                x = ctx.mul(&x, &c);
            }
        }
    }
    Ok(out)
}

/// Breadth-first search over words respecting per-letter budgets. A state
/// `(g, used)` is dropped when `g` was already reached with a componentwise
/// smaller usage vector.
pub(crate) fn word_search(
    ctx: &GroupContext,
    gens: &[GroupElement],
    budgets: &[u64],
    cap: usize,
) -> Result<ElementSet> {
    let letters: Vec<(usize, GroupElement)> =
        gens.iter().enumerate().flat_map(|(i, g)| [(i, g.clone()), (i, ctx.inv(g))]).collect();
    let limit: Vec<u32> = letters.iter().map(|(i, _)| budgets[*i].min(u32::MAX as u64) as u32).collect();
    let mut frontiers: ElementMap<Vec<Vec<u32>>> = ElementMap::default();
    let start = vec![0u32; letters.len()];
    frontiers.insert(ctx.identity(), vec![start.clone()]);
    let mut queue = vec![(ctx.identity(), start)];
    while !queue.is_empty() {
        let mut next = Vec::new();
        for (g, used) in queue {
            for (l, (_, x)) in letters.iter().enumerate() {
                if used[l] >= limit[l] {
                    continue;
                }
                let y = ctx.mul(&g, x);
                let mut u2 = used.clone();
                u2[l] += 1;
                let entry = frontiers.entry(y.clone()).or_default();
                if entry.iter().any(|w| w.iter().zip(&u2).all(|(a, b)| a <= b)) {
                    continue;
                }
                entry.retain(|w| !w.iter().zip(&u2).all(|(a, b)| b <= a));
                entry.push(u2.clone());
                next.push((y, u2));
            }
            if frontiers.len() > cap {
                return Err(Error::resource("word search", cap, frontiers.len()));
            }
        }
        queue = next;
    }
    Ok(frontiers.into_keys().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn heis(a: i64, b: i64, c: i64) -> GroupElement {
        GroupElement::Heisenberg([a, b, c])
    }

    fn box_hp(gens: Vec<GroupElement>, lengths: Vec<Rational>) -> CosetNilprogression {
        let ctx = GroupContext::Heisenberg;
        CosetNilprogression::trivial_h(Progression::new(&ctx, gens, lengths).unwrap())
    }

    #[test]
    fn interval_on_the_line() {
        let ctx = GroupContext::lattice(1).unwrap();
        let p = Progression::new(&ctx, vec![GroupElement::Vector(vec![1])], vec![int(5)]).unwrap();
        let s = enumerate_hp(&CosetNilprogression::trivial_h(p), &int(1), 100).unwrap();
        assert_eq!(s.len(), 11);
        for x in -5..=5 {
            assert!(s.contains(&GroupElement::Vector(vec![x])));
        }
    }

    #[test]
    fn commutator_word_is_in_rank_two_box() {
        let hp = box_hp(vec![heis(1, 0, 0), heis(0, 1, 0)], vec![int(1), int(1)]);
        let s = enumerate_hp(&hp, &int(1), 1000).unwrap();
        assert!(s.contains(&heis(0, 0, 1)));
        let ctx = GroupContext::Heisenberg;
        let w = ctx.product(&[heis(1, 0, 0), heis(0, 1, 0), heis(-1, 0, 0), heis(0, -1, 0)]);
        assert_eq!(w, heis(0, 0, 1));
    }

    #[test]
    fn small_dilate_collapses_to_h() {
        let hp = box_hp(vec![heis(1, 0, 0), heis(0, 1, 0)], vec![int(3), int(2)]);
        let s = enumerate_hp(&hp, &rat(1, 4), 1000).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn fast_paths_agree_with_word_search() {
        let cases: Vec<(Vec<GroupElement>, Vec<Rational>)> = vec![
            (vec![heis(1, 0, 0), heis(0, 1, 0)], vec![int(2), int(3)]),
            (vec![heis(1, 0, 0), heis(0, 1, 0), heis(0, 0, 1)], vec![int(2), int(2), int(4)]),
            (vec![heis(1, 2, 0), heis(-1, 1, 3)], vec![int(2), int(2)]),
            (vec![heis(1, 0, 0), heis(0, 1, 0)], vec![rat(5, 2), int(1)]),
            (vec![heis(0, 1, 0), heis(1, 0, 0)], vec![int(3), int(1)]),
        ];
        for (g, l) in cases {
            let hp = box_hp(g, l);
            for lambda in [rat(1, 2), int(1), rat(3, 2)] {
                let fast = enumerate_hp(&hp, &lambda, 100_000).unwrap();
                let slow = enumerate_hp_words(&hp, &lambda, 100_000).unwrap();
                assert_eq!(fast, slow);
            }
        }
    }

    #[test]
    fn monotone_in_lambda() {
        let hp = box_hp(vec![heis(1, 0, 0), heis(0, 1, 0)], vec![int(2), int(3)]);
        let a = enumerate_hp(&hp, &rat(1, 2), 100_000).unwrap();
        let b = enumerate_hp(&hp, &int(1), 100_000).unwrap();
        assert!(a.is_subset(&b));
    }

    #[test]
    fn coset_progression_in_symmetric_group() {
        let ctx = GroupContext::symmetric(4).unwrap();
        // H = Klein four-group, normal in S4; P generated by a transposition.
        let h = vec![
            ctx.identity(),
            GroupElement::Perm(vec![1, 0, 3, 2]),
            GroupElement::Perm(vec![2, 3, 0, 1]),
            GroupElement::Perm(vec![3, 2, 1, 0]),
        ];
        let p = Progression::new(&ctx, vec![GroupElement::Perm(vec![1, 0, 2, 3])], vec![int(1)]).unwrap();
        let hp = CosetNilprogression::new(p, h).unwrap();
        assert_eq!(enumerate_hp(&hp, &int(1), 100).unwrap().len(), 8);
        assert_eq!(enumerate_hp(&hp, &rat(1, 2), 100).unwrap().len(), 4);
    }
}
