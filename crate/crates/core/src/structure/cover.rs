//! Greedy covers of `A A` by left translates of `A`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::group::{GroupContext, GroupElement};
use crate::ElementSet;

#[derive(Clone, Debug, PartialEq)]
pub struct ApproxGroupCover {
    /// Translates `x` with `A A` contained in the union of `x A`, in the order chosen.
    pub cover: Vec<GroupElement>,
    /// `|cover|`; an upper bound on the least `K`, not the least `K` itself.
    pub k: usize,
    pub a_size: usize,
    pub aa_size: usize,
    pub within_kmax: bool,
}

/// Checks `id in A` and `A = A^-1`, then covers `A A` greedily by translates
/// `x A` with `x` drawn from `A A`, adding `x` and `x^-1` together.
pub fn approx_group_cover(ctx: &GroupContext, a: &[GroupElement], kmax: usize, cap: usize) -> Result<ApproxGroupCover> {
    for g in a {
        ctx.validate(g)?;
    }
    let set: ElementSet = a.iter().cloned().collect();
    let id = ctx.identity();
    if !set.contains(&id) {
        return Err(Error::domain("A is not symmetric: the identity is missing"));
    }
    let mut witnesses: Vec<GroupElement> = set.iter().filter(|g| !set.contains(&ctx.inv(g))).cloned().collect();
    if !witnesses.is_empty() {
        witnesses.sort();
        witnesses.truncate(8);
        let list: Vec<_> = witnesses.iter().map(|g| format!("{g}")).collect();
        return Err(Error::domain(format!("A is not symmetric: inverses missing for {}", list.join(", "))));
    }
    let elems: Vec<GroupElement> = set.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let aa = ctx.product_set(&elems, &elems, cap)?;
    let candidates: Vec<GroupElement> = aa.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();

    let mut uncovered = aa.clone();
    let mut chosen: BTreeSet<GroupElement> = BTreeSet::new();
    let mut cover = Vec::new();
    let add = |x: &GroupElement,
               chosen: &mut BTreeSet<GroupElement>,
               uncovered: &mut ElementSet,
               cover: &mut Vec<GroupElement>| {
        for y in [x.clone(), ctx.inv(x)] {
            if chosen.insert(y.clone()) {
                for s in &elems {
                    uncovered.remove(&ctx.mul(&y, s));
                }
                cover.push(y);
            }
        }
    };
    add(&id, &mut chosen, &mut uncovered, &mut cover);
    while !uncovered.is_empty() {
        // Best new coverage per added element; candidates are scanned in canonical order.
        let mut best: Option<(usize, usize, &GroupElement)> = None;
        for x in &candidates {
            if chosen.contains(x) {
                continue;
            }
            let xi = ctx.inv(x);
            let pair: Vec<&GroupElement> = if xi == *x { alloc::vec![x] } else { alloc::vec![x, &xi] };
            let mut hit = ElementSet::default();
            for y in &pair {
                for s in &elems {
                    let z = ctx.mul(y, s);
                    if uncovered.contains(&z) {
                        hit.insert(z);
                    }
                }
            }
            let gain = hit.len();
            let cost = pair.len();
            let better = match best {
                None => gain > 0,
                Some((bg, bc, _)) => gain * bc > bg * cost,
            };
            if better {
                best = Some((gain, cost, x));
            }
        }
        let (_, _, x) = best.expect("A A is covered by A A A");
        let x = x.clone();
        add(&x, &mut chosen, &mut uncovered, &mut cover);
    }
    let k = cover.len();
    Ok(ApproxGroupCover { cover, k, a_size: elems.len(), aa_size: aa.len(), within_kmax: k <= kmax })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn interval(n: i64) -> Vec<GroupElement> {
        (-n..=n).map(|x| GroupElement::Vector(vec![x])).collect()
    }

    #[test]
    fn subgroup_needs_one_translate() {
        let ctx = GroupContext::cyclic(12).unwrap();
        let h: Vec<GroupElement> = [0, 3, 6, 9].into_iter().map(GroupElement::Residue).collect();
        let c = approx_group_cover(&ctx, &h, 1, 1000).unwrap();
        assert_eq!(c.cover, vec![GroupElement::Residue(0)]);
        assert!(c.within_kmax);
    }

    #[test]
    fn interval_needs_three() {
        for n in [1, 2, 5, 17, 100] {
            let ctx = GroupContext::lattice(1).unwrap();
            let c = approx_group_cover(&ctx, &interval(n), 3, 100_000).unwrap();
            assert!(c.k <= 3, "N = {n}: {:?}", c.cover);
            // Oracle: [-2N, 2N] is covered by the chosen translates of [-N, N].
            for y in -2 * n..=2 * n {
                assert!(c.cover.iter().any(|x| matches!(x, GroupElement::Vector(v) if (y - v[0]).abs() <= n)));
            }
        }
    }

    #[test]
    fn three_point_set() {
        let ctx = GroupContext::cyclic(11).unwrap();
        let a: Vec<GroupElement> = [0, 1, 10].into_iter().map(GroupElement::Residue).collect();
        let c = approx_group_cover(&ctx, &a, 3, 1000).unwrap();
        assert_eq!(c.aa_size, 5);
        assert!(c.k <= 3);
    }

    #[test]
    fn asymmetric_set_is_rejected() {
        let ctx = GroupContext::cyclic(11).unwrap();
        let a: Vec<GroupElement> = [0, 1, 2].into_iter().map(GroupElement::Residue).collect();
        let e = approx_group_cover(&ctx, &a, 3, 1000).unwrap_err();
        assert!(matches!(e, Error::Domain(ref m) if m.contains("inverses")), "{e}");
        let b = [GroupElement::Residue(1), GroupElement::Residue(10)];
        assert!(approx_group_cover(&ctx, &b, 3, 1000).is_err());
    }

    #[test]
    fn kmax_flag() {
        let ctx = GroupContext::lattice(1).unwrap();
        let c = approx_group_cover(&ctx, &interval(4), 2, 1000).unwrap();
        assert!(!c.within_kmax);
    }
}
