use alloc::vec::Vec;

use super::{GroupContext, GroupElement};
use crate::error::{Error, Result};
use crate::ElementSet;

/// A word-metric ball, stored in breadth-first order.
#[derive(Clone, Debug)]
pub struct Ball {
    /// Elements in order of discovery; sphere `k` occupies
    /// `elements[sizes[k-1]..sizes[k]]`.
    pub elements: Vec<GroupElement>,
    /// `sizes[k] = |B_k|` for `k = 0..=radius`.
    pub sizes: Vec<usize>,
}

impl Ball {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Elements at distance exactly `k`.
    pub fn sphere(&self, k: usize) -> &[GroupElement] {
        let lo = if k == 0 { 0 } else { self.sizes[k - 1] };
        &self.elements[lo..self.sizes[k]]
    }
}

/// Ball of radius `radius` in the Cayley graph of `gens` and their inverses.
///
/// On overflow the error reports the number of distinct elements found so far.
pub fn ball(ctx: &GroupContext, gens: &[GroupElement], radius: usize, cap: usize) -> Result<Ball> {
    if gens.is_empty() {
        return Err(Error::domain("ball needs at least one generator"));
    }
    for g in gens {
        ctx.validate(g)?;
    }
    let mut steps: Vec<GroupElement> = Vec::with_capacity(2 * gens.len());
    for g in gens {
        for s in [g.clone(), ctx.inv(g)] {
            if !steps.contains(&s) {
                steps.push(s);
            }
        }
    }
    let id = ctx.identity();
    let mut seen = ElementSet::default();
    seen.insert(id.clone());
    let mut elements = alloc::vec![id];
    let mut sizes = alloc::vec![1];
    let mut frontier = 0;
    for _ in 0..radius {
        let end = elements.len();
        for i in frontier..end {
            for s in &steps {
                let x = ctx.mul(&elements[i], s);
                if !seen.contains(&x) {
                    if elements.len() >= cap {
                        return Err(Error::resource("ball", cap, elements.len() + 1));
                    }
                    seen.insert(x.clone());
                    elements.push(x);
                }
            }
        }
        frontier = end;
        sizes.push(elements.len());
    }
    Ok(Ball { elements, sizes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_zero_is_identity() {
        let ctx = GroupContext::Heisenberg;
        let b = ball(&ctx, &[GroupElement::Heisenberg([1, 0, 0])], 0, 10).unwrap();
        assert_eq!(b.sizes, [1]);
    }

    #[test]
    fn single_lattice_generator_grows_linearly() {
        let ctx = GroupContext::lattice(1).unwrap();
        let b = ball(&ctx, &[GroupElement::Vector(alloc::vec![1])], 6, 100).unwrap();
        let expected: Vec<usize> = (0..=6).map(|k| 2 * k + 1).collect();
        assert_eq!(b.sizes, expected);
    }

    #[test]
    fn cap_reports_partial_count() {
        let ctx = GroupContext::lattice(2).unwrap();
        let gens = [GroupElement::Vector(alloc::vec![1, 0]), GroupElement::Vector(alloc::vec![0, 1])];
        match ball(&ctx, &gens, 10, 20) {
            Err(Error::Resource { cap: 20, reached, .. }) => assert!(reached > 20),
            other => panic!("expected resource error, got {other:?}"),
        }
    }
}
