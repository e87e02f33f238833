//! Membership in finitely generated subgroups.
//!
//! Exact for cyclic groups, lattices, the Heisenberg group and any subgroup
//! that turns out to be finite within the cap. For infinite subgroups of
//! matrix groups only a bounded search is possible and a miss is reported as
//! [`Membership::Unknown`].

use alloc::vec::Vec;

use num_integer::Integer;

use super::{ball, GroupContext, GroupElement};
use crate::error::Result;
use crate::ElementSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Member,
    NonMember,
    /// Not found in the searched region; the subgroup is infinite and the
    /// word problem was not solved exactly.
    Unknown,
}

impl Membership {
    pub fn is_member(self) -> bool {
        self == Membership::Member
    }
}

#[derive(Clone, Debug)]
enum Repr {
    /// Multiples of `d` in `Z/m`.
    Cyclic {
        d: u64,
    },
    /// Echelon basis rows with their pivot columns.
    Lattice {
        rows: Vec<(usize, Vec<i128>)>,
    },
    /// `e1 = (p, q, c1)`, `e2 = (0, s, c2)` and central part `z Z`.
    Heisenberg {
        e1: Option<[i64; 3]>,
        e2: Option<[i64; 3]>,
        z: i64,
    },
    Finite(ElementSet),
    /// Elements found within a bounded ball of an infinite subgroup.
    Partial(ElementSet),
}

const PARTIAL_CAP: usize = 100_000;

/// Answers membership queries for `<gens>`.
#[derive(Clone, Debug)]
pub struct SubgroupOracle {
    ctx: GroupContext,
    repr: Repr,
}

impl SubgroupOracle {
    pub fn new(ctx: &GroupContext, gens: &[GroupElement], cap: usize) -> Result<Self> {
        for g in gens {
            ctx.validate(g)?;
        }
        let repr = match ctx {
            GroupContext::Cyclic { modulus } => {
                let mut d = *modulus;
                for g in gens {
                    if let GroupElement::Residue(r) = g {
                        d = d.gcd(r);
                    }
                }
                Repr::Cyclic { d }
            }
            GroupContext::Lattice { .. } => Repr::Lattice { rows: echelon(gens) },
            GroupContext::Heisenberg => heisenberg_basis(gens),
            _ => match closure(ctx, gens, cap) {
                Some(set) => Repr::Finite(set),
                None => {
                    // Infinite (or very large): keep a ball of moderate size.
                    let mut set = ElementSet::default();
                    let nonempty: Vec<GroupElement> = gens.to_vec();
                    if !nonempty.is_empty() {
                        let mut radius = 1;
                        while let Ok(b) = ball(ctx, &nonempty, radius, cap.min(PARTIAL_CAP)) {
                            let grew = b.len() > set.len();
                            set = b.elements.into_iter().collect();
                            if !grew || radius >= 64 {
                                break;
                            }
                            radius += 1;
                        }
                    }
                    set.insert(ctx.identity());
                    Repr::Partial(set)
                }
            },
        };
        Ok(SubgroupOracle { ctx: ctx.clone(), repr })
    }

    /// Whether membership answers are decisive for non-members.
    pub fn is_exact(&self) -> bool {
        !matches!(self.repr, Repr::Partial(_))
    }

    /// The subgroup's elements when it is known to be finite.
    pub fn finite_elements(&self) -> Option<&ElementSet> {
        match &self.repr {
            Repr::Finite(s) => Some(s),
            _ => None,
        }
    }

    pub fn contains(&self, g: &GroupElement) -> Membership {
        let yes = |b: bool| if b { Membership::Member } else { Membership::NonMember };
        match (&self.repr, g) {
            (Repr::Cyclic { d }, GroupElement::Residue(r)) => yes(*d == 0 || r % d == 0),
            (Repr::Lattice { rows }, GroupElement::Vector(v)) => {
                let mut v: Vec<i128> = v.iter().map(|&x| x as i128).collect();
                for (p, row) in rows {
                    if v[*p] % row[*p] != 0 {
                        return Membership::NonMember;
                    }
                    let k = v[*p] / row[*p];
                    for (x, r) in v.iter_mut().zip(row) {
                        *x -= k * r;
                    }
                }
                yes(v.iter().all(|&x| x == 0))
            }
            (Repr::Heisenberg { e1, e2, z }, GroupElement::Heisenberg(_)) => {
                let ctx = &self.ctx;
                let mut x = g.clone();
                let coord = |x: &GroupElement| match x {
                    GroupElement::Heisenberg(c) => *c,
                    _ => unreachable!(),
                };
                let c = coord(&x);
                match e1 {
                    Some(e) => {
                        if c[0] % e[0] != 0 {
                            return Membership::NonMember;
                        }
                        let k = c[0] / e[0];
                        x = ctx.mul(&ctx.pow(&GroupElement::Heisenberg(*e), -k), &x);
                    }
                    None if c[0] != 0 => return Membership::NonMember,
                    None => {}
                }
                let c = coord(&x);
                match e2 {
                    Some(e) => {
                        if c[1] % e[1] != 0 {
                            return Membership::NonMember;
                        }
                        let k = c[1] / e[1];
                        x = ctx.mul(&ctx.pow(&GroupElement::Heisenberg(*e), -k), &x);
                    }
                    None if c[1] != 0 => return Membership::NonMember,
                    None => {}
                }
                let c = coord(&x);
                debug_assert!(c[0] == 0 && c[1] == 0);
                yes(if *z == 0 { c[2] == 0 } else { c[2] % z == 0 })
            }
            (Repr::Finite(set), _) => yes(set.contains(g)),
            (Repr::Partial(set), _) => {
                if set.contains(g) {
                    Membership::Member
                } else {
                    Membership::Unknown
                }
            }
            _ => Membership::NonMember,
        }
    }
}

/// Closure of `gens` under multiplication, if it has at most `cap` elements.
pub(crate) fn closure(ctx: &GroupContext, gens: &[GroupElement], cap: usize) -> Option<ElementSet> {
    let mut set = ElementSet::default();
    set.insert(ctx.identity());
    let mut queue = alloc::vec![ctx.identity()];
    while let Some(x) = queue.pop() {
        for g in gens {
            let y = ctx.mul(&x, g);
            if set.insert(y.clone()) {
                if set.len() > cap {
                    return None;
                }
                queue.push(y);
            }
        }
    }
    // A finite monoid generated by group elements is a group.
    Some(set)
}

/// Integer row echelon form of the lattice spanned by `gens`.
fn echelon(gens: &[GroupElement]) -> Vec<(usize, Vec<i128>)> {
    let mut rows: Vec<Vec<i128>> = gens
        .iter()
        .filter_map(|g| match g {
            GroupElement::Vector(v) => Some(v.iter().map(|&x| x as i128).collect()),
            _ => None,
        })
        .filter(|v: &Vec<i128>| v.iter().any(|&x| x != 0))
        .collect();
    let dim = rows.first().map_or(0, |r| r.len());
    let mut out = Vec::new();
    for col in 0..dim {
        // Euclid on column `col` among the remaining rows.
        loop {
            rows.retain(|r| r.iter().any(|&x| x != 0));
            let mut nz: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][col] != 0).collect();
            if nz.len() <= 1 {
                break;
            }
            nz.sort_by_key(|&i| rows[i][col].abs());
            let piv = nz[0];
            for &i in &nz[1..] {
                let k = rows[i][col] / rows[piv][col];
                let pr = rows[piv].clone();
                for (x, p) in rows[i].iter_mut().zip(&pr) {
                    *x -= k * p;
                }
            }
        }
        if let Some(i) = rows.iter().position(|r| r[col] != 0) {
            let row = rows.swap_remove(i);
            out.push((col, row));
        }
    }
    out
}

fn heisenberg_basis(gens: &[GroupElement]) -> Repr {
    let ctx = GroupContext::Heisenberg;
    let mut elems: Vec<GroupElement> = gens.iter().filter(|g| !ctx.is_identity(g)).cloned().collect();
    let coord = |x: &GroupElement| match x {
        GroupElement::Heisenberg(c) => *c,
        _ => unreachable!(),
    };
    // Nielsen moves g_i <- g_i g_j^k keep the generated subgroup fixed.
    let reduce = |elems: &mut Vec<GroupElement>, axis: usize| -> Option<GroupElement> {
        loop {
            let mut nz: Vec<usize> = (0..elems.len()).filter(|&i| coord(&elems[i])[axis] != 0).collect();
            if nz.len() <= 1 {
                return nz.pop().map(|i| elems.swap_remove(i));
            }
            nz.sort_by_key(|&i| coord(&elems[i])[axis].abs());
            let piv = elems[nz[0]].clone();
            let pv = coord(&piv)[axis];
            for &i in &nz[1..] {
                let k = coord(&elems[i])[axis] / pv;
                elems[i] = ctx.mul(&elems[i], &ctx.pow(&piv, -k));
            }
        }
    };
    let e1 = reduce(&mut elems, 0);
    let e2 = reduce(&mut elems, 1);
    let mut z = 0i64;
    for e in &elems {
        z = z.gcd(&coord(e)[2]);
    }
    if let (Some(a), Some(b)) = (&e1, &e2) {
        // [e1, e2] = (0, 0, p s) is central and lies in the subgroup.
        z = z.gcd(&(coord(a)[0] * coord(b)[1]));
    }
    let normalize = |e: Option<GroupElement>| {
        e.map(|e| {
            let c = coord(&e);
            if c[0] < 0 || (c[0] == 0 && c[1] < 0) {
                coord(&ctx.inv(&e))
            } else {
                c
            }
        })
    };
    Repr::Heisenberg { e1: normalize(e1), e2: normalize(e2), z: z.abs() }
}
