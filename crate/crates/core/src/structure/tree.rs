//! The weighted graph on cosets `k <HP>` and its greedy spanning tree.
//!
//! `d_T(x<HP>, y<HP>) = inf { d_mu(g, id) : g x <HP> = y <HP> }` ranges over
//! `g = y h x^-1` with `h in <HP>`. Only finitely many `h` can be tried: all of
//! `<HP>` when it is finite and small, otherwise `HP^2`, plus any pool element
//! lying in the right coset. Weights are therefore upper bounds for the true
//! infimum; they are lowered whenever a tree representative pair exhibits a
//! smaller distance, and the tree is rebuilt.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::translates::{DistanceCache, HpSets};
use crate::error::{Error, Result};
use crate::group::{closure, Membership, SubgroupOracle};
use crate::group::{GroupContext, GroupElement};
use crate::measure::Measure;
use crate::nilprog::CosetNilprogression;
use crate::rational::{int, Rational};

const REFINE_ROUNDS: usize = 8;
/// Largest `<HP>` enumerated in full when it is finite.
const FULL_SUBGROUP_CAP: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct TreeEdge {
    pub parent: usize,
    pub child: usize,
    /// `d_T(parent, child)^2`.
    pub weight_sq: Rational,
    /// The `g` attaining the weight; `x_child = g x_parent`.
    pub g: GroupElement,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CosetTree {
    /// One representative per vertex; vertex 0 is `<HP>` itself.
    pub vertices: Vec<GroupElement>,
    /// `x_t` for every vertex.
    pub x: Vec<GroupElement>,
    pub edges: Vec<TreeEdge>,
    /// `d_T^2` for every pair, row-major.
    pub weights_sq: Vec<Vec<Rational>>,
    /// Whether every coset comparison was decided exactly.
    pub cosets_exact: bool,
    /// Whether `<HP>` was enumerated in full, making `d_T` exact.
    pub weights_exact: bool,
    pub refinements: usize,
    /// Every edge on every tree path weighs at most the direct `d_T`.
    pub minimax: bool,
    /// `d_T(t, t') = d_mu(x_t, x_t')` on tree edges.
    pub edges_exact: bool,
    /// `d_T / |T| <= d_mu(x_t, x_t') <= |T| d_T` for all pairs.
    pub comparable: bool,
}

impl CosetTree {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn verified(&self) -> bool {
        self.minimax && self.edges_exact && self.comparable
    }

    /// Vertices on the tree path from `a` to `b`, as edge indices.
    pub fn path_edges(&self, a: usize, b: usize) -> Vec<usize> {
        let n = self.len();
        let mut parent = vec![usize::MAX; n];
        let mut via = vec![usize::MAX; n];
        for (e, edge) in self.edges.iter().enumerate() {
            parent[edge.child] = edge.parent;
            via[edge.child] = e;
        }
        let ancestors = |mut v: usize| {
            let mut out = vec![v];
            while parent[v] != usize::MAX {
                v = parent[v];
                out.push(v);
            }
            out
        };
        let pa = ancestors(a);
        let pb = ancestors(b);
        let common = *pa.iter().find(|v| pb.contains(v)).expect("tree is connected");
        let mut edges = Vec::new();
        for p in [&pa, &pb] {
            for &v in p.iter().take_while(|&&v| v != common) {
                edges.push(via[v]);
            }
        }
        edges
    }
}

/// Splits `reps` into distinct left cosets of `<HP>`, keeping the first
/// representative of each. The identity coset comes first.
fn distinct_cosets(
    reps: &[GroupElement],
    oracle: &SubgroupOracle,
    hp: &CosetNilprogression,
) -> (Vec<GroupElement>, bool) {
    let ctx = hp.ctx();
    let mut out = vec![ctx.identity()];
    let mut exact = true;
    for k in reps {
        let mut found = false;
        for r in &out {
            match oracle.contains(&ctx.mul(&ctx.inv(r), k)) {
                Membership::Member => {
                    found = true;
                    break;
                }
                Membership::NonMember => {}
                Membership::Unknown => exact = false,
            }
        }
        if !found {
            out.push(k.clone());
        }
    }
    (out, exact)
}

/// Builds the tree on the cosets of `<HP>` met by `reps`.
#[allow(clippy::needless_range_loop)]
pub fn build_coset_tree(
    reps: &[GroupElement],
    hp: &CosetNilprogression,
    mu: &Measure,
    pool: &[GroupElement],
    cap: usize,
) -> Result<CosetTree> {
    let ctx = hp.ctx().clone();
    let oracle = SubgroupOracle::new(&ctx, &hp.subgroup_generators(), FULL_SUBGROUP_CAP)?;
    let (vertices, cosets_exact) = distinct_cosets(reps, &oracle, hp);
    let n = vertices.len();

    let full = match oracle.finite_elements() {
        Some(s) => Some(s.clone()),
        None => closure(&ctx, &hp.subgroup_generators(), FULL_SUBGROUP_CAP),
    };
    let (subgroup, weights_exact): (Vec<GroupElement>, bool) = match full {
        Some(s) => (s.into_iter().collect::<BTreeSet<_>>().into_iter().collect(), true),
        None => (HpSets::new(hp, cap)?.hp2.into_iter().collect::<BTreeSet<_>>().into_iter().collect(), false),
    };
    let mut dist = DistanceCache::new(mu);

    // Best witness g for every ordered pair (a, b): g x_a <HP> = x_b <HP>, using
    // the fixed vertex representatives.
    let mut w: Vec<Vec<(Rational, GroupElement)>> = vec![vec![(int(0), ctx.identity()); n]; n];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let xa_inv = ctx.inv(&vertices[a]);
            let mut best: Option<(Rational, GroupElement)> = None;
            let mut consider = |g: GroupElement, dist: &mut DistanceCache| {
                let d = dist.to_id_sq(&g);
                if best.as_ref().is_none_or(|(bd, bg)| d < *bd || (d == *bd && g < *bg)) {
                    best = Some((d, g));
                }
            };
            for h in &subgroup {
                consider(ctx.product(&[vertices[b].clone(), h.clone(), xa_inv.clone()]), &mut dist);
            }
            for g in pool {
                // g x_a lies in x_b <HP>
                let t = ctx.product(&[ctx.inv(&vertices[b]), g.clone(), vertices[a].clone()]);
                if oracle.contains(&t) == Membership::Member {
                    consider(g.clone(), &mut dist);
                }
            }
            w[a][b] = best.expect("the subgroup contains the identity");
        }
    }
    // d(g, id) = d(g^-1, id), so the family is symmetric; keep the smaller witness.
    for a in 0..n {
        for b in a + 1..n {
            let (ab, ba) = (w[a][b].clone(), w[b][a].clone());
            if ba.0 < ab.0 {
                w[a][b] = (ba.0.clone(), ctx.inv(&ba.1));
            } else if ab.0 < ba.0 {
                w[b][a] = (ab.0.clone(), ctx.inv(&ab.1));
            }
        }
    }

    let mut refinements = 0;
    loop {
        let (x, edges) = prim(&w, &vertices, &ctx);
        // Lower any weight beaten by the representatives themselves.
        let mut lowered = false;
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let g = ctx.mul(&x[b], &ctx.inv(&x[a]));
                let d = dist.to_id_sq(&g);
                if d < w[a][b].0 {
                    w[a][b] = (d, g);
                    lowered = true;
                }
            }
        }
        if !lowered || refinements == REFINE_ROUNDS {
            let weights_sq: Vec<Vec<Rational>> =
                w.iter().map(|row| row.iter().map(|(d, _)| d.clone()).collect()).collect();
            let mut tree = CosetTree {
                vertices,
                x,
                edges,
                weights_sq,
                cosets_exact,
                weights_exact,
                refinements,
                minimax: false,
                edges_exact: false,
                comparable: false,
            };
            certify(&mut tree, &mut dist);
            return Ok(tree);
        }
        refinements += 1;
    }
}

/// Prim from vertex 0; ties broken by vertex index.
fn prim(
    w: &[Vec<(Rational, GroupElement)>],
    vertices: &[GroupElement],
    ctx: &GroupContext,
) -> (Vec<GroupElement>, Vec<TreeEdge>) {
    let n = w.len();
    let mut x: Vec<Option<GroupElement>> = vec![None; n];
    x[0] = Some(vertices[0].clone());
    let mut edges = Vec::new();
    for _ in 1..n {
        let mut best: Option<(usize, usize)> = None;
        for a in (0..n).filter(|&a| x[a].is_some()) {
            for b in (0..n).filter(|&b| x[b].is_none()) {
                if best.is_none_or(|(pa, pb)| w[a][b].0 < w[pa][pb].0) {
                    best = Some((a, b));
                }
            }
        }
        let (a, b) = best.expect("complete graph");
        // g x <HP> depends only on the coset of x, so the witness applies to x_a.
        let xa = x[a].clone().expect("in tree");
        let g = w[a][b].1.clone();
        x[b] = Some(ctx.mul(&g, &xa));
        edges.push(TreeEdge { parent: a, child: b, weight_sq: w[a][b].0.clone(), g });
    }
    (x.into_iter().map(|v| v.expect("spanning")).collect(), edges)
}

#[allow(clippy::needless_range_loop)]
fn certify(tree: &mut CosetTree, dist: &mut DistanceCache) {
    let n = tree.len();
    let w = &tree.weights_sq;
    let mut minimax = true;
    for a in 0..n {
        for b in a + 1..n {
            for e in tree.path_edges(a, b) {
                if tree.edges[e].weight_sq > w[a][b] {
                    minimax = false;
                }
            }
        }
    }
    let edges_exact = tree.edges.iter().all(|e| dist.between_sq(&tree.x[e.child], &tree.x[e.parent]) == e.weight_sq);
    let t2 = int((n * n) as i64);
    let mut comparable = true;
    for a in 0..n {
        for b in a + 1..n {
            let d = dist.between_sq(&tree.x[a], &tree.x[b]);
            if w[a][b] > &t2 * &d || d > &t2 * &w[a][b] {
                comparable = false;
            }
        }
    }
    tree.minimax = minimax;
    tree.edges_exact = edges_exact;
    tree.comparable = comparable;
}

/// `X = {x_t}`, checked for pairwise distinct cosets of `<HP>`.
pub fn representative_set(tree: &CosetTree, hp: &CosetNilprogression) -> Result<(Vec<GroupElement>, bool)> {
    let ctx = hp.ctx();
    let oracle = SubgroupOracle::new(ctx, &hp.subgroup_generators(), FULL_SUBGROUP_CAP)?;
    let mut exact = true;
    for a in 0..tree.len() {
        for b in a + 1..tree.len() {
            match oracle.contains(&ctx.mul(&ctx.inv(&tree.x[a]), &tree.x[b])) {
                Membership::Member => {
                    return Err(Error::domain(format!("x_{a} and x_{b} share a coset")));
                }
                Membership::NonMember => {}
                Membership::Unknown => exact = false,
            }
        }
    }
    Ok((tree.x.clone(), exact))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nilprog::Progression;

    fn res(x: u64) -> GroupElement {
        GroupElement::Residue(x)
    }

    #[test]
    fn single_vertex() {
        let ctx = GroupContext::cyclic(12).unwrap();
        let mu = Measure::uniform(&ctx, &[res(0), res(1)]).unwrap();
        let hp = CosetNilprogression::trivial_h(Progression::new(&ctx, vec![res(4)], vec![int(1)]).unwrap());
        // 4 and 8 lie in <HP> = {0, 4, 8}.
        let t = build_coset_tree(&[res(0), res(4), res(8)], &hp, &mu, &[], 1000).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.x, vec![res(0)]);
        assert!(t.edges.is_empty() && t.verified());
    }

    #[test]
    fn two_vertices_one_exact_edge() {
        let ctx = GroupContext::cyclic(12).unwrap();
        let mu = Measure::from_atoms(
            &ctx,
            [
                (res(0), crate::rational::rat(1, 2)),
                (res(1), crate::rational::rat(1, 3)),
                (res(5), crate::rational::rat(1, 6)),
            ],
        )
        .unwrap();
        let hp = CosetNilprogression::trivial_h(Progression::new(&ctx, vec![res(4)], vec![int(1)]).unwrap());
        let t = build_coset_tree(&[res(0), res(1)], &hp, &mu, &[], 1000).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.edges.len(), 1);
        assert!(t.weights_exact && t.verified());
        // Oracle: d_T^2 = min over g in 1 + {0, 4, 8} of d(g, id)^2.
        let oracle = [1u64, 5, 9].iter().map(|&g| crate::measure::d_mu(&mu, &res(g), &res(0)).squared).min().unwrap();
        assert_eq!(t.edges[0].weight_sq, oracle);
        assert_eq!(crate::measure::d_mu(&mu, &t.x[1], &t.x[0]).squared, oracle);
    }

    #[test]
    fn four_cosets_on_the_line_satisfy_minimax() {
        // Z^2 with <HP> = Z x {0}: cosets are horizontal lines.
        let ctx = GroupContext::lattice(2).unwrap();
        let p = Progression::new(&ctx, vec![GroupElement::Vector(vec![1, 0])], vec![int(2)]).unwrap();
        let hp = CosetNilprogression::trivial_h(p);
        let mut atoms = Vec::new();
        for x in 0..6 {
            for y in 0..5 {
                atoms.push(GroupElement::Vector(vec![x, y * y]));
            }
        }
        let mu = Measure::uniform(&ctx, &atoms).unwrap();
        let reps: Vec<GroupElement> = [0, 1, 3, 4].iter().map(|&y| GroupElement::Vector(vec![0, y])).collect();
        let t = build_coset_tree(&reps, &hp, &mu, &[], 10_000).unwrap();
        assert_eq!(t.len(), 4);
        // Brute force over all paths between each of the 6 pairs: the tree path
        // is a minimax path of the complete graph.
        let w = &t.weights_sq;
        for a in 0..4 {
            for b in a + 1..4 {
                let tree_max = t.path_edges(a, b).iter().map(|&e| t.edges[e].weight_sq.clone()).max().unwrap();
                let mut best = w[a][b].clone();
                let others: Vec<usize> = (0..4).filter(|&v| v != a && v != b).collect();
                for &m in &others {
                    best = best.min(w[a][m].clone().max(w[m][b].clone()));
                    for &m2 in &others {
                        if m2 != m {
                            best = best.min(w[a][m].clone().max(w[m][m2].clone()).max(w[m2][b].clone()));
                        }
                    }
                }
                assert_eq!(tree_max, best, "pair ({a}, {b})");
            }
        }
        assert!(t.verified());
    }
}
