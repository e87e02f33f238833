//! End-to-end structure detection on a walk.
//!
//! The existence step of the inverse theorem is not effective, so candidate
//! coset nilprogressions come from a finite catalog. Each candidate is scored
//! against the density contract (heavy translates of `mu` and `nu`, size at
//! most `kappa / ||mu||_2^2`); the survivors go through the translate
//! collections, the coset tree and the `(HP, X)`-norms of all step pairs. The
//! report certifies the best candidate found and never claims that no better
//! structure exists.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use super::energy::{mult_energy, truncate_measure, TruncationParams};
use super::translates::{nested_collections, stabilization_level, Stabilization};
use super::tree::{build_coset_tree, representative_set, CosetTree};
use crate::error::{Error, Result};
use crate::group::closure;
use crate::group::{GroupContext, GroupElement};
use crate::measure::{typical_pairs, Measure, StepOrder, WalkSpec};
use crate::nilprog::{enumerate_hp, CosetNilprogression, NormOracle, Progression};
use crate::rational::{int, neg_pow_lower, rat, Rational};
use crate::segments::{find_flat_segment, SegmentParams, SegmentReport};
use crate::{ElementMap, ElementSet};

/// A named catalog entry.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub label: String,
    pub hp: CosetNilprogression,
}

impl Candidate {
    pub fn new(label: impl Into<String>, hp: CosetNilprogression) -> Self {
        Candidate { label: label.into(), hp }
    }
}

#[derive(Clone, Debug)]
pub struct DetectParams {
    pub segment: SegmentParams,
    /// Size contract `|HP| <= kappa / ||mu||_2^2`.
    pub kappa: Rational,
    /// Lower bound on `mu(x0 HP)` and `nu(HP y0)`.
    pub min_mass: Rational,
    /// Energy pre-filter `E(B1, B2) >= theta |B1|^3`.
    pub energy_theta: Rational,
    pub delta0: Rational,
    pub c0: u64,
    pub lmax: usize,
    pub lambda_max: Rational,
    /// Number of passing candidates taken through the full pipeline.
    pub max_full: usize,
    /// Cap on the candidate pool for translate collections.
    pub pool_cap: usize,
    pub cap: usize,
}

impl DetectParams {
    pub fn new(segment: SegmentParams) -> Self {
        let cap = segment.cap;
        DetectParams {
            segment,
            kappa: int(8),
            min_mass: rat(1, 8),
            energy_theta: rat(1, 64),
            delta0: rat(1, 2),
            c0: 2,
            lmax: 6,
            lambda_max: int(4),
            max_full: 8,
            pool_cap: 20_000,
            cap,
        }
    }
}

/// Score of one catalog entry.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateScore {
    pub label: String,
    pub hp_size: usize,
    /// Best translate `x0` and `mu(x0 HP)`.
    pub x0: GroupElement,
    pub mass_mu: Rational,
    /// Best translate `y0` and `nu(HP y0)`.
    pub y0: GroupElement,
    pub mass_nu: Rational,
    pub size_ok: bool,
    pub passes: bool,
    /// Set when the candidate could not be enumerated within the cap.
    pub skipped: Option<String>,
}

/// `E(B1, B2)` on the supports of the middle parts of `mu` and `nu`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyCheck {
    pub b1: usize,
    pub b2: usize,
    pub energy: u128,
    pub theta: Rational,
    pub passes: bool,
}

/// `(HP, X)`-norm of `a a'^-1` for `a, a'` in the support of step `i = j0 - m`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairRecord {
    pub step: usize,
    pub m: usize,
    pub a: GroupElement,
    pub a_prime: GroupElement,
    pub g: GroupElement,
    /// `None` when the norm exceeds `lambda_max`.
    pub lambda: Option<Rational>,
    pub sigma: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtypicalMass {
    pub m: usize,
    pub mass: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructureReport {
    pub segment: SegmentReport,
    pub energy: EnergyCheck,
    pub scores: Vec<CandidateScore>,
    pub label: String,
    pub hp: CosetNilprogression,
    pub hp_size: usize,
    /// Elements `k` the translate collections were drawn from.
    pub pool_size: usize,
    pub pool_description: String,
    pub stabilized: bool,
    pub level: usize,
    pub level_sizes: Vec<usize>,
    pub tree: CosetTree,
    pub xs: Vec<GroupElement>,
    /// Whether the pairwise coset disjointness of `X` was decided exactly.
    pub xs_disjoint_exact: bool,
    pub records: Vec<PairRecord>,
    pub max_lambda: Option<Rational>,
    pub rho: Rational,
    pub hp_rho: Rational,
    /// `d_mu` threshold squared for typical pairs, `n^(-eps (1 - eps))` from below.
    pub typical_threshold_sq: Rational,
    pub atypical: Vec<AtypicalMass>,
}

fn label_of(g: &GroupElement) -> String {
    format!("{g}")
}

fn push_candidate(
    out: &mut Vec<Candidate>,
    seen: &mut BTreeSet<String>,
    label: String,
    hp: Result<CosetNilprogression>,
) {
    if let Ok(hp) = hp {
        if seen.insert(label.clone()) {
            out.push(Candidate { label, hp });
        }
    }
}

/// Candidates built from the walk: progressions on support elements,
/// finite cyclic subgroups and pair closures, and coordinate boxes.
pub fn default_catalog(walk: &WalkSpec) -> Vec<Candidate> {
    const MAX_SUPPORT: usize = 32;
    const SMALL_SUBGROUP: usize = 512;
    let ctx = walk.ctx().clone();
    let id = ctx.identity();
    let support: Vec<GroupElement> = walk
        .steps()
        .iter()
        .flat_map(|s| s.sorted_support())
        .filter(|g| *g != id)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .take(MAX_SUPPORT)
        .collect();
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let trivial_p = || Progression::new(&ctx, vec![ctx.identity()], vec![int(1)]);

    for s in &support {
        for n in [1, 2, 4, 8, 16] {
            let p = Progression::new(&ctx, vec![s.clone()], vec![int(n)]).map(CosetNilprogression::trivial_h);
            push_candidate(&mut out, &mut seen, format!("P({};{n})", label_of(s)), p);
        }
        if let Some(h) = closure(&ctx, core::slice::from_ref(s), SMALL_SUBGROUP) {
            let mut h: Vec<GroupElement> = h.into_iter().collect();
            h.sort();
            let hp = trivial_p().and_then(|p| CosetNilprogression::new(p, h));
            push_candidate(&mut out, &mut seen, format!("<{}>", label_of(s)), hp);
        }
    }
    for (i, s) in support.iter().enumerate() {
        for t in &support[i + 1..] {
            if let Some(h) = closure(&ctx, &[s.clone(), t.clone()], SMALL_SUBGROUP) {
                let mut h: Vec<GroupElement> = h.into_iter().collect();
                h.sort();
                let hp = trivial_p().and_then(|p| CosetNilprogression::new(p, h));
                push_candidate(&mut out, &mut seen, format!("<{}, {}>", label_of(s), label_of(t)), hp);
            }
        }
    }
    if support.len() <= 4 && !support.is_empty() {
        let names: Vec<String> = support.iter().map(label_of).collect();
        for n in [1, 2, 4] {
            let p = Progression::new(&ctx, support.clone(), vec![int(n); support.len()])
                .map(CosetNilprogression::trivial_h);
            push_candidate(&mut out, &mut seen, format!("P({};{n})", names.join(", ")), p);
        }
    }
    match &ctx {
        GroupContext::Heisenberg => {
            let e = |a, b, c| GroupElement::Heisenberg([a, b, c]);
            for n in 1..=6i64 {
                for s in [1, 2] {
                    let p = Progression::new(
                        &ctx,
                        vec![e(1, 0, 0), e(0, 1, 0), e(0, 0, 1)],
                        vec![int(n), int(n), int(s * n * n)],
                    )
                    .map(CosetNilprogression::trivial_h);
                    push_candidate(&mut out, &mut seen, format!("Heisenberg box ({n}, {n}, {})", s * n * n), p);
                }
            }
        }
        GroupContext::Lattice { dim } => {
            let basis: Vec<GroupElement> =
                (0..*dim).map(|i| GroupElement::Vector((0..*dim).map(|j| i64::from(i == j)).collect())).collect();
            for n in [1, 2, 4, 8, 16] {
                let p = Progression::new(&ctx, basis.clone(), vec![int(n); *dim]).map(CosetNilprogression::trivial_h);
                push_candidate(&mut out, &mut seen, format!("box {n}^{dim}"), p);
            }
        }
        GroupContext::Cyclic { modulus } => {
            let mut n = 1i64;
            while 2 * (n as u64) < *modulus {
                let p = Progression::new(&ctx, vec![GroupElement::Residue(1)], vec![int(n)])
                    .map(CosetNilprogression::trivial_h);
                push_candidate(&mut out, &mut seen, format!("interval {n}"), p);
                n *= 2;
            }
        }
        _ => {}
    }
    out
}

/// `max_x mu(x HP)` by accumulating `mu(s)` onto every `x = s h^-1`.
fn best_left_translate(mu: &Measure, hp: &[GroupElement]) -> (GroupElement, Rational) {
    best_translate(mu, hp, true)
}

/// `max_y nu(HP y)` over `y = h^-1 s`.
fn best_right_translate(nu: &Measure, hp: &[GroupElement]) -> (GroupElement, Rational) {
    best_translate(nu, hp, false)
}

fn best_translate(mu: &Measure, hp: &[GroupElement], left: bool) -> (GroupElement, Rational) {
    let ctx = mu.ctx();
    let inv: Vec<GroupElement> = hp.iter().map(|h| ctx.inv(h)).collect();
    let mut acc: ElementMap<Rational> = ElementMap::default();
    for (s, w) in mu.atoms() {
        for hi in &inv {
            let x = if left { ctx.mul(&s, hi) } else { ctx.mul(hi, &s) };
            *acc.entry(x).or_insert_with(Rational::zero) += &w;
        }
    }
    let mut best: Option<(GroupElement, Rational)> = None;
    for (x, m) in acc {
        let better = match &best {
            None => true,
            Some((bx, bm)) => m > *bm || (m == *bm && x < *bx),
        };
        if better {
            best = Some((x, m));
        }
    }
    best.unwrap_or((ctx.identity(), Rational::zero()))
}

fn score(c: &Candidate, mu: &Measure, nu: &Measure, size_bound: &Rational, params: &DetectParams) -> CandidateScore {
    let id = mu.ctx().identity();
    let set = match enumerate_hp(&c.hp, &Rational::one(), params.cap) {
        Ok(s) => s,
        Err(e) => {
            return CandidateScore {
                label: c.label.clone(),
                hp_size: 0,
                x0: id.clone(),
                mass_mu: Rational::zero(),
                y0: id,
                mass_nu: Rational::zero(),
                size_ok: false,
                passes: false,
                skipped: Some(format!("{e}")),
            }
        }
    };
    let elems: Vec<GroupElement> = set.into_iter().collect();
    let hp_size = elems.len();
    let size_ok = int(hp_size as i64) <= *size_bound;
    if !size_ok {
        // The contract already fails; the translate scan is skipped.
        return CandidateScore {
            label: c.label.clone(),
            hp_size,
            x0: id.clone(),
            mass_mu: Rational::zero(),
            y0: id,
            mass_nu: Rational::zero(),
            size_ok,
            passes: false,
            skipped: None,
        };
    }
    let (x0, mass_mu) = best_left_translate(mu, &elems);
    let (y0, mass_nu) = best_right_translate(nu, &elems);
    let passes = size_ok && mass_mu >= params.min_mass && mass_nu >= params.min_mass;
    CandidateScore { label: c.label.clone(), hp_size, x0, mass_mu, y0, mass_nu, size_ok, passes, skipped: None }
}

fn score_all(
    catalog: &[Candidate],
    mu: &Measure,
    nu: &Measure,
    size_bound: &Rational,
    params: &DetectParams,
) -> Vec<CandidateScore> {
    #[cfg(feature = "rayon")]
    {
        use rayon::prelude::*;
        catalog.par_iter().map(|c| score(c, mu, nu, size_bound, params)).collect()
    }
    #[cfg(not(feature = "rayon"))]
    {
        catalog.iter().map(|c| score(c, mu, nu, size_bound, params)).collect()
    }
}

/// `supp(eta_m) supp(eta_m)^-1` for `m <= m_bound`, pair quotients of the
/// steps, the generators and the best translates.
fn candidate_pool(
    walk: &WalkSpec,
    report: &SegmentReport,
    extra: &[GroupElement],
    pool_cap: usize,
    cap: usize,
) -> Result<Vec<GroupElement>> {
    let ctx = walk.ctx();
    let mut pool = ElementSet::default();
    let push = |g: GroupElement, pool: &mut ElementSet| -> Result<()> {
        pool.insert(g);
        if pool.len() > pool_cap {
            return Err(Error::resource("translate candidate pool", pool_cap, pool.len()));
        }
        Ok(())
    };
    for m in 1..=report.m_bound.min(report.j0 - 1) {
        let eta = walk.window(report.j0 - m, report.j0 - 1, StepOrder::LaterLeft, cap)?;
        let supp = eta.sorted_support();
        let inv: Vec<GroupElement> = supp.iter().map(|g| ctx.inv(g)).collect();
        for h in &supp {
            for gi in &inv {
                push(ctx.mul(h, gi), &mut pool)?;
            }
        }
        let a = walk.step(report.j0 - m).sorted_support();
        for x in &a {
            for y in &a {
                push(ctx.mul(x, &ctx.inv(y)), &mut pool)?;
            }
        }
    }
    for g in extra {
        push(g.clone(), &mut pool)?;
        push(ctx.inv(g), &mut pool)?;
    }
    Ok(pool.into_iter().collect::<BTreeSet<_>>().into_iter().collect())
}

struct Evaluated {
    label: String,
    hp: CosetNilprogression,
    hp_size: usize,
    pool_size: usize,
    stabilized: bool,
    level: usize,
    level_sizes: Vec<usize>,
    tree: CosetTree,
    xs: Vec<GroupElement>,
    xs_exact: bool,
    records: Vec<PairRecord>,
    max_lambda: Option<Rational>,
}

fn pair_records(
    walk: &WalkSpec,
    report: &SegmentReport,
    hp: &CosetNilprogression,
    xs: &[GroupElement],
    params: &DetectParams,
) -> Result<Vec<PairRecord>> {
    let ctx = walk.ctx();
    let mut oracle = NormOracle::new(hp, params.lambda_max.clone(), params.cap);
    let mut out = Vec::new();
    for m in 1..=report.m_bound.min(report.j0 - 1) {
        let i = report.j0 - m;
        let a = walk.step(i).sorted_support();
        for x in &a {
            for y in &a {
                if x == y {
                    continue;
                }
                let g = ctx.mul(x, &ctx.inv(y));
                let (lambda, sigma) = match oracle.x_norm(&g, xs) {
                    Ok(r) => (Some(r.lambda), r.sigma),
                    Err(Error::ExceedsLambdaMax(_)) => (None, Vec::new()),
                    Err(e) => return Err(e),
                };
                out.push(PairRecord { step: i, m, a: x.clone(), a_prime: y.clone(), g, lambda, sigma });
            }
        }
    }
    Ok(out)
}

fn max_lambda(records: &[PairRecord]) -> Option<Rational> {
    let mut best = Rational::zero();
    for r in records {
        match &r.lambda {
            Some(l) if *l > best => best = l.clone(),
            Some(_) => {}
            None => return None,
        }
    }
    Some(best)
}

fn evaluate(
    walk: &WalkSpec,
    report: &SegmentReport,
    mu: &Measure,
    c: &Candidate,
    s: &CandidateScore,
    params: &DetectParams,
) -> Result<Evaluated> {
    let mut extra = c.hp.progression().generators().to_vec();
    extra.push(s.x0.clone());
    extra.push(s.y0.clone());
    let pool = candidate_pool(walk, report, &extra, params.pool_cap, params.cap)?;
    let collections = nested_collections(mu, &c.hp, &params.delta0, params.c0, params.lmax + 2, &pool, params.cap)?;
    // Without stabilization the deepest requested level is used and flagged.
    let (level, stabilized) = match stabilization_level(&collections, params.lmax) {
        Some(l) => (l, true),
        None => (params.lmax.max(1).min(collections.len() - 1), false),
    };
    let stab = Stabilization { level, collections };
    let reps = stab.collection().representatives.clone();
    let tree = build_coset_tree(&reps, &c.hp, mu, &pool, params.cap)?;
    let (xs, xs_exact) = representative_set(&tree, &c.hp)?;
    let records = pair_records(walk, report, &c.hp, &xs, params)?;
    let max_lambda = max_lambda(&records);
    Ok(Evaluated {
        label: c.label.clone(),
        hp: c.hp.clone(),
        hp_size: s.hp_size,
        pool_size: pool.len(),
        stabilized,
        level: stab.level,
        level_sizes: stab.level_sizes(),
        tree,
        xs,
        xs_exact,
        records,
        max_lambda,
    })
}

/// Runs the pipeline on `walk` with the given catalog.
pub fn detect_structure(walk: &WalkSpec, catalog: &[Candidate], params: &DetectParams) -> Result<StructureReport> {
    if catalog.is_empty() {
        return Err(Error::domain("the catalog is empty"));
    }
    let seg = find_flat_segment(walk, &params.segment)?;
    let mu = walk.window(seg.j0, seg.j0 + seg.l0_star, StepOrder::LaterLeft, params.cap)?;
    let nu = walk.window(seg.j0 - seg.l0_star, seg.j0 - 1, StepOrder::LaterLeft, params.cap)?;

    let tp = TruncationParams::from_flatness(&seg.c)?;
    let b1 = truncate_measure(&mu, &tp).middle.support();
    let b2 = truncate_measure(&nu, &tp).middle.support();
    let energy = mult_energy(walk.ctx(), &b1, &b2, params.cap)?;
    let cube = int(b1.len() as i64).pow(3);
    let energy_check = EnergyCheck {
        b1: b1.len(),
        b2: b2.len(),
        energy,
        theta: params.energy_theta.clone(),
        passes: !b1.is_empty() && Rational::from_integer(energy.into()) >= &params.energy_theta * cube,
    };
    if !energy_check.passes {
        return Err(Error::NoStructure(format!(
            "energy pre-filter failed: E = {} < {} |B1|^3 with |B1| = {}",
            energy_check.energy, energy_check.theta, energy_check.b1
        )));
    }

    let size_bound = &params.kappa / mu.l2sq();
    let scores = score_all(catalog, &mu, &nu, &size_bound, params);
    let mut passing: Vec<usize> = (0..catalog.len()).filter(|&k| scores[k].passes).collect();
    if passing.is_empty() {
        return Err(Error::NoStructure(format!(
            "none of {} catalog candidates meets the mass and size contract",
            catalog.len()
        )));
    }
    passing.sort_by(|&a, &b| {
        let ma = (&scores[a].mass_mu).min(&scores[a].mass_nu);
        let mb = (&scores[b].mass_mu).min(&scores[b].mass_nu);
        mb.cmp(ma).then(scores[a].hp_size.cmp(&scores[b].hp_size)).then(a.cmp(&b))
    });
    passing.truncate(params.max_full.max(1));

    let mut best: Option<Evaluated> = None;
    let mut last_err = None;
    for &k in &passing {
        match evaluate(walk, &seg, &mu, &catalog[k], &scores[k], params) {
            Ok(ev) => {
                let better = match &best {
                    None => true,
                    Some(b) => rank(&ev) < rank(b),
                };
                if better {
                    best = Some(ev);
                }
            }
            Err(e @ Error::Resource { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    let Some(ev) = best else {
        return Err(last_err.unwrap_or_else(|| Error::NoStructure(String::from("no candidate could be evaluated"))));
    };

    let rho = walk.rho_exact(None, StepOrder::LaterLeft, params.cap)?.rho;
    let hp_rho = int(ev.hp_size as i64) * &rho;
    let e = &seg.eps;
    let typical_threshold_sq = neg_pow_lower(seg.n as u64, &(e * (Rational::one() - e)), 12);
    let mut atypical = Vec::new();
    for m in 1..=seg.m_bound.min(seg.j0 - 1) {
        let eta = walk.window(seg.j0 - m, seg.j0 - 1, StepOrder::LaterLeft, params.cap)?;
        atypical.push(AtypicalMass { m, mass: typical_pairs(&mu, &eta, &typical_threshold_sq).atypical_mass });
    }
    Ok(StructureReport {
        segment: seg,
        energy: energy_check,
        scores,
        label: ev.label,
        hp: ev.hp,
        hp_size: ev.hp_size,
        pool_size: ev.pool_size,
        pool_description: String::from(
            "supp(eta_m) supp(eta_m)^-1 for m <= m_bound, a a'^-1 for step supports, generators and best translates",
        ),
        stabilized: ev.stabilized,
        level: ev.level,
        level_sizes: ev.level_sizes,
        tree: ev.tree,
        xs: ev.xs,
        xs_disjoint_exact: ev.xs_exact,
        records: ev.records,
        max_lambda: ev.max_lambda,
        rho,
        hp_rho,
        typical_threshold_sq,
        atypical,
    })
}

/// Orders evaluated candidates: finite max norm first, then smaller norm, then smaller `|HP|`.
fn rank(e: &Evaluated) -> (bool, Option<Rational>, usize, String) {
    (e.max_lambda.is_none(), e.max_lambda.clone(), e.hp_size, e.label.clone())
}

/// Outcome of [`verify_conclusion`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConclusionCheck {
    pub ok: bool,
    pub records_checked: usize,
    /// Records with `lambda < 1 / max N_i` whose order bound was verified.
    pub order_bounds_checked: usize,
    pub counterexample: Option<String>,
}

fn sigma_order(sigma: &[usize]) -> u64 {
    let n = sigma.len();
    let mut seen = vec![false; n];
    let mut order = 1u64;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut len = 0u64;
        let mut v = s;
        while !seen[v] {
            seen[v] = true;
            v = sigma[v];
            len += 1;
        }
        order = num_integer::lcm(order, len);
    }
    order
}

/// Re-checks every record of `report` against the walk by enumeration:
/// `x^-1 g sigma(x)` lies in `HP_lambda` for every `x in X`, and when
/// `lambda < 1 / max N_i`, `g^d` lies in `x H x^-1` for `d` the order of
/// `sigma`, so that the order of `g` is at most `d |H|`.
pub fn verify_conclusion(report: &StructureReport, walk: &WalkSpec) -> Result<ConclusionCheck> {
    let ctx = walk.ctx();
    let hp = &report.hp;
    let xs = &report.xs;
    let mut dilates: BTreeMap<Rational, ElementSet> = BTreeMap::new();
    let h: ElementSet = hp.h().iter().cloned().collect();
    let small = Rational::one() / hp.progression().max_length();
    let mut order_checked = 0;
    let fail = |msg: String, n: usize, o: usize| ConclusionCheck {
        ok: false,
        records_checked: n,
        order_bounds_checked: o,
        counterexample: Some(msg),
    };
    for (n, r) in report.records.iter().enumerate() {
        let Some(lambda) = &r.lambda else {
            return Ok(fail(
                format!("pair ({}, {}) at step {} has no norm within lambda_max", r.a, r.a_prime, r.step),
                n,
                order_checked,
            ));
        };
        if r.step == 0 || r.step > walk.len() {
            return Ok(fail(format!("step {} is outside the walk", r.step), n, order_checked));
        }
        let step = walk.step(r.step);
        if !step.contains(&r.a) || !step.contains(&r.a_prime) || r.g != ctx.mul(&r.a, &ctx.inv(&r.a_prime)) {
            return Ok(fail(format!("record at step {} does not match the walk", r.step), n, order_checked));
        }
        let mut perm = r.sigma.clone();
        perm.sort_unstable();
        if r.sigma.len() != xs.len() || perm.iter().enumerate().any(|(i, &s)| i != s) {
            return Ok(fail(format!("sigma {:?} is not a permutation of X", r.sigma), n, order_checked));
        }
        if !dilates.contains_key(lambda) {
            dilates.insert(lambda.clone(), enumerate_hp(hp, lambda, usize::MAX)?);
        }
        let set = &dilates[lambda];
        for (j, x) in xs.iter().enumerate() {
            let t = ctx.product(&[ctx.inv(x), r.g.clone(), xs[r.sigma[j]].clone()]);
            if !set.contains(&t) {
                return Ok(fail(
                    format!(
                        "g = {} with a = {}, a' = {}: x^-1 g sigma(x) = {} is not in HP_{}",
                        r.g, r.a, r.a_prime, t, lambda
                    ),
                    n,
                    order_checked,
                ));
            }
        }
        if *lambda < small {
            let d = sigma_order(&r.sigma);
            let gd = ctx.pow(&r.g, d as i64);
            for x in xs {
                let t = ctx.product(&[ctx.inv(x), gd.clone(), x.clone()]);
                if !h.contains(&t) {
                    return Ok(fail(format!("g^{d} = {gd} is not in x H x^-1 for x = {x}"), n, order_checked));
                }
            }
            let bound = d * h.len() as u64;
            if ctx.element_order(&r.g, bound).is_none() {
                return Ok(fail(format!("order of {} exceeds d |H| = {bound}", r.g), n, order_checked));
            }
            order_checked += 1;
        }
    }
    Ok(ConclusionCheck {
        ok: true,
        records_checked: report.records.len(),
        order_bounds_checked: order_checked,
        counterexample: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(x: u64) -> GroupElement {
        GroupElement::Residue(x)
    }

    /// Steps uniform on two elements of the subgroup {0, 4, 8} of Z/12.
    fn subgroup_walk(n: usize) -> WalkSpec {
        let ctx = GroupContext::cyclic(12).unwrap();
        let steps = (0..n)
            .map(|i| {
                let pair = if i % 2 == 0 { [res(0), res(4)] } else { [res(4), res(8)] };
                Measure::uniform(&ctx, &pair).unwrap()
            })
            .collect();
        WalkSpec::new(&ctx, steps, rat(1, 2)).unwrap()
    }

    fn subgroup_params() -> DetectParams {
        let mut seg = SegmentParams::new(rat(1, 2), rat(1, 2));
        seg.tau = Some(rat(1, 10));
        DetectParams::new(seg)
    }

    #[test]
    fn subgroup_walk_is_explained_by_the_subgroup() {
        let walk = subgroup_walk(32);
        let catalog = default_catalog(&walk);
        assert!(catalog.iter().any(|c| c.label == "<4>"));
        let r = detect_structure(&walk, &catalog, &subgroup_params()).unwrap();
        assert_eq!(r.max_lambda, Some(int(0)));
        assert_eq!(r.hp_size, 3);
        assert!(r.records.iter().all(|p| p.lambda == Some(int(0))));
        let check = verify_conclusion(&r, &walk).unwrap();
        assert!(check.ok, "{check:?}");
        assert_eq!(check.order_bounds_checked, r.records.len());
    }

    #[test]
    fn lowering_a_norm_is_caught() {
        let ctx = GroupContext::lattice(1).unwrap();
        let v = |x: i64| GroupElement::Vector(vec![x]);
        let steps = (0..32).map(|_| Measure::uniform(&ctx, &[v(0), v(1)]).unwrap()).collect();
        let walk = WalkSpec::new(&ctx, steps, rat(1, 2)).unwrap();
        let mut seg = SegmentParams::new(rat(1, 2), rat(1, 2));
        seg.tau = Some(rat(1, 10));
        let r = detect_structure(&walk, &default_catalog(&walk), &DetectParams::new(seg)).unwrap();
        assert!(verify_conclusion(&r, &walk).unwrap().ok);
        let mut tampered = r.clone();
        let k = tampered.records.iter().position(|p| p.lambda.as_ref().is_some_and(|l| !l.is_zero())).unwrap();
        tampered.records[k].lambda = Some(int(0));
        let check = verify_conclusion(&tampered, &walk).unwrap();
        assert!(!check.ok);
        assert!(check.counterexample.unwrap().contains("not in HP_0"));
    }

    #[test]
    fn trivial_structure_forces_equal_steps() {
        // H = {id}, P = P(id; 1), X = {id}, sigma = identity, lambda = 0:
        // the conclusion holds only for pairs with a = a'.
        let walk = subgroup_walk(32);
        let ctx = walk.ctx().clone();
        let hp = CosetNilprogression::trivial_h(Progression::new(&ctx, vec![ctx.identity()], vec![int(1)]).unwrap());
        let seg = find_flat_segment(&walk, &subgroup_params().segment).unwrap();
        let mut r = detect_structure(&walk, &default_catalog(&walk), &subgroup_params()).unwrap();
        r.hp = hp;
        r.xs = vec![ctx.identity()];
        r.segment = seg;
        for p in &mut r.records {
            p.sigma = vec![0];
            p.lambda = Some(int(0));
        }
        let check = verify_conclusion(&r, &walk).unwrap();
        assert_eq!(check.ok, r.records.is_empty());
    }

    #[test]
    fn sigma_order_is_the_cycle_lcm() {
        assert_eq!(sigma_order(&[1, 2, 0, 4, 3]), 6);
        assert_eq!(sigma_order(&[0]), 1);
    }

    #[test]
    fn deterministic() {
        let walk = subgroup_walk(32);
        let catalog = default_catalog(&walk);
        let a = detect_structure(&walk, &catalog, &subgroup_params()).unwrap();
        let b = detect_structure(&walk, &catalog, &subgroup_params()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_catalog_is_rejected() {
        assert!(detect_structure(&subgroup_walk(8), &[], &subgroup_params()).is_err());
    }
}
