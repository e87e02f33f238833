//! C-normal form certificates, the shrunken progression `Q` and the square-root check.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::enumerate::enumerate_p;
use super::{enumerate_hp, CosetNilprogression, Progression};
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::rational::{floor_budget, rat, Rational};
use crate::{ElementMap, ElementSet};

/// One commutator containment `[u_i^{s_i}, u_j^{s_j}] in P(u_{j+1}, ...; lengths)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangularWitness {
    /// 0-based generator indices, `i < j`.
    pub i: usize,
    pub j: usize,
    pub inverse_i: bool,
    pub inverse_j: bool,
    pub commutator: GroupElement,
    /// Lengths of the tail progression on `u_{j+1}, ..., u_r`.
    pub tail_lengths: Vec<Rational>,
    pub contained: bool,
}

/// Two distinct exponent vectors in the box with the same product.
pub type Collision = (Vec<i64>, Vec<i64>, GroupElement);

#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormCert {
    pub c: Rational,
    pub upper_triangular: bool,
    pub local_properness: bool,
    pub volume: bool,
    /// Every commutator checked, passing or not.
    pub triangular: Vec<TriangularWitness>,
    /// Two exponent vectors within `N_i / C` giving the same element.
    pub collision: Option<Collision>,
    pub p_size: usize,
    /// `prod (2 floor(N_i) + 1)`.
    pub box_volume: BigUint,
}

impl NormalFormCert {
    pub fn is_valid(&self) -> bool {
        self.upper_triangular && self.local_properness && self.volume
    }

    pub fn triangular_failures(&self) -> impl Iterator<Item = &TriangularWitness> {
        self.triangular.iter().filter(|w| !w.contained)
    }
}

fn sign_pow(ctx: &crate::group::GroupContext, g: &GroupElement, inverse: bool) -> GroupElement {
    if inverse {
        ctx.inv(g)
    } else {
        g.clone()
    }
}

/// Checks the upper-triangular axiom with tail lengths `scale * L_k / (L_i L_j)`.
fn triangular(p: &Progression, lengths: &[Rational], scale: &Rational, cap: usize) -> Result<Vec<TriangularWitness>> {
    let ctx = p.ctx();
    let gens = p.generators();
    let r = p.rank();
    let mut out = Vec::new();
    for i in 0..r {
        for j in (i + 1)..r {
            let tail_lengths: Vec<Rational> =
                ((j + 1)..r).map(|k| scale * &lengths[k] / (&lengths[i] * &lengths[j])).collect();
            let tail_set = if j + 1 < r {
                let tail = Progression::new(ctx, gens[j + 1..].to_vec(), tail_lengths.clone())?;
                enumerate_p(&tail, &Rational::one(), cap)?
            } else {
                let mut s = ElementSet::default();
                s.insert(ctx.identity());
                s
            };
            for inverse_i in [false, true] {
                for inverse_j in [false, true] {
                    let commutator =
                        ctx.commutator(&sign_pow(ctx, &gens[i], inverse_i), &sign_pow(ctx, &gens[j], inverse_j));
                    let contained = tail_set.contains(&commutator);
                    out.push(TriangularWitness {
                        i,
                        j,
                        inverse_i,
                        inverse_j,
                        commutator,
                        tail_lengths: tail_lengths.clone(),
                        contained,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// First pair of distinct exponent vectors with `|n_i| <= bounds[i]` and equal products.
fn distinctness(p: &Progression, bounds: &[u64], cap: usize) -> Result<Option<Collision>> {
    let ctx = p.ctx();
    let total =
        bounds.iter().try_fold(1usize, |acc, &b| usize::try_from(2 * b + 1).ok().and_then(|s| acc.checked_mul(s)));
    match total {
        Some(t) if t <= cap => {}
        _ => return Err(Error::resource("distinctness check", cap, total.unwrap_or(usize::MAX))),
    }
    let powers: Vec<Vec<GroupElement>> = p
        .generators()
        .iter()
        .zip(bounds)
        .map(|(g, &b)| (-(b as i64)..=b as i64).map(|e| ctx.pow(g, e)).collect())
        .collect();
    let mut seen: ElementMap<Vec<i64>> = ElementMap::default();
    let mut idx = vec![0usize; bounds.len()];
    loop {
        let exps: Vec<i64> = idx.iter().zip(bounds).map(|(&k, &b)| k as i64 - b as i64).collect();
        let x = idx.iter().enumerate().fold(ctx.identity(), |acc, (i, &k)| ctx.mul(&acc, &powers[i][k]));
        if let Some(prev) = seen.get(&x) {
            return Ok(Some((prev.clone(), exps, x)));
        }
        seen.insert(x, exps);
        // odometer
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return Ok(None);
            }
            idx[pos] += 1;
            if idx[pos] < powers[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn box_volume(lengths: &[Rational]) -> BigUint {
    lengths.iter().map(|n| BigUint::from(2 * floor_budget(n) + 1)).product()
}

/// Checks the three C-normal form axioms of `p` exactly.
pub fn verify_c_normal_form(p: &Progression, c: &Rational, cap: usize) -> Result<NormalFormCert> {
    if c < &Rational::one() {
        return Err(Error::domain("normal-form constant must be at least 1"));
    }
    let tri = triangular(p, p.lengths(), c, cap)?;
    let bounds: Vec<u64> = p.lengths().iter().map(|n| floor_budget(&(n / c))).collect();
    let collision = distinctness(p, &bounds, cap)?;
    let p_size = enumerate_p(p, &Rational::one(), cap)?.len();
    let vol = box_volume(p.lengths());
    let size = Rational::from_integer(p_size.into());
    let v = Rational::from_integer(vol.clone().into());
    let volume = &v / c <= size && size <= c * &v;
    Ok(NormalFormCert {
        c: c.clone(),
        upper_triangular: tri.iter().all(|w| w.contained),
        local_properness: collision.is_none(),
        volume,
        triangular: tri,
        collision,
        p_size,
        box_volume: vol,
    })
}

#[derive(Clone, Debug)]
pub struct ShrinkReport {
    /// `HQ` with `Q = P_{1/(C D^2)}`.
    pub q: CosetNilprogression,
    /// Commutator containments in `P(u_{j+1}, ...; M_k / (D^2 M_i M_j))`.
    pub triangular: Vec<TriangularWitness>,
    pub triangular_ok: bool,
    /// Collision among `u_1^{k_1} ... u_r^{k_r}` with `|k_i| <= D M_i`.
    pub collision: Option<Collision>,
    pub hp_size: usize,
    pub hq_size: usize,
    /// `|HP| / |HQ|`.
    pub ratio: Rational,
    pub ratio_bound: Rational,
    pub comparable: bool,
}

impl ShrinkReport {
    pub fn all_hold(&self) -> bool {
        self.triangular_ok && self.collision.is_none() && self.comparable
    }
}

/// Default comparability constant `C^2 (3 C D^2)^r`.
pub fn default_comparability(c: &Rational, d: &Rational, r: usize) -> Rational {
    let base = rat(3, 1) * c * d * d;
    let mut k = c * c;
    for _ in 0..r {
        k *= &base;
    }
    k
}

/// Builds `Q = P_{1/(C D^2)}` and re-checks the shrunken triangular
/// containment, properness up to `D M_i`, and `|HQ| <= |HP| <= K |HQ|`.
pub fn shrink(
    hp: &CosetNilprogression,
    c: &Rational,
    d: &Rational,
    comparability: Option<Rational>,
    cap: usize,
) -> Result<ShrinkReport> {
    if c < &Rational::one() || d < &Rational::one() {
        return Err(Error::domain("shrink needs C >= 1 and D >= 1"));
    }
    let factor = Rational::one() / (c * d * d);
    let q = hp.dilate(&factor)?;
    let qp = q.progression();
    let m = qp.lengths().to_vec();
    let tri = triangular(qp, &m, &(Rational::one() / (d * d)), cap)?;
    let bounds: Vec<u64> = m.iter().map(|mi| floor_budget(&(d * mi))).collect();
    let collision = distinctness(qp, &bounds, cap)?;
    let hp_size = enumerate_hp(hp, &Rational::one(), cap)?.len();
    let hq_size = enumerate_hp(&q, &Rational::one(), cap)?.len();
    let ratio = Rational::new(hp_size.into(), hq_size.into());
    let ratio_bound = comparability.unwrap_or_else(|| default_comparability(c, d, qp.rank()));
    let comparable = hq_size <= hp_size && ratio <= ratio_bound;
    Ok(ShrinkReport {
        triangular_ok: tri.iter().all(|w| w.contained),
        q,
        triangular: tri,
        collision,
        hp_size,
        hq_size,
        ratio,
        ratio_bound,
        comparable,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SquareRootReport {
    /// `(1 + 1/D) / 2`.
    pub lambda: Rational,
    pub exhaustive: bool,
    /// Elements `x` of `HQ` examined.
    pub checked: usize,
    /// Those with `x^2` in `HQ` as well.
    pub hypotheses_met: usize,
    pub violations: Vec<GroupElement>,
}

impl SquareRootReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// For `x` with `x, x^2 in HQ`, checks `x in HQ_lambda` with `lambda = (1 + 1/D)/2`.
/// Exhaustive when `|HQ| <= max_checks`, otherwise `max_checks` seeded draws.
pub fn square_root_check(
    hq: &CosetNilprogression,
    d: &Rational,
    max_checks: usize,
    seed: u64,
    cap: usize,
) -> Result<SquareRootReport> {
    if d <= &Rational::zero() {
        return Err(Error::domain("D must be positive"));
    }
    let ctx = hq.ctx();
    let lambda = (Rational::one() + Rational::one() / d) / rat(2, 1);
    let full = enumerate_hp(hq, &Rational::one(), cap)?;
    let half = enumerate_hp(hq, &lambda, cap)?;
    let mut elems: Vec<GroupElement> = full.iter().cloned().collect();
    elems.sort();
    let exhaustive = elems.len() <= max_checks;
    let sample: Vec<&GroupElement> = if exhaustive {
        elems.iter().collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..max_checks).map(|_| &elems[rng.random_range(0..elems.len())]).collect()
    };
    let mut met = 0;
    let mut violations = Vec::new();
    for x in &sample {
        if full.contains(&ctx.mul(x, x)) {
            met += 1;
            if !half.contains(*x) {
                violations.push((*x).clone());
            }
        }
    }
    violations.sort();
    violations.dedup();
    Ok(SquareRootReport { lambda, exhaustive, checked: sample.len(), hypotheses_met: met, violations })
}
