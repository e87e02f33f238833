//! Forward concentration bounds checked against exact `rho`, and the two
//! sharpness constructions.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::group::{GroupContext, GroupElement};
use crate::measure::{cyclic_walk_distribution, integer_line_distribution, Measure, StepOrder, WalkSpec};
use crate::rational::{from_biguint_ratio, int, rat, to_f64, Rational};

/// `sqrt(24 / pi)`, the constant in the distinct-steps bound.
pub const SSZ_CONSTANT: f64 = 2.763_953_195_770_684;
/// The constant in the order-`s` matrix bound.
pub const MATRIX_CONSTANT: i64 = 141;

#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub name: String,
    pub n: usize,
    pub s: Option<u64>,
    pub rho: Rational,
    /// Exact value of the bound when it is rational.
    pub bound: Option<Rational>,
    pub bound_approx: f64,
    pub passes: bool,
    /// `bound / rho`.
    pub slack: f64,
    /// Set for asymptotic statements checked at a fixed `n`.
    pub caveat: Option<String>,
    /// Further reported quantities, not asserted.
    pub reported: Vec<(String, f64)>,
}

/// `C(n, floor(n/2)) / 2^n`.
pub fn elo_bound(n: usize) -> Rational {
    let k = n / 2;
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    from_biguint_ratio(&c, &(BigUint::one() << n))
}

/// The `a_i` of a walk whose steps are uniform on `{a_i, a_i^-1}`.
fn symmetric_pairs(walk: &WalkSpec) -> Result<Vec<GroupElement>> {
    let ctx = walk.ctx();
    let half = rat(1, 2);
    let mut out = Vec::with_capacity(walk.len());
    for (i, step) in walk.steps().iter().enumerate() {
        let atoms = step.atoms();
        let ok = match atoms.as_slice() {
            [(a, wa), (b, wb)] => *wa == half && *wb == half && ctx.inv(a) == *b,
            [(a, _)] => ctx.mul(a, a) == ctx.identity(),
            _ => false,
        };
        if !ok {
            return Err(Error::domain(format!("step {} is not uniform on a pair {{a, a^-1}}", i + 1)));
        }
        // The larger of the two in canonical order stands for the pair.
        out.push(atoms.last().expect("nonempty").0.clone());
    }
    Ok(out)
}

fn rho_of(walk: &WalkSpec, cap: usize) -> Result<Rational> {
    match walk.ctx() {
        GroupContext::Lattice { dim: 1 } => Ok(integer_line_distribution(walk)?.max().0),
        GroupContext::Cyclic { .. } => Ok(cyclic_walk_distribution(walk)?.max().0),
        _ => Ok(walk.rho_exact(None, StepOrder::LaterLeft, cap)?.rho),
    }
}

fn slack(bound: f64, rho: &Rational) -> f64 {
    bound / to_f64(rho)
}

/// `rho <= C(n, floor(n/2)) / 2^n` for nonzero `a_i` in `Z^d`.
pub fn check_elo(walk: &WalkSpec, cap: usize) -> Result<BoundCheck> {
    if !matches!(walk.ctx(), GroupContext::Lattice { .. }) {
        return Err(Error::domain("the Erdos bound is checked on lattice walks"));
    }
    let a = symmetric_pairs(walk)?;
    let id = walk.ctx().identity();
    if let Some(i) = a.iter().position(|x| *x == id) {
        return Err(Error::domain(format!("step {} has a_i = 0", i + 1)));
    }
    let rho = rho_of(walk, cap)?;
    let bound = elo_bound(walk.len());
    let approx = to_f64(&bound);
    Ok(BoundCheck {
        name: "elo".into(),
        n: walk.len(),
        s: None,
        passes: rho <= bound,
        slack: slack(approx, &rho),
        rho,
        bound: Some(bound),
        bound_approx: approx,
        caveat: None,
        reported: Vec::new(),
    })
}

/// `rho <= C n^(-3/2)` for distinct `a_i` on the integer line; exact via `rho^2 n^3 <= C^2`.
pub fn check_ssz(walk: &WalkSpec, c: &Rational) -> Result<BoundCheck> {
    if *walk.ctx() != (GroupContext::Lattice { dim: 1 }) {
        return Err(Error::domain("the distinct-steps bound is checked on lattice(1) walks"));
    }
    let a = symmetric_pairs(walk)?;
    let mut abs: Vec<(i64, usize)> = a
        .iter()
        .enumerate()
        .map(|(i, g)| match g {
            GroupElement::Vector(v) => (v[0].abs(), i + 1),
            _ => unreachable!("lattice element"),
        })
        .collect();
    abs.sort_unstable();
    if let Some(w) = abs.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::domain(format!("steps {} and {} share |a_i| = {}", w[0].1, w[1].1, w[0].0)));
    }
    if let Some((_, i)) = abs.first().filter(|x| x.0 == 0) {
        return Err(Error::domain(format!("step {i} has a_i = 0")));
    }
    let n = walk.len();
    let rho = integer_line_distribution(walk)?.max().0;
    let n3 = int(n as i64).pow(3);
    let passes = &rho * &rho * n3 <= c * c;
    let bound_approx = to_f64(c) * libm::pow(n as f64, -1.5);
    Ok(BoundCheck {
        name: "ssz".into(),
        n,
        s: None,
        passes,
        slack: slack(bound_approx, &rho),
        bound: None,
        bound_approx,
        caveat: Some("asymptotic claim, desk-scale check".into()),
        reported: vec![
            ("rho_n_3_2".into(), to_f64(&rho) * libm::pow(n as f64, 1.5)),
            ("ssz_constant".into(), SSZ_CONSTANT),
        ],
        rho,
    })
}

/// `rho <= 141 max(1/s, n^(-1/2))` when every `a_i` has order at least `s`.
///
/// The main-theorem forms `max(1/s, n^(-1/2 + delta))` and `n^(-1 + delta)` are reported for `delta`.
pub fn check_matrix_elo(walk: &WalkSpec, s: u64, delta: &Rational, cap: usize) -> Result<BoundCheck> {
    if s == 0 {
        return Err(Error::domain("s must be positive"));
    }
    let a = symmetric_pairs(walk)?;
    let ctx = walk.ctx();
    for (i, g) in a.iter().enumerate() {
        if let Some(k) = ctx.element_order(g, s.saturating_sub(1).max(1)) {
            if k < s {
                return Err(Error::domain(format!("step {}: a_i has order {k} < s = {s}", i + 1)));
            }
        }
    }
    let n = walk.len();
    let rho = rho_of(walk, cap)?;
    let k = int(MATRIX_CONSTANT);
    let by_s = &k / int(s as i64);
    // rho <= 141 / sqrt(n)  iff  rho^2 n <= 141^2
    let passes = rho <= by_s || &rho * &rho * int(n as i64) <= &k * &k;
    let inv_sqrt = 1.0 / libm::sqrt(n as f64);
    let bound_approx = MATRIX_CONSTANT as f64 * (1.0 / s as f64).max(inv_sqrt);
    let d = to_f64(delta);
    let nf = n as f64;
    Ok(BoundCheck {
        name: "matrix".into(),
        n,
        s: Some(s),
        passes,
        slack: slack(bound_approx, &rho),
        bound: if inv_sqrt <= 1.0 / s as f64 { Some(by_s) } else { None },
        bound_approx,
        caveat: None,
        reported: vec![
            ("main_order_bound".into(), (1.0 / s as f64).max(libm::pow(nf, -0.5 + d))),
            ("main_distinct_bound".into(), libm::pow(nf, -1.0 + d)),
        ],
        rho,
    })
}

/// Walks showing that the bounds are sharp or that a hypothesis is needed.
#[derive(Clone, Debug)]
pub struct SharpnessExamples {
    /// Steps uniform on `{0, 1}` in `Z/n`; `rho >= 1/n`.
    pub subgroup: WalkSpec,
    pub subgroup_rho: Rational,
    /// Point masses at distinct commuting diagonal involutions; `rho = 1`.
    pub involutions: WalkSpec,
    pub involutions_rho: Rational,
}

/// The `s`-cycle permutation matrix in `GL_s(Z)`.
pub fn cycle_matrix(s: usize) -> GroupElement {
    let mut m = vec![0i64; s * s];
    for i in 0..s {
        // column i maps to row i + 1
        m[((i + 1) % s) * s + i] = 1;
    }
    GroupElement::IntMatrix(m)
}

/// Steps uniform on `{a, a^-1}` with `a` the `s`-cycle permutation matrix.
pub fn cycle_matrix_walk(s: usize, n: usize) -> Result<WalkSpec> {
    let ctx = GroupContext::integer_matrix(s)?;
    let a = cycle_matrix(s);
    let step = Measure::uniform(&ctx, &[a.clone(), ctx.inv(&a)])?;
    WalkSpec::new(&ctx, vec![step; n], rat(1, 2))
}

pub fn sharpness_examples(n: usize) -> Result<SharpnessExamples> {
    if n < 4 {
        return Err(Error::domain("sharpness examples need n >= 4"));
    }
    let zn = GroupContext::cyclic(n as u64)?;
    let step = Measure::uniform(&zn, &[GroupElement::Residue(0), GroupElement::Residue(1)])?;
    let subgroup = WalkSpec::new(&zn, vec![step; n], rat(1, 2))?;
    let subgroup_rho = cyclic_walk_distribution(&subgroup)?.max().0;

    // n distinct non-identity sign patterns need dimension d with 2^d > n.
    let mut d = 1;
    while (1usize << d) <= n {
        d += 1;
    }
    let ctx = GroupContext::integer_matrix(d)?;
    let steps = (1..=n)
        .map(|k| {
            let mut m = vec![0i64; d * d];
            for i in 0..d {
                m[i * d + i] = if k >> i & 1 == 1 { -1 } else { 1 };
            }
            Measure::delta(&ctx, GroupElement::IntMatrix(m))
        })
        .collect::<Result<Vec<_>>>()?;
    let involutions = WalkSpec::new(&ctx, steps, Rational::zero())?;
    let involutions_rho = involutions.rho_exact(None, StepOrder::LaterLeft, crate::DEFAULT_CAP)?.rho;
    Ok(SharpnessExamples { subgroup, subgroup_rho, involutions, involutions_rho })
}
