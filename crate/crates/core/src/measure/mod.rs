//! Finitely supported probability measures with exact rational weights.

mod line;
mod sample;

use alloc::format;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use line::{cyclic_walk_distribution, integer_line_distribution, sign_walk, LineDistribution};
pub use sample::{monte_carlo_profile, rho_monte_carlo, MonteCarloEstimate};

use crate::error::{Error, Result};
use crate::group::{GroupContext, GroupElement};
use crate::rational::{from_biguint_ratio, gcd_all, to_f64, Rational};
use crate::ElementMap;

/// A probability measure: positive integer numerators over one common
/// denominator, kept in lowest terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Measure {
    ctx: GroupContext,
    atoms: ElementMap<BigUint>,
    den: BigUint,
}

/// `(||mu||_1, ||mu||_2^2, ||mu||_inf)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormTriple {
    pub l1: Rational,
    pub l2sq: Rational,
    pub linf: Rational,
}

impl Measure {
    /// Builds a measure from weighted atoms. Repeated atoms accumulate and
    /// zero weights are dropped; the total must be exactly 1.
    pub fn from_atoms(ctx: &GroupContext, atoms: impl IntoIterator<Item = (GroupElement, Rational)>) -> Result<Self> {
        let mut acc: ElementMap<Rational> = ElementMap::default();
        for (g, w) in atoms {
            ctx.validate(&g)?;
            if w.is_negative() {
                return Err(Error::domain(format!("negative weight {w} at {g}")));
            }
            *acc.entry(g).or_insert_with(Rational::zero) += w;
        }
        let total: Rational = acc.values().sum();
        if total != Rational::one() {
            return Err(Error::domain(format!("weights sum to {total}, not 1")));
        }
        let den = acc.values().fold(BigInt::one(), |d, w| d.lcm(w.denom())).to_biguint().expect("positive denominator");
        let den_i = BigInt::from(den.clone());
        let atoms = acc
            .into_iter()
            .filter(|(_, w)| !w.is_zero())
            .map(|(g, w)| {
                let n = w.numer() * (&den_i / w.denom());
                (g, n.to_biguint().expect("nonnegative weight"))
            })
            .collect();
        Ok(Measure { ctx: ctx.clone(), atoms, den }.reduced())
    }

    pub fn delta(ctx: &GroupContext, g: GroupElement) -> Result<Self> {
        Self::from_atoms(ctx, [(g, Rational::one())])
    }

    /// Uniform measure on a list of elements (repeats count with multiplicity).
    pub fn uniform(ctx: &GroupContext, elems: &[GroupElement]) -> Result<Self> {
        if elems.is_empty() {
            return Err(Error::domain("uniform measure on an empty set"));
        }
        let w = Rational::new(BigInt::one(), BigInt::from(elems.len()));
        Self::from_atoms(ctx, elems.iter().map(|g| (g.clone(), w.clone())))
    }

    pub(crate) fn from_raw(ctx: &GroupContext, atoms: ElementMap<BigUint>, den: BigUint) -> Self {
        Measure { ctx: ctx.clone(), atoms, den }.reduced()
    }

    fn reduced(mut self) -> Self {
        let g = gcd_all(self.atoms.values().chain(core::iter::once(&self.den)));
        if !g.is_one() && !g.is_zero() {
            for v in self.atoms.values_mut() {
                *v /= &g;
            }
            self.den /= &g;
        }
        self
    }

    pub fn ctx(&self) -> &GroupContext {
        &self.ctx
    }

    /// Number of atoms.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn denominator(&self) -> &BigUint {
        &self.den
    }

    pub(crate) fn raw_atoms(&self) -> &ElementMap<BigUint> {
        &self.atoms
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.atoms.contains_key(g)
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupElement> {
        self.atoms.keys()
    }

    /// Support in canonical element order.
    pub fn sorted_support(&self) -> Vec<GroupElement> {
        let mut v: Vec<GroupElement> = self.atoms.keys().cloned().collect();
        v.sort();
        v
    }

    pub fn weight(&self, g: &GroupElement) -> Rational {
        self.atoms.get(g).map_or_else(Rational::zero, |n| from_biguint_ratio(n, &self.den))
    }

    /// Atoms with weights, in canonical element order.
    pub fn atoms(&self) -> Vec<(GroupElement, Rational)> {
        let mut v: Vec<(GroupElement, Rational)> =
            self.atoms.iter().map(|(g, n)| (g.clone(), from_biguint_ratio(n, &self.den))).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    /// `mu * nu`, the law of `x y` with `x ~ mu`, `y ~ nu` independent.
    pub fn convolve(&self, other: &Measure, cap: usize) -> Result<Measure> {
        if self.ctx != other.ctx {
            return Err(Error::domain("convolving measures on different groups"));
        }
        let mut out: ElementMap<BigUint> = ElementMap::default();
        out.reserve(self.atoms.len().max(other.atoms.len()));
        for (h, a) in &self.atoms {
            for (k, b) in &other.atoms {
                let g = self.ctx.mul(h, k);
                let w = a * b;
                match out.get_mut(&g) {
                    Some(v) => *v += w,
                    None => {
                        if out.len() >= cap {
                            return Err(Error::resource("convolution support", cap, out.len() + 1));
                        }
                        out.insert(g, w);
                    }
                }
            }
        }
        Ok(Measure::from_raw(&self.ctx, out, &self.den * &other.den))
    }

    /// `mu * delta_g`: the law of `x g`.
    pub fn translate_right(&self, g: &GroupElement) -> Measure {
        let atoms = self.atoms.iter().map(|(x, n)| (self.ctx.mul(x, g), n.clone())).collect();
        Measure { ctx: self.ctx.clone(), atoms, den: self.den.clone() }
    }

    /// `delta_g * mu`: the law of `g x`.
    pub fn translate_left(&self, g: &GroupElement) -> Measure {
        let atoms = self.atoms.iter().map(|(x, n)| (self.ctx.mul(g, x), n.clone())).collect();
        Measure { ctx: self.ctx.clone(), atoms, den: self.den.clone() }
    }

    /// `||mu||_2^2`.
    pub fn l2sq(&self) -> Rational {
        let s: BigUint = self.atoms.values().map(|n| n * n).sum();
        from_biguint_ratio(&s, &(&self.den * &self.den))
    }

    /// Largest weight and the least element (in canonical order) attaining it.
    pub fn linf(&self) -> (Rational, GroupElement) {
        let mut best: Option<(&GroupElement, &BigUint)> = None;
        for (g, n) in &self.atoms {
            best = match best {
                Some((bg, bn)) if bn > n || (bn == n && bg < g) => Some((bg, bn)),
                _ => Some((g, n)),
            };
        }
        let (g, n) = best.expect("measure has at least one atom");
        (from_biguint_ratio(n, &self.den), g.clone())
    }

    pub fn norms(&self) -> NormTriple {
        let l1: BigUint = self.atoms.values().sum();
        NormTriple { l1: from_biguint_ratio(&l1, &self.den), l2sq: self.l2sq(), linf: self.linf().0 }
    }

    /// `sum_y mu(y) mu(y k)`.
    pub fn autocorrelation(&self, k: &GroupElement) -> Rational {
        let mut s = BigUint::zero();
        for (y, n) in &self.atoms {
            if let Some(m) = self.atoms.get(&self.ctx.mul(y, k)) {
                s += n * m;
            }
        }
        from_biguint_ratio(&s, &(&self.den * &self.den))
    }

    /// Total mass of a set.
    pub fn mass_of<'a>(&self, set: impl IntoIterator<Item = &'a GroupElement>) -> Rational {
        let s: BigUint = set.into_iter().filter_map(|g| self.atoms.get(g)).sum();
        from_biguint_ratio(&s, &self.den)
    }
}

/// Squared and approximate value of `d_mu(g, h)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DMu {
    pub squared: Rational,
    pub approx: f64,
}

/// `d_mu(g, h)^2 = sum_x (mu(x g^-1) - mu(x h^-1))^2 / ||mu||_2^2`, evaluated as
/// `2 (1 - sum_y mu(y) mu(y g h^-1) / ||mu||_2^2)`.
pub fn d_mu(mu: &Measure, g: &GroupElement, h: &GroupElement) -> DMu {
    let ctx = mu.ctx();
    let k = ctx.mul(g, &ctx.inv(h));
    d_mu_shift(mu, &k, &mu.l2sq())
}

/// `d_mu(k, id)^2` with a precomputed `||mu||_2^2`.
pub(crate) fn d_mu_shift(mu: &Measure, k: &GroupElement, l2sq: &Rational) -> DMu {
    let two = Rational::from_integer(2.into());
    let squared =
        if mu.ctx().is_identity(k) { Rational::zero() } else { two * (Rational::one() - mu.autocorrelation(k) / l2sq) };
    let approx = libm::sqrt(to_f64(&squared));
    DMu { squared, approx }
}

/// Result of classifying pairs of `supp(eta)` by a `d_mu` threshold.
#[derive(Clone, Debug)]
pub struct TypicalPairs {
    /// Pairs `(g, h)` with `d_mu(g, h)^2 <= threshold`, in canonical order.
    pub typical: Vec<(GroupElement, GroupElement)>,
    /// `sum over atypical (g, h) of eta(g) eta(h)`.
    pub atypical_mass: Rational,
    pub pairs_checked: usize,
}

pub fn typical_pairs(mu: &Measure, eta: &Measure, threshold_sq: &Rational) -> TypicalPairs {
    let l2sq = mu.l2sq();
    let ctx = mu.ctx();
    let support = eta.atoms();
    let mut typical = Vec::new();
    let mut atypical = Rational::zero();
    let mut memo: ElementMap<bool> = ElementMap::default();
    for (g, wg) in &support {
        for (h, wh) in &support {
            let k = ctx.mul(g, &ctx.inv(h));
            let ok = *memo.entry(k.clone()).or_insert_with(|| d_mu_shift(mu, &k, &l2sq).squared <= *threshold_sq);
            if ok {
                typical.push((g.clone(), h.clone()));
            } else {
                atypical += wg * wh;
            }
        }
    }
    TypicalPairs { typical, atypical_mass: atypical, pairs_checked: support.len() * support.len() }
}

/// Both sides of `sum_{g,h} ||mu*d_g - mu*d_h||_2^2 eta(g) eta(h) = 2(||mu||^2 - ||mu*eta||^2)`.
pub fn energy_identity(mu: &Measure, eta: &Measure, cap: usize) -> Result<(Rational, Rational)> {
    let support = eta.atoms();
    let mut lhs = Rational::zero();
    let translates: Vec<Measure> = support.iter().map(|(g, _)| mu.translate_right(g)).collect();
    for (i, (_, wg)) in support.iter().enumerate() {
        for (j, (_, wh)) in support.iter().enumerate() {
            if i == j {
                continue;
            }
            lhs += squared_distance(&translates[i], &translates[j]) * wg * wh;
        }
    }
    let rhs = Rational::from_integer(2.into()) * (mu.l2sq() - mu.convolve(eta, cap)?.l2sq());
    Ok((lhs, rhs))
}

/// `||a - b||_2^2` for two measures on the same group.
pub fn squared_distance(a: &Measure, b: &Measure) -> Rational {
    let den = &a.den * &b.den;
    let mut s = BigInt::zero();
    for (g, n) in &a.atoms {
        let x = BigInt::from(n * &b.den);
        let y = b.atoms.get(g).map_or_else(BigInt::zero, |m| BigInt::from(m * &a.den));
        let d = x - y;
        s += &d * &d;
    }
    for (g, m) in &b.atoms {
        if !a.atoms.contains_key(g) {
            let y = BigInt::from(m * &a.den);
            s += &y * &y;
        }
    }
    Rational::new(s, BigInt::from(&den * &den))
}

/// Order in which a window of steps is multiplied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StepOrder {
    /// `mu_j * ... * mu_i`: later steps act on the left.
    #[default]
    LaterLeft,
    /// `mu_i * ... * mu_j`.
    LaterRight,
}

/// An ordered sequence of step measures with a weight floor `p0`.
#[derive(Clone, Debug)]
pub struct WalkSpec {
    ctx: GroupContext,
    steps: Vec<Measure>,
    p0: Rational,
}

/// Outcome of [`WalkSpec::validate_p0`].
#[derive(Clone, Debug, PartialEq)]
pub struct P0Report {
    pub ok: bool,
    /// `(1-based step index, atom, weight)` for each atom with weight `<= p0`.
    pub offending: Vec<(usize, GroupElement, Rational)>,
}

/// Exact concentration probability of a window.
#[derive(Clone, Debug)]
pub struct RhoResult {
    pub rho: Rational,
    pub argmax: GroupElement,
    pub support_size: usize,
    pub l2sq: Rational,
}

impl WalkSpec {
    pub fn new(ctx: &GroupContext, steps: Vec<Measure>, p0: Rational) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::domain("walk has no steps"));
        }
        if p0.is_negative() {
            return Err(Error::domain("p0 must be nonnegative"));
        }
        if let Some(i) = steps.iter().position(|m| m.ctx() != ctx) {
            return Err(Error::domain(format!("step {} lives in a different group", i + 1)));
        }
        Ok(WalkSpec { ctx: ctx.clone(), steps, p0 })
    }

    pub fn ctx(&self) -> &GroupContext {
        &self.ctx
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn p0(&self) -> &Rational {
        &self.p0
    }

    pub fn steps(&self) -> &[Measure] {
        &self.steps
    }

    /// Step `i`, 1-based.
    pub fn step(&self, i: usize) -> &Measure {
        &self.steps[i - 1]
    }

    pub fn validate_p0(&self) -> P0Report {
        let mut offending = Vec::new();
        for (i, m) in self.steps.iter().enumerate() {
            for (g, w) in m.atoms() {
                if w <= self.p0 {
                    offending.push((i + 1, g, w));
                }
            }
        }
        P0Report { ok: offending.is_empty(), offending }
    }

    fn check_range(&self, i: usize, j: usize) -> Result<()> {
        if i == 0 || i > j || j > self.len() {
            return Err(Error::domain(format!("window [{i}, {j}] is not inside 1..={}", self.len())));
        }
        Ok(())
    }

    /// `mu_[i,j]`, 1-based and inclusive.
    pub fn window(&self, i: usize, j: usize, order: StepOrder, cap: usize) -> Result<Measure> {
        self.check_range(i, j)?;
        let mut acc = self.step(i).clone();
        for k in i + 1..=j {
            acc = match order {
                StepOrder::LaterLeft => self.step(k).convolve(&acc, cap)?,
                StepOrder::LaterRight => acc.convolve(self.step(k), cap)?,
            };
        }
        Ok(acc)
    }

    /// `||mu_[i,j]||_2^2` for every `j` in `i..=j_max`, by extending one step at a time.
    pub fn window_l2sq_from(&self, i: usize, j_max: usize, cap: usize) -> Result<Vec<Rational>> {
        self.check_range(i, j_max)?;
        let mut acc = self.step(i).clone();
        let mut out = alloc::vec![acc.l2sq()];
        for k in i + 1..=j_max {
            acc = self.step(k).convolve(&acc, cap)?;
            out.push(acc.l2sq());
        }
        Ok(out)
    }

    /// Exact `rho` of the window (whole walk when `range` is `None`).
    pub fn rho_exact(&self, range: Option<(usize, usize)>, order: StepOrder, cap: usize) -> Result<RhoResult> {
        let (i, j) = range.unwrap_or((1, self.len()));
        let m = self.window(i, j, order, cap).map_err(|e| match e {
            Error::Resource { what: _, cap, reached } => {
                Error::Resource { what: "exact convolution (use rho_monte_carlo for larger walks)", cap, reached }
            }
            other => other,
        })?;
        let (rho, argmax) = m.linf();
        Ok(RhoResult { rho, argmax, support_size: m.len(), l2sq: m.l2sq() })
    }

    /// Sub-walk of steps `i..=j` (1-based).
    pub fn slice(&self, i: usize, j: usize) -> Result<WalkSpec> {
        self.check_range(i, j)?;
        WalkSpec::new(&self.ctx, self.steps[i - 1..j].to_vec(), self.p0.clone())
    }
}

impl NormTriple {
    /// `linf <= l1` and `linf^2 <= l2sq <= linf`.
    pub fn young_chain_holds(&self) -> bool {
        self.linf <= self.l1 && &self.linf * &self.linf <= self.l2sq && self.l2sq <= self.linf
    }
}

/// Approximate `log2` of a positive rational, exact enough for fits and reports.
pub fn log2_rational(q: &Rational) -> f64 {
    let n = q.numer().abs().to_biguint().expect("abs");
    let d = q.denom().to_biguint().expect("positive");
    let shift = |x: &BigUint| x.bits().saturating_sub(60);
    let (sn, sd) = (shift(&n), shift(&d));
    let nf = (&n >> sn).to_f64().unwrap_or(f64::NAN);
    let df = (&d >> sd).to_f64().unwrap_or(f64::NAN);
    libm::log2(nf) - libm::log2(df) + sn as f64 - sd as f64
}
