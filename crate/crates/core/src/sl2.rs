//! Transfer-matrix walks in `SL_2(Q)`: the commutator construction,
//! free-subgroup certification by ball counting, and concentration decay.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::group::{ball, GroupContext, GroupElement, Mat2};
use crate::measure::{monte_carlo_profile, Measure, WalkSpec};
use crate::rational::{int, to_f64, Rational};
use crate::stats::{fit_log_log, LineFit};

/// `[[E + lambda eps, -1], [1, 0]]`.
pub fn transfer_matrix(e: &Rational, lambda: &Rational, eps: &Rational) -> GroupElement {
    let m = Mat2::new([e + lambda * eps, int(-1), int(1), Rational::zero()]);
    debug_assert!(m.det().is_one());
    GroupElement::RatMatrix(m)
}

fn mat(g: &GroupElement) -> &Mat2 {
    match g {
        GroupElement::RatMatrix(m) => m,
        _ => unreachable!("rational 2x2 matrix"),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommutatorPair {
    pub g1: GroupElement,
    pub g2: GroupElement,
    /// `g1 g2^-1 = [[1, 2 lambda a], [0, 1]]`.
    pub h1: GroupElement,
    /// `g1^-1 g2 = [[1, 0], [2 lambda a, 1]]`.
    pub h2: GroupElement,
    pub k0: u64,
    pub h1p: GroupElement,
    pub h2p: GroupElement,
    /// Off-diagonal entry of `h1p` and `h2p`, `2 k0 lambda a`.
    pub mu: Rational,
}

/// `g1`, `g2` are the transfer matrices for `eps = a` and `eps = -a`;
/// `k0 = max(ceil(1 / (lambda |a|)), 1)` makes `|2 k0 lambda a| >= 2`.
pub fn commutator_pair(e: &Rational, lambda: &Rational, a: &Rational) -> Result<CommutatorPair> {
    if a.is_zero() {
        return Err(Error::domain("a = 0 is degenerate: h1 is the identity"));
    }
    if !lambda.is_positive() {
        return Err(Error::domain("lambda must be positive"));
    }
    let ctx = GroupContext::RationalMatrix2;
    let g1 = transfer_matrix(e, lambda, a);
    let g2 = transfer_matrix(e, lambda, &-a);
    let h1 = ctx.mul(&g1, &ctx.inv(&g2));
    let h2 = ctx.mul(&ctx.inv(&g1), &g2);
    let t = int(2) * lambda * a;
    let upper = GroupElement::RatMatrix(Mat2::new([int(1), t.clone(), int(0), int(1)]));
    let lower = GroupElement::RatMatrix(Mat2::new([int(1), int(0), t.clone(), int(1)]));
    assert_eq!(h1, upper, "g1 g2^-1 is unipotent upper");
    assert_eq!(h2, lower, "g1^-1 g2 is unipotent lower");
    let k0 = (lambda * a.abs()).recip().ceil().to_integer().to_u64().unwrap_or(u64::MAX).max(1);
    let h1p = ctx.pow(&h1, k0 as i64);
    let h2p = ctx.pow(&h2, k0 as i64);
    let mu = t * int(k0 as i64);
    Ok(CommutatorPair { g1, g2, h1, h2, k0, h1p, h2p, mu })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FreeBallCheck {
    /// `|B_k|` for `k = 0..=kmax`.
    pub sizes: Vec<usize>,
    /// `2 * 3^k - 1` (1 at `k = 0`).
    pub free_sizes: Vec<u128>,
    /// No relation of length `<= 2 kmax`.
    pub free: bool,
    /// Least `k` with `|B_k|` below the free count.
    pub first_relation: Option<usize>,
    /// `Some(|mu| >= 2)` when the generators have the unipotent form with a common entry `mu`.
    pub hypothesis_met: Option<bool>,
}

pub fn free_group_ball(k: usize) -> u128 {
    2 * 3u128.pow(k as u32) - 1
}

fn unipotent_entry(h1: &Mat2, h2: &Mat2) -> Option<Rational> {
    let [a, b, c, d] = h1.entries();
    let [e, f, g, h] = h2.entries();
    (a.is_one() && c.is_zero() && d.is_one() && e.is_one() && f.is_zero() && h.is_one() && b == g).then_some(b)
}

/// Exact ball sizes of `<h1p, h2p>` compared with the rank-2 free group.
pub fn free_ball_check(h1p: &GroupElement, h2p: &GroupElement, kmax: usize, cap: usize) -> Result<FreeBallCheck> {
    let ctx = GroupContext::RationalMatrix2;
    let b = ball(&ctx, &[h1p.clone(), h2p.clone()], kmax, cap)?;
    let free_sizes: Vec<u128> = (0..=kmax).map(free_group_ball).collect();
    let first_relation = (0..=kmax).find(|&k| (b.sizes[k] as u128) < free_sizes[k]);
    let hypothesis_met = unipotent_entry(mat(h1p), mat(h2p)).map(|mu| mu.abs() >= int(2));
    Ok(FreeBallCheck { sizes: b.sizes, free_sizes, free: first_relation.is_none(), first_relation, hypothesis_met })
}

/// Distribution of `eps_i`: rational values with positive rational weights summing to 1.
pub type EpsDistribution = Vec<(Rational, Rational)>;

#[derive(Clone, Debug, PartialEq)]
pub struct TransferSpec {
    pub e: Rational,
    pub lambda: Rational,
    pub gamma: Rational,
    pub p0: Rational,
    pub eps: Vec<EpsDistribution>,
    /// Window length for the pair hypothesis.
    pub window: usize,
}

/// Outcome of the pair hypothesis check.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaPairCheck {
    pub window: usize,
    /// 1-based steps whose support holds some `{a, -a}` with `a > gamma`.
    pub good_steps: Vec<usize>,
    /// First window `[i, i + window - 1]` with no good step.
    pub first_failure: Option<usize>,
    pub ok: bool,
}

impl TransferSpec {
    pub fn new(
        e: Rational,
        lambda: Rational,
        gamma: Rational,
        p0: Rational,
        eps: Vec<EpsDistribution>,
        window: usize,
    ) -> Result<Self> {
        if !lambda.is_positive() {
            return Err(Error::domain("lambda must be positive"));
        }
        if !gamma.is_positive() {
            return Err(Error::domain("gamma must be positive"));
        }
        if eps.is_empty() {
            return Err(Error::domain("no steps"));
        }
        if window == 0 || window > eps.len() {
            return Err(Error::domain(format!("window must lie in 1..={}", eps.len())));
        }
        for (i, d) in eps.iter().enumerate() {
            if d.iter().any(|(_, w)| !w.is_positive()) {
                return Err(Error::domain(format!("step {}: weights must be positive", i + 1)));
            }
            if d.iter().map(|(_, w)| w).sum::<Rational>() != Rational::one() {
                return Err(Error::domain(format!("step {}: weights do not sum to 1", i + 1)));
            }
            if let Some((v, w)) = d.iter().find(|(_, w)| *w <= p0) {
                return Err(Error::domain(format!("step {}: weight {w} of eps = {v} is at most p0", i + 1)));
            }
        }
        Ok(TransferSpec { e, lambda, gamma, p0, eps, window })
    }

    /// Uniform `{a, -a}` at every step, with the whole walk as window.
    pub fn symmetric(e: Rational, lambda: Rational, a: Rational, n: usize) -> Result<Self> {
        let half = Rational::new(1.into(), 2.into());
        let d = vec![(a.clone(), half.clone()), (-a.clone(), half)];
        let gamma = a.abs() / int(2);
        TransferSpec::new(e, lambda, gamma, Rational::zero(), vec![d; n], n.max(1))
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    /// The walk `g_n ... g_1` in `SL_2(Q)`.
    pub fn walk(&self) -> Result<WalkSpec> {
        let ctx = GroupContext::RationalMatrix2;
        let steps = self
            .eps
            .iter()
            .map(|d| {
                let atoms = d.iter().map(|(v, w)| (transfer_matrix(&self.e, &self.lambda, v), w.clone()));
                Measure::from_atoms(&ctx, atoms)
            })
            .collect::<Result<Vec<_>>>()?;
        WalkSpec::new(&ctx, steps, self.p0.clone())
    }

    pub fn gamma_pair_check(&self) -> GammaPairCheck {
        let good_steps: Vec<usize> = self
            .eps
            .iter()
            .enumerate()
            .filter(|(_, d)| d.iter().any(|(a, _)| *a > self.gamma && d.iter().any(|(b, _)| *b == -a)))
            .map(|(i, _)| i + 1)
            .collect();
        let n = self.len();
        let w = self.window;
        let first_failure = (1..=n + 1 - w).find(|&i| !good_steps.iter().any(|&s| s >= i && s < i + w));
        GammaPairCheck { window: w, ok: first_failure.is_none(), good_steps, first_failure }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AndersonMode {
    Exact { cap: usize },
    MonteCarlo { trials: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct AndersonPoint {
    pub n: usize,
    /// `rho(n)` in exact mode, the collision estimate otherwise.
    pub value: f64,
    pub exact: Option<Rational>,
    /// Monte Carlo largest-bin frequency.
    pub max_bin: Option<f64>,
    /// `rho^2 <= sum P^2`, checked exactly.
    pub young_ok: Option<bool>,
    pub support: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AndersonProfile {
    pub points: Vec<AndersonPoint>,
    /// Fit of `log value` against `log n`.
    pub fit: Option<LineFit>,
    pub gamma: GammaPairCheck,
    pub caveat: String,
}

pub fn anderson_concentration(spec: &TransferSpec, mode: AndersonMode) -> Result<AndersonProfile> {
    let walk = spec.walk()?;
    let mut points = Vec::with_capacity(walk.len());
    match mode {
        AndersonMode::Exact { cap } => {
            let mut acc = walk.step(1).clone();
            for k in 1..=walk.len() {
                if k > 1 {
                    acc = walk.step(k).convolve(&acc, cap)?;
                }
                let (rho, _) = acc.linf();
                let young_ok = &rho * &rho <= acc.l2sq();
                points.push(AndersonPoint {
                    n: k,
                    value: to_f64(&rho),
                    exact: Some(rho),
                    max_bin: None,
                    young_ok: Some(young_ok),
                    support: acc.len(),
                });
            }
        }
        AndersonMode::MonteCarlo { trials, seed } => {
            for est in monte_carlo_profile(&walk, trials, seed, true)? {
                points.push(AndersonPoint {
                    n: est.steps,
                    value: est.collision,
                    exact: None,
                    max_bin: Some(est.max_bin),
                    young_ok: None,
                    support: est.distinct,
                });
            }
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().filter(|p| p.value > 0.0).map(|p| (p.n as f64, p.value)).unzip();
    let fit = fit_log_log(&xs, &ys);
    Ok(AndersonProfile {
        points,
        fit,
        gamma: spec.gamma_pair_check(),
        caveat: "superpolynomial decay reported, not certified".into(),
    })
}

/// `2 k0 k`, the radius in `g1, g2` that contains `B_k(h1p, h2p)`.
pub fn ball_radius_bound(k0: u64, k: usize) -> usize {
    2 * k0 as usize * k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn rotation_has_order_four() {
        let ctx = GroupContext::RationalMatrix2;
        let g = transfer_matrix(&int(0), &int(1), &int(0));
        assert_eq!(g, GroupElement::RatMatrix(Mat2::new([int(0), int(-1), int(1), int(0)])));
        assert_eq!(ctx.element_order(&g, 10), Some(4));
    }

    #[test]
    fn inverse_display() {
        let ctx = GroupContext::RationalMatrix2;
        let (e, l, a) = (rat(3, 7), rat(2, 5), rat(-1, 3));
        let g = transfer_matrix(&e, &l, &a);
        let expect = Mat2::new([int(0), int(1), int(-1), &e + &l * &a]);
        assert_eq!(ctx.inv(&g), GroupElement::RatMatrix(expect));
        assert!(mat(&g).det().is_one());
    }

    #[test]
    fn commutator_examples() {
        let p = commutator_pair(&int(0), &int(1), &int(1)).unwrap();
        assert_eq!(p.k0, 1);
        assert_eq!(p.mu, int(2));
        assert_eq!(p.h1, GroupElement::RatMatrix(Mat2::new([int(1), int(2), int(0), int(1)])));
        let q = commutator_pair(&rat(5, 3), &rat(1, 4), &int(1)).unwrap();
        assert_eq!(q.k0, 4);
        assert_eq!(q.mu, int(2));
        assert_eq!(q.h1p, GroupElement::RatMatrix(Mat2::new([int(1), int(2), int(0), int(1)])));
        assert_eq!(q.h1, commutator_pair(&int(-9), &rat(1, 4), &int(1)).unwrap().h1);
        assert!(commutator_pair(&int(0), &int(1), &int(0)).is_err());
    }

    #[test]
    fn free_ball_counts() {
        let p = commutator_pair(&int(0), &int(1), &int(1)).unwrap();
        let c = free_ball_check(&p.h1p, &p.h2p, 3, 10_000).unwrap();
        assert_eq!(c.sizes, vec![1, 5, 17, 53]);
        assert!(c.free);
        assert_eq!(c.hypothesis_met, Some(true));
        let z = free_ball_check(&p.h1p, &p.h2p, 0, 10).unwrap();
        assert_eq!(z.sizes, vec![1]);
        assert!(z.free);
    }

    #[test]
    fn entry_one_is_not_free() {
        let h1 = GroupElement::RatMatrix(Mat2::new([int(1), int(1), int(0), int(1)]));
        let h2 = GroupElement::RatMatrix(Mat2::new([int(1), int(0), int(1), int(1)]));
        let c = free_ball_check(&h1, &h2, 4, 100_000).unwrap();
        assert!(!c.free);
        assert_eq!(c.hypothesis_met, Some(false));
        // a b^-1 a = b^-1 a b^-1 has length 6, so balls of radius 3 already collide.
        assert_eq!(c.first_relation, Some(3));
    }

    #[test]
    fn gamma_pairs() {
        let half = rat(1, 2);
        let sym = vec![(int(1), half.clone()), (int(-1), half.clone())];
        let lazy = vec![(int(0), half.clone()), (int(1), half)];
        let eps = vec![sym.clone(), lazy.clone(), lazy.clone(), sym, lazy];
        let s = TransferSpec::new(int(0), int(1), rat(1, 2), int(0), eps.clone(), 3).unwrap();
        let g = s.gamma_pair_check();
        assert_eq!(g.good_steps, vec![1, 4]);
        assert!(g.ok);
        let s = TransferSpec::new(int(0), int(1), rat(1, 2), int(0), eps.clone(), 2).unwrap();
        assert_eq!(s.gamma_pair_check().first_failure, Some(2));
        let s = TransferSpec::new(int(0), int(1), int(1), int(0), eps, 3).unwrap();
        assert!(!s.gamma_pair_check().ok);
    }

    #[test]
    fn spec_validation() {
        let d = vec![(int(1), rat(1, 2)), (int(-1), rat(1, 3))];
        assert!(TransferSpec::new(int(0), int(1), int(1), int(0), vec![d], 1).is_err());
        assert!(TransferSpec::symmetric(int(0), int(0), int(1), 4).is_err());
        let d = vec![(int(1), rat(1, 2)), (int(-1), rat(1, 2))];
        assert!(TransferSpec::new(int(0), int(1), int(1), rat(1, 2), vec![d], 1).is_err());
    }

    #[test]
    fn deterministic_control() {
        let d = vec![(rat(1, 3), int(1))];
        let s = TransferSpec::new(int(0), int(1), int(1), int(0), vec![d; 10], 10).unwrap();
        let p = anderson_concentration(&s, AndersonMode::Exact { cap: 100 }).unwrap();
        assert!(p.points.iter().all(|x| x.exact == Some(int(1))));
        assert!(!p.gamma.ok);
    }

    #[test]
    fn exact_decay_twelve_steps() {
        let s = TransferSpec::symmetric(int(0), int(1), int(1), 12).unwrap();
        let p = anderson_concentration(&s, AndersonMode::Exact { cap: 1 << 14 }).unwrap();
        let rho = |n: usize| p.points[n - 1].exact.clone().unwrap();
        assert!(rho(12) < rho(6));
        assert!(p.points.iter().all(|x| x.young_ok == Some(true)));
        assert!(p.gamma.ok);
        assert!(p.fit.unwrap().slope < 0.0);
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let s = TransferSpec::symmetric(int(0), int(1), int(1), 20).unwrap();
        let mode = AndersonMode::MonteCarlo { trials: 5000, seed: 11 };
        let a = anderson_concentration(&s, mode).unwrap();
        let b = anderson_concentration(&s, mode).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points.len(), 20);
    }
}
