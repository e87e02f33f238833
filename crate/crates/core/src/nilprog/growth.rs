//! Exact sizes of the powers `(HP)^k`.

use alloc::vec::Vec;

use super::{enumerate_hp, CosetNilprogression};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::stats::{fit_log_log, fit_semi_log, LineFit};
use crate::ElementSet;

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthProfile {
    /// `|(HP)^k|` for `k = 1, 2, ...`.
    pub sizes: Vec<usize>,
    /// `|H| |P|`.
    pub base: usize,
    /// `|(HP)^k| / (|H| |P|)`.
    pub ratios: Vec<Rational>,
    pub log_log: Option<LineFit>,
    pub semi_log: Option<LineFit>,
    /// Set when the semi-log fit explains the data better than the log-log fit.
    pub exponential: bool,
    /// Set when the cap stopped the profile before `nmax`.
    pub truncated: bool,
}

/// Sizes of `(HP)^k` for `k <= nmax`. Uses `(HP)^k = (HP)^{k-1} u ((HP)^{k-1} \ (HP)^{k-2}) HP`,
/// valid because `HP` contains the identity.
pub fn growth_profile(hp: &CosetNilprogression, nmax: usize, cap: usize) -> Result<GrowthProfile> {
    if nmax == 0 {
        return Err(Error::domain("nmax must be at least 1"));
    }
    let ctx = hp.ctx();
    let one = Rational::from_integer(1.into());
    let base_set = enumerate_hp(hp, &one, cap)?;
    let base: Vec<_> = base_set.iter().cloned().collect();
    let p_only = enumerate_hp(&CosetNilprogression::trivial_h(hp.progression().clone()), &one, cap)?.len();
    let hp_base = hp.h().len() * p_only;

    let mut sizes = alloc::vec![base_set.len()];
    let mut all: ElementSet = base_set.clone();
    let mut frontier: Vec<_> = base.clone();
    let mut truncated = false;
    'outer: for _ in 2..=nmax {
        let mut fresh = Vec::new();
        for x in &frontier {
            for y in &base {
                let z = ctx.mul(x, y);
                if all.insert(z.clone()) {
                    fresh.push(z);
                    if all.len() > cap {
                        truncated = true;
                        break 'outer;
                    }
                }
            }
        }
        sizes.push(all.len());
        frontier = fresh;
    }
    let xs: Vec<f64> = (1..=sizes.len()).map(|k| k as f64).collect();
    let ys: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    let log_log = fit_log_log(&xs, &ys);
    let semi_log = fit_semi_log(&xs, &ys);
    let exponential = matches!((&log_log, &semi_log), (Some(a), Some(b)) if b.r2 > a.r2);
    let ratios = sizes.iter().map(|&s| Rational::new(s.into(), hp_base.into())).collect();
    Ok(GrowthProfile { sizes, base: hp_base, ratios, log_log, semi_log, exponential, truncated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{GroupContext, GroupElement};
    use crate::nilprog::Progression;
    use crate::rational::int;

    #[test]
    fn line_grows_linearly() {
        let ctx = GroupContext::lattice(1).unwrap();
        let p = Progression::new(&ctx, alloc::vec![GroupElement::Vector(alloc::vec![1])], alloc::vec![int(3)]).unwrap();
        let g = growth_profile(&CosetNilprogression::trivial_h(p), 10, 100_000).unwrap();
        let expected: Vec<usize> = (1..=10).map(|k| 6 * k + 1).collect();
        assert_eq!(g.sizes, expected);
        let slope = g.log_log.unwrap().slope;
        assert!((0.9..1.1).contains(&slope), "{slope}");
        assert!(!g.exponential);
    }

    #[test]
    fn cap_truncates() {
        let ctx = GroupContext::lattice(2).unwrap();
        let p = Progression::new(
            &ctx,
            alloc::vec![GroupElement::Vector(alloc::vec![1, 0]), GroupElement::Vector(alloc::vec![0, 1])],
            alloc::vec![int(2), int(2)],
        )
        .unwrap();
        let g = growth_profile(&CosetNilprogression::trivial_h(p), 50, 500).unwrap();
        assert!(g.truncated);
        assert!(g.sizes.len() < 50);
    }
}
