//! Search for a flat window of convolutions.
//!
//! A window `[i, i + 4l]` is *flat* at level `c` when
//! `||mu_[i,i+4l]||_2 >= c * max ||mu_[s, s + l/2]||_2` over sub-windows with
//! `i <= s <= i + 7l/2`. Starting from `[1, 1 + 4 floor((n-1)/4)]` the search
//! descends into the heaviest violating sub-window with `l' = floor(l/8)`
//! until a flat window appears, then shifts a split point `j0` left in steps
//! of `w = floor(n^(1-eps))` until prepending up to `w` further steps barely
//! changes the norm.
//!
//! All comparisons of `l2` norms are done on exact squares.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::measure::WalkSpec;
use crate::rational::{floor_pow, neg_pow_lower, Rational};

/// One level of the descent.
#[derive(Clone, Debug, PartialEq)]
pub struct DescentLevel {
    pub i: usize,
    pub l: usize,
    pub whole_l2sq: Rational,
    pub max_sub_l2sq: Rational,
    /// Start of the heaviest sub-window.
    pub max_sub_start: usize,
    pub flat: bool,
}

/// Parameters of the search.
#[derive(Clone, Debug)]
pub struct SegmentParams {
    /// Flatness constant.
    pub c: Rational,
    /// Exponent in the shift width `w = floor(n^(1 - eps))`.
    pub eps: Rational,
    /// Exponent `tau` in the threshold `1 - n^(-tau)`; defaults to `eps`.
    pub tau: Option<Rational>,
    pub cap: usize,
}

impl SegmentParams {
    pub fn new(c: Rational, eps: Rational) -> Self {
        SegmentParams { c, eps, tau: None, cap: crate::DEFAULT_CAP }
    }

    fn tau(&self) -> &Rational {
        self.tau.as_ref().unwrap_or(&self.eps)
    }
}

/// Result of [`find_flat_segment`].
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentReport {
    pub n: usize,
    pub i0: usize,
    pub l0: usize,
    pub j0: usize,
    pub l0_star: usize,
    pub c: Rational,
    pub eps: Rational,
    pub tau: Rational,
    /// Largest `m` in the prefix condition: `floor(n^(1-eps))`.
    pub m_bound: usize,
    /// Rational lower bound for `n^(-tau)`; the threshold used is `1 - threshold_gap`,
    /// which is at least `1 - n^(-tau)`, so passing is conservative.
    pub threshold_gap: Rational,
    /// `||mu_[i0,i0+4l0]||^2 / max sub-window norm^2`.
    pub flat_ratio_sq: Rational,
    /// `||mu_[j0-l*,j0+l*]||^2 / max(||mu_[j0-l*,j0-1]||^2, ||mu_[j0,j0+l*]||^2)`.
    pub split_ratio_sq: Rational,
    /// `min over 1 <= m <= m_bound of ||mu_[j0-m,j0+l*]||^2 / ||mu_[j0,j0+l*]||^2`.
    pub prefix_ratio_sq: Rational,
    /// Shift index chosen in the refinement.
    pub shift: usize,
    /// Whether `l0* >= n^(1-eps)`.
    pub long_enough: bool,
    pub chain: Vec<DescentLevel>,
}

impl SegmentReport {
    pub fn threshold(&self) -> Rational {
        Rational::one() - &self.threshold_gap
    }

    /// Achieved flatness constant `sqrt(flat_ratio_sq)`, approximately.
    pub fn achieved_c(&self) -> f64 {
        libm::sqrt(crate::rational::to_f64(&self.flat_ratio_sq))
    }
}

/// Memo of window norms `||mu_[i,j]||_2^2`.
pub struct WindowNorms<'a> {
    walk: &'a WalkSpec,
    cap: usize,
    memo: BTreeMap<(usize, usize), Rational>,
}

impl<'a> WindowNorms<'a> {
    pub fn new(walk: &'a WalkSpec, cap: usize) -> Self {
        WindowNorms { walk, cap, memo: BTreeMap::new() }
    }

    /// `||mu_[i,j]||_2^2`; computes and caches all `[i, j']` for `j' <= j` on a miss.
    pub fn get(&mut self, i: usize, j: usize) -> Result<Rational> {
        if let Some(v) = self.memo.get(&(i, j)) {
            return Ok(v.clone());
        }
        let norms = self.walk.window_l2sq_from(i, j, self.cap)?;
        for (off, v) in norms.into_iter().enumerate() {
            self.memo.insert((i, i + off), v);
        }
        Ok(self.memo[&(i, j)].clone())
    }

    /// `||mu_[s,e]||_2^2` for all `s` in `s_min..=e`, growing the window to the left.
    pub fn fill_left(&mut self, s_min: usize, e: usize) -> Result<()> {
        let mut acc = self.walk.step(e).clone();
        self.memo.insert((e, e), acc.l2sq());
        for s in (s_min..e).rev() {
            acc = acc.convolve(self.walk.step(s), self.cap)?;
            self.memo.insert((s, e), acc.l2sq());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.memo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memo.is_empty()
    }
}

fn check_params(n: usize, params: &SegmentParams) -> Result<()> {
    let zero = Rational::zero();
    if params.c <= zero || params.c > Rational::one() {
        return Err(Error::domain("flatness constant c must lie in (0, 1]"));
    }
    if params.eps <= zero || params.eps >= Rational::one() {
        return Err(Error::domain("eps must lie in (0, 1)"));
    }
    if *params.tau() < zero {
        return Err(Error::domain("threshold exponent must be nonnegative"));
    }
    if n < 9 {
        return Err(Error::NoFlatSegment {
            reason: format!("walk of length {n} is too short (need l0 >= 2)"),
            chain: Vec::new(),
        });
    }
    Ok(())
}

fn level(norms: &mut WindowNorms<'_>, i: usize, l: usize, c_sq: &Rational) -> Result<DescentLevel> {
    let whole = norms.get(i, i + 4 * l)?;
    let half = l / 2;
    let mut best = Rational::zero();
    let mut best_start = i;
    for s in i..=i + 7 * l / 2 {
        let v = norms.get(s, s + half)?;
        if v > best {
            best = v;
            best_start = s;
        }
    }
    let flat = whole >= c_sq * &best;
    Ok(DescentLevel { i, l, whole_l2sq: whole, max_sub_l2sq: best, max_sub_start: best_start, flat })
}

/// Coarse search: a flat window `[i0, i0 + 4 l0]` and the descent chain leading to it.
pub fn find_flat_window(walk: &WalkSpec, c: &Rational, cap: usize) -> Result<(usize, usize, Vec<DescentLevel>)> {
    let n = walk.len();
    let c_sq = c * c;
    let mut norms = WindowNorms::new(walk, cap);
    let mut chain = Vec::new();
    let (mut i, mut l) = (1usize, (n.saturating_sub(1)) / 4);
    loop {
        if l < 2 {
            return Err(Error::NoFlatSegment {
                reason: format!("descent reached l = {l} below 2 without a flat window"),
                chain,
            });
        }
        let lv = level(&mut norms, i, l, &c_sq)?;
        let flat = lv.flat;
        let next = lv.max_sub_start;
        chain.push(lv);
        if flat {
            return Ok((i, l, chain));
        }
        i = next;
        l /= 8;
    }
}

/// Full search: flat window, then the split point `j0` and length `l0*`.
pub fn find_flat_segment(walk: &WalkSpec, params: &SegmentParams) -> Result<SegmentReport> {
    let n = walk.len();
    check_params(n, params)?;
    let (i0, l0, chain) = find_flat_window(walk, &params.c, params.cap)?;
    let flat = chain.last().expect("nonempty chain");
    let flat_ratio_sq = &flat.whole_l2sq / &flat.max_sub_l2sq;

    let one_minus_eps = Rational::one() - &params.eps;
    let w = floor_pow(n as u64, &one_minus_eps).max(1) as usize;
    let gap = neg_pow_lower(n as u64, params.tau(), 12);
    let theta = Rational::one() - &gap;
    let theta_sq = &theta * &theta;

    let e = i0 + 3 * l0;
    let base = i0 + 2 * l0;
    // Admissible shifts keep [j0 - l*, j0 + l*] and [j0 - w, e] inside the walk window.
    let max_shift = (0..).take_while(|&j: &usize| 2 * j * w <= l0 && base - j * w > w).last();
    let Some(max_shift) = max_shift else {
        return Err(Error::NoFlatSegment {
            reason: format!("flat window [{i0}, {}] leaves no room for prefixes of length {w}", i0 + 4 * l0),
            chain,
        });
    };
    let mut norms = WindowNorms::new(walk, params.cap);
    norms.fill_left(base - max_shift * w - w, e)?;
    let mut best: Option<(usize, Rational)> = None;
    let mut chosen = None;
    for j in 0..=max_shift {
        let j0 = base - j * w;
        let right = norms.get(j0, e)?;
        let mut worst: Option<Rational> = None;
        for m in 1..=w {
            let r = norms.get(j0 - m, e)? / &right;
            if worst.as_ref().is_none_or(|x| r < *x) {
                worst = Some(r);
            }
        }
        let worst = worst.expect("w >= 1");
        if worst >= theta_sq {
            chosen = Some((j, worst));
            break;
        }
        if best.as_ref().is_none_or(|b| worst > b.1) {
            best = Some((j, worst));
        }
    }
    let Some((shift, prefix_ratio_sq)) = chosen else {
        let (j, r) = best.expect("at least one shift");
        return Err(Error::NoFlatSegment {
            reason: format!("no shift meets the prefix threshold 1 - {gap}: best squared ratio {r} at shift {j}"),
            chain,
        });
    };
    let j0 = base - shift * w;
    let l0_star = l0 + shift * w;
    let split_ratio_sq = split_ratio(&mut WindowNorms::new(walk, params.cap), j0, l0_star)?;
    let report = SegmentReport {
        n,
        i0,
        l0,
        j0,
        l0_star,
        c: params.c.clone(),
        eps: params.eps.clone(),
        tau: params.tau().clone(),
        m_bound: w,
        threshold_gap: gap,
        flat_ratio_sq,
        split_ratio_sq,
        prefix_ratio_sq,
        shift,
        long_enough: l0_star >= w,
        chain,
    };
    let check = verify_segment(walk, &report, params.cap)?;
    if let Some(v) = check.violation {
        return Err(Error::NoFlatSegment { reason: v, chain: report.chain });
    }
    Ok(report)
}

fn split_ratio(norms: &mut WindowNorms<'_>, j0: usize, l: usize) -> Result<Rational> {
    let whole = norms.get(j0 - l, j0 + l)?;
    let left = norms.get(j0 - l, j0 - 1)?;
    let right = norms.get(j0, j0 + l)?;
    Ok(whole / left.max(right))
}

/// Outcome of [`verify_segment`]: `violation` names the first failed inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentCheck {
    pub ok: bool,
    pub violation: Option<String>,
}

/// Recomputes every window norm from scratch and checks the flat-window
/// inequality, the split inequality and the prefix inequality for every
/// `m <= m_bound`.
pub fn verify_segment(walk: &WalkSpec, r: &SegmentReport, cap: usize) -> Result<SegmentCheck> {
    let fail = |msg: String| Ok(SegmentCheck { ok: false, violation: Some(msg) });
    let n = walk.len();
    if r.n != n {
        return fail(format!("report is for n = {}, walk has {n} steps", r.n));
    }
    if r.i0 == 0 || r.i0 + 4 * r.l0 > n || r.l0 == 0 {
        return fail(format!("i0 + 4 l0 = {} exceeds n = {n}", r.i0 + 4 * r.l0));
    }
    if r.l0_star == 0 || r.j0 <= r.l0_star || r.j0 + r.l0_star > n || r.j0 <= r.m_bound {
        return fail(format!("split j0 = {}, l0* = {} out of range", r.j0, r.l0_star));
    }
    let c_sq = &r.c * &r.c;
    let mut norms = WindowNorms::new(walk, cap);
    let whole = norms.get(r.i0, r.i0 + 4 * r.l0)?;
    for s in r.i0..=r.i0 + 7 * r.l0 / 2 {
        let sub = norms.get(s, s + r.l0 / 2)?;
        if whole < &c_sq * &sub {
            return fail(format!("window [{}, {}] is not flat against [{s}, {}]", r.i0, r.i0 + 4 * r.l0, s + r.l0 / 2));
        }
    }
    let (j0, l) = (r.j0, r.l0_star);
    let w_all = norms.get(j0 - l, j0 + l)?;
    let left = norms.get(j0 - l, j0 - 1)?;
    let right = norms.get(j0, j0 + l)?;
    if w_all < &c_sq * &left || w_all < &c_sq * &right {
        return fail(format!("split inequality fails at j0 = {j0}, l0* = {l}"));
    }
    let theta = Rational::one() - &r.threshold_gap;
    let theta_sq = &theta * &theta;
    let expected_gap = neg_pow_lower(n as u64, &r.tau, 12);
    if r.threshold_gap > expected_gap {
        return fail(format!("threshold gap {} exceeds n^(-tau)", r.threshold_gap));
    }
    let mut fresh = WindowNorms::new(walk, cap);
    fresh.fill_left(j0 - r.m_bound, j0 + l)?;
    for m in 1..=r.m_bound {
        let v = fresh.get(j0 - m, j0 + l)?;
        if v < &theta_sq * &right {
            return fail(format!("prefix inequality fails at m = {m}"));
        }
    }
    Ok(SegmentCheck { ok: true, violation: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{GroupContext, GroupElement};
    use crate::measure::Measure;
    use crate::rational::rat;
    use alloc::vec;

    fn coin_walk(m: u64, n: usize) -> WalkSpec {
        let ctx = GroupContext::cyclic(m).unwrap();
        let s = Measure::uniform(&ctx, &[GroupElement::Residue(0), GroupElement::Residue(1)]).unwrap();
        WalkSpec::new(&ctx, vec![s; n], Rational::zero()).unwrap()
    }

    #[test]
    fn point_masses_are_flat() {
        let ctx = GroupContext::Heisenberg;
        let d = Measure::delta(&ctx, GroupElement::Heisenberg([1, 0, 0])).unwrap();
        let walk = WalkSpec::new(&ctx, vec![d; 65], Rational::zero()).unwrap();
        let r = find_flat_segment(&walk, &SegmentParams::new(rat(1, 16), rat(1, 2))).unwrap();
        assert_eq!((r.i0, r.l0), (1, 16));
        assert_eq!(r.flat_ratio_sq, Rational::one());
        assert_eq!(r.split_ratio_sq, Rational::one());
        assert_eq!(r.prefix_ratio_sq, Rational::one());
        assert!(verify_segment(&walk, &r, 1000).unwrap().ok);
    }

    #[test]
    fn cyclic_coin_walk_passes_verification() {
        let walk = coin_walk(5, 64);
        let r = find_flat_segment(&walk, &SegmentParams::new(rat(1, 2), rat(1, 2))).unwrap();
        assert!(r.i0 + 4 * r.l0 <= 64);
        assert!(verify_segment(&walk, &r, 1000).unwrap().ok);
    }

    #[test]
    fn shifted_report_fails() {
        // Fair coins on Z/101 up to step 44, point masses afterwards.
        let ctx = GroupContext::cyclic(101).unwrap();
        let coin = Measure::uniform(&ctx, &[GroupElement::Residue(0), GroupElement::Residue(1)]).unwrap();
        let point = Measure::delta(&ctx, GroupElement::Residue(0)).unwrap();
        let mut steps = vec![coin; 44];
        steps.extend(vec![point; 20]);
        let walk = WalkSpec::new(&ctx, steps, Rational::zero()).unwrap();
        let r = find_flat_segment(&walk, &SegmentParams::new(rat(1, 4), rat(1, 2))).unwrap();
        assert!(verify_segment(&walk, &r, 100_000).unwrap().ok);
        let mut bad = r.clone();
        bad.j0 += bad.l0_star;
        let check = verify_segment(&walk, &bad, 100_000).unwrap();
        assert!(!check.ok, "{r:?}");
    }

    #[test]
    fn deterministic_block_breaks_prefix_condition() {
        // Coins on Z/101 followed by point masses: a split at the start of the
        // deterministic block has norm 1 on the right, and prepending coins halves it.
        let ctx = GroupContext::cyclic(101).unwrap();
        let coin = Measure::uniform(&ctx, &[GroupElement::Residue(0), GroupElement::Residue(1)]).unwrap();
        let point = Measure::delta(&ctx, GroupElement::Residue(0)).unwrap();
        let mut steps = vec![coin; 32];
        steps.extend(vec![point; 32]);
        let walk = WalkSpec::new(&ctx, steps, Rational::zero()).unwrap();
        let params = SegmentParams::new(rat(1, 64), rat(1, 2));
        let report = SegmentReport {
            n: 64,
            i0: 1,
            l0: 15,
            j0: 33,
            l0_star: 15,
            c: rat(1, 64),
            eps: rat(1, 2),
            tau: rat(1, 2),
            m_bound: 8,
            threshold_gap: rat(1, 8),
            flat_ratio_sq: Rational::one(),
            split_ratio_sq: Rational::one(),
            prefix_ratio_sq: Rational::one(),
            shift: 0,
            long_enough: true,
            chain: Vec::new(),
        };
        let check = verify_segment(&walk, &report, params.cap).unwrap();
        assert!(!check.ok);
        assert!(check.violation.unwrap().contains("prefix"));
    }

    #[test]
    fn monotone_under_prepending() {
        let walk = coin_walk(7, 20);
        let mut norms = WindowNorms::new(&walk, 1000);
        norms.fill_left(1, 20).unwrap();
        for s in 2..=20 {
            assert!(norms.get(s - 1, 20).unwrap() <= norms.get(s, 20).unwrap());
        }
    }

    #[test]
    fn too_short_walk_errors() {
        let walk = coin_walk(5, 8);
        assert!(matches!(
            find_flat_segment(&walk, &SegmentParams::new(rat(1, 2), rat(1, 2))),
            Err(Error::NoFlatSegment { .. })
        ));
    }
}
