//! The collecting process for step-2 progressions.
//!
//! Sorting a word into `u_1^{m_1} ... u_r^{m_r}` by adjacent swaps
//! `u_j^s u_i^t -> u_i^t u_j^s [u_j, u_i]^{st}` (for `j > i`) is exact when
//! every commutator of generators is central. Each `[u_j, u_i]` is first
//! written as a product of central generators of index above `j`; a swap then
//! adds `st` times those exponents to the tail. The number of swaps between
//! letters of `u_j` and `u_i` equals the signed count of inversions, so no
//! explicit sorting is needed.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::ToPrimitive;

use super::Progression;
use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::rational::Rational;

/// Largest exponent tried when expressing a commutator in tail generators.
const EXPR_RADIUS: i64 = 64;

/// A generator index (0-based) with an exponent sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Letter {
    pub index: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn new(index: usize, inverse: bool) -> Self {
        Letter { index, inverse }
    }

    fn sign(self) -> i64 {
        if self.inverse {
            -1
        } else {
            1
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollectReport {
    /// Normal-form exponents `m_i - m_i'`.
    pub exponents: Vec<i64>,
    /// Occurrences of `u_i` and `u_i^-1` in the input word.
    pub letter_counts: Vec<(u64, u64)>,
    /// Total positive and negative exponent added to each generator by collecting.
    pub added: Vec<(u64, u64)>,
    /// `max(added_plus, added_minus)` per generator.
    pub drift: Vec<u64>,
    /// `M_i / D`.
    pub drift_bound: Vec<Rational>,
    /// Per generator, whether the drift stays within the bound.
    pub within_bound: Vec<bool>,
    /// The word's element, equal to the product of the normal form.
    pub element: GroupElement,
}

impl CollectReport {
    pub fn drift_ok(&self) -> bool {
        self.within_bound.iter().all(|&b| b)
    }
}

/// Exponents `c_k` (indexed like the generators) with
/// `prod_{k > j, k central} u_k^{c_k} = target`.
fn tail_expression(p: &Progression, central: &[usize], j: usize, target: &GroupElement) -> Option<Vec<i64>> {
    let ctx = p.ctx();
    let tail: Vec<usize> = central.iter().copied().filter(|&k| k > j).collect();
    if ctx.is_identity(target) {
        return Some(vec![0; p.rank()]);
    }
    // Search boxes of growing radius; each shell is new.
    let gens = p.generators();
    for radius in 1..=EXPR_RADIUS {
        let side = 2 * radius + 1;
        let total = (side as u64).checked_pow(tail.len() as u32)?;
        if total > 4_000_000 {
            return None;
        }
        for code in 0..total {
            let mut c = code;
            let mut exps = vec![0i64; p.rank()];
            let mut on_shell = false;
            for &k in &tail {
                let e = (c % side as u64) as i64 - radius;
                c /= side as u64;
                on_shell |= e.abs() == radius;
                exps[k] = e;
            }
            if !on_shell {
                continue;
            }
            let x = tail.iter().fold(ctx.identity(), |acc, &k| ctx.mul(&acc, &ctx.pow(&gens[k], exps[k])));
            if &x == target {
                return Some(exps);
            }
        }
    }
    None
}

/// Collects `word` into normal form relative to `p`, whose generators must
/// generate a step-2 group with commutators expressible in central
/// generators of higher index. `lengths_q` are the `M_i` of the drift bound
/// (pass `p.lengths()` to compare against `p` itself).
pub fn collect(word: &[Letter], p: &Progression, lengths_q: &[Rational], d: &Rational) -> Result<CollectReport> {
    let r = p.rank();
    if lengths_q.len() != r {
        return Err(Error::domain("one bound length per generator is required"));
    }
    if let Some(l) = word.iter().find(|l| l.index >= r) {
        return Err(Error::domain(format!("letter index {} out of range for rank {r}", l.index)));
    }
    if p.step_violation(2).is_some() {
        return Err(Error::Unsupported("exact collecting needs step at most 2".into()));
    }
    let ctx = p.ctx();
    let gens = p.generators();
    let central = p.central_indices();
    let mut expr: Vec<Vec<Option<Vec<i64>>>> = vec![vec![None; r]; r];
    for i in 0..r {
        for j in (i + 1)..r {
            let c = ctx.commutator(&gens[j], &gens[i]);
            let e = tail_expression(p, &central, j, &c).ok_or_else(|| {
                Error::Unsupported(format!(
                    "commutator [u{}, u{}] = {c} is not a product of later central generators",
                    j + 1,
                    i + 1
                ))
            })?;
            expr[j][i] = Some(e);
        }
    }

    // seen[j] = signed count of u_j letters read so far.
    let mut seen = vec![0i64; r];
    let mut pair_weight = vec![vec![0i64; r]; r];
    let mut counts = vec![(0u64, 0u64); r];
    for &l in word {
        let s = l.sign();
        for j in (l.index + 1)..r {
            pair_weight[j][l.index] += seen[j] * s;
        }
        seen[l.index] += s;
        if l.inverse {
            counts[l.index].1 += 1;
        } else {
            counts[l.index].0 += 1;
        }
    }
    let mut added = vec![(0u64, 0u64); r];
    let mut exponents = seen.clone();
    for i in 0..r {
        for j in (i + 1)..r {
            let w = pair_weight[j][i];
            if w == 0 {
                continue;
            }
            let e = expr[j][i].as_ref().expect("filled above");
            for k in 0..r {
                let delta = w.checked_mul(e[k]).ok_or_else(|| Error::domain("exponent overflow"))?;
                exponents[k] += delta;
                if delta > 0 {
                    added[k].0 += delta as u64;
                } else {
                    added[k].1 += delta.unsigned_abs();
                }
            }
        }
    }
    let element = ctx.product(
        &word
            .iter()
            .map(|l| if l.inverse { ctx.inv(&gens[l.index]) } else { gens[l.index].clone() })
            .collect::<Vec<_>>(),
    );
    let nf = p.normal_form_element(&exponents);
    if nf != element {
        return Err(Error::domain(format!("collecting produced {nf}, word evaluates to {element}")));
    }
    let drift: Vec<u64> = added.iter().map(|&(a, b)| a.max(b)).collect();
    let drift_bound: Vec<Rational> = lengths_q.iter().map(|m| m / d).collect();
    let within_bound = drift.iter().zip(&drift_bound).map(|(&x, b)| Rational::from_integer(x.into()) <= *b).collect();
    Ok(CollectReport { exponents, letter_counts: counts, added, drift, drift_bound, within_bound, element })
}

/// Letters from signed 1-based indices, so `[1, -2]` is `u_1 u_2^-1`.
pub fn letters_from_signed(word: &[i64]) -> Result<Vec<Letter>> {
    word.iter()
        .map(|&x| {
            let idx = x.unsigned_abs().to_usize().filter(|&i| i > 0).ok_or_else(|| Error::domain("letter 0"))?;
            Ok(Letter::new(idx - 1, x < 0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupContext;
    use crate::rational::int;

    fn heis_p() -> Progression {
        let g = |a, b, c| GroupElement::Heisenberg([a, b, c]);
        Progression::new(
            &GroupContext::Heisenberg,
            vec![g(1, 0, 0), g(0, 1, 0), g(0, 0, 1)],
            vec![int(4), int(4), int(16)],
        )
        .unwrap()
    }

    #[test]
    fn ordered_word_is_unchanged() {
        let p = heis_p();
        let r = collect(&letters_from_signed(&[1, 2]).unwrap(), &p, p.lengths(), &int(1)).unwrap();
        assert_eq!(r.exponents, vec![1, 1, 0]);
        assert_eq!(r.element, GroupElement::Heisenberg([1, 1, 1]));
    }

    #[test]
    fn swapped_word_picks_up_central_factor() {
        let p = heis_p();
        let r = collect(&letters_from_signed(&[2, 1]).unwrap(), &p, p.lengths(), &int(1)).unwrap();
        assert_eq!(r.exponents, vec![1, 1, -1]);
        assert_eq!(r.element, GroupElement::Heisenberg([1, 1, 0]));
        assert_eq!(r.drift, vec![0, 0, 1]);
    }

    #[test]
    fn empty_word() {
        let p = heis_p();
        let r = collect(&[], &p, p.lengths(), &int(1)).unwrap();
        assert_eq!(r.exponents, vec![0, 0, 0]);
        assert!(GroupContext::Heisenberg.is_identity(&r.element));
    }

    #[test]
    fn mixed_signs() {
        let p = heis_p();
        let w = letters_from_signed(&[-2, 3, 1, 1, -3, 2, -1, -2, 1]).unwrap();
        let r = collect(&w, &p, p.lengths(), &int(2)).unwrap();
        assert_eq!(p.normal_form_element(&r.exponents), r.element);
    }

    #[test]
    fn rejects_higher_step() {
        let ctx = GroupContext::symmetric(3).unwrap();
        let p = Progression::new(
            &ctx,
            vec![GroupElement::Perm(vec![1, 0, 2]), GroupElement::Perm(vec![1, 2, 0])],
            vec![int(1), int(1)],
        )
        .unwrap();
        let w = letters_from_signed(&[2, 1]).unwrap();
        assert!(matches!(collect(&w, &p, p.lengths(), &int(1)), Err(Error::Unsupported(_))));
    }
}
