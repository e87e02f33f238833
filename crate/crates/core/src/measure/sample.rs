//! Seeded Monte Carlo estimates of concentration.
//!
//! Trials are split into fixed-size blocks; block `b` draws from a ChaCha8
//! stream keyed by `(seed, b)`. The block layout does not depend on the
//! number of worker threads, so results are reproducible bit for bit.

use alloc::vec::Vec;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Measure, WalkSpec};
use crate::error::{Error, Result};
use crate::group::{GroupContext, GroupElement};
use crate::ElementMap;

const BLOCK: usize = 1 << 12;

/// Sample statistics of the walk's endpoint distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloEstimate {
    /// Number of steps multiplied.
    pub steps: usize,
    pub trials: u64,
    /// Unbiased estimate of `sum_g P(g)^2`: colliding ordered pairs over all ordered pairs.
    pub collision: f64,
    /// Largest bin count divided by `trials`.
    pub max_bin: f64,
    pub distinct: usize,
}

struct Sampler {
    elems: Vec<GroupElement>,
    cumulative: Vec<u64>,
    den: u64,
}

impl Sampler {
    fn new(m: &Measure) -> Result<Self> {
        let den = m
            .denominator()
            .to_u64()
            .ok_or_else(|| Error::Unsupported("sampling needs step denominators below 2^64".into()))?;
        let mut elems = Vec::with_capacity(m.len());
        let mut cumulative = Vec::with_capacity(m.len());
        let mut acc = 0u64;
        for g in m.sorted_support() {
            acc += m.raw_atoms()[&g].to_u64().expect("numerator below denominator");
            elems.push(g);
            cumulative.push(acc);
        }
        Ok(Sampler { elems, cumulative, den })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> &GroupElement {
        let r = rng.random_range(0..self.den);
        let i = self.cumulative.partition_point(|&c| c <= r);
        &self.elems[i]
    }
}

struct Block {
    rng: ChaCha8Rng,
    current: Vec<GroupElement>,
}

fn advance(ctx: &GroupContext, sampler: &Sampler, block: &mut Block) {
    for x in block.current.iter_mut() {
        let g = sampler.draw(&mut block.rng);
        *x = ctx.mul(g, x);
    }
}

fn count(block: &Block) -> ElementMap<u64> {
    let mut m = ElementMap::default();
    for x in &block.current {
        *m.entry(x.clone()).or_insert(0) += 1;
    }
    m
}

fn estimate(steps: usize, trials: u64, counts: &ElementMap<u64>) -> MonteCarloEstimate {
    let mut pairs = 0u128;
    let mut max = 0u64;
    for &c in counts.values() {
        pairs += c as u128 * (c as u128 - 1);
        max = max.max(c);
    }
    let all = trials as u128 * (trials as u128 - 1);
    MonteCarloEstimate {
        steps,
        trials,
        collision: pairs as f64 / all as f64,
        max_bin: max as f64 / trials as f64,
        distinct: counts.len(),
    }
}

/// Estimates for the endpoint of the walk after `1, 2, ..., n` steps
/// (products `g_k ... g_1`). When `every_step` is false only the final
/// estimate is produced.
pub fn monte_carlo_profile(
    walk: &WalkSpec,
    trials: u64,
    seed: u64,
    every_step: bool,
) -> Result<Vec<MonteCarloEstimate>> {
    if trials < 2 {
        return Err(Error::domain("Monte Carlo needs at least 2 trials"));
    }
    let samplers = walk.steps().iter().map(Sampler::new).collect::<Result<Vec<_>>>()?;
    let ctx = walk.ctx();
    let trials_usize = usize::try_from(trials).map_err(|_| Error::domain("too many trials"))?;
    let n_blocks = trials_usize.div_ceil(BLOCK);
    let mut blocks: Vec<Block> = (0..n_blocks)
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let size = BLOCK.min(trials_usize - b * BLOCK);
            Block { rng, current: alloc::vec![ctx.identity(); size] }
        })
        .collect();
    let mut out = Vec::new();
    for (k, sampler) in samplers.iter().enumerate() {
        let last = k + 1 == samplers.len();
        #[cfg(feature = "rayon")]
        {
            use rayon::prelude::*;
            blocks.par_iter_mut().for_each(|b| advance(ctx, sampler, b));
        }
        #[cfg(not(feature = "rayon"))]
        for b in blocks.iter_mut() {
            advance(ctx, sampler, b);
        }
        if every_step || last {
            #[cfg(feature = "rayon")]
            let parts: Vec<ElementMap<u64>> = {
                use rayon::prelude::*;
                blocks.par_iter().map(count).collect()
            };
            #[cfg(not(feature = "rayon"))]
            let parts: Vec<ElementMap<u64>> = blocks.iter().map(count).collect();
            let mut merged = ElementMap::default();
            for part in parts {
                for (g, c) in part {
                    *merged.entry(g).or_insert(0) += c;
                }
            }
            out.push(estimate(k + 1, trials, &merged));
        }
    }
    Ok(out)
}

/// Collision and max-bin estimates for the whole walk.
pub fn rho_monte_carlo(walk: &WalkSpec, trials: u64, seed: u64) -> Result<MonteCarloEstimate> {
    Ok(monte_carlo_profile(walk, trials, seed, false)?.pop().expect("walk has steps"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::sign_walk;
    use crate::rational::int;

    #[test]
    fn point_mass_collides_always() {
        let ctx = GroupContext::Heisenberg;
        let d = Measure::delta(&ctx, GroupElement::Heisenberg([1, 1, 0])).unwrap();
        let w = WalkSpec::new(&ctx, alloc::vec![d], int(0)).unwrap();
        let e = rho_monte_carlo(&w, 1000, 7).unwrap();
        assert_eq!(e.collision, 1.0);
        assert_eq!(e.max_bin, 1.0);
    }

    #[test]
    fn two_step_sign_walk() {
        let w = sign_walk(&[1, 1]).unwrap();
        let e = rho_monte_carlo(&w, 100_000, 42).unwrap();
        assert!((e.collision - 0.375).abs() < 5e-3, "{}", e.collision);
        assert_eq!(e, rho_monte_carlo(&w, 100_000, 42).unwrap());
    }

    #[test]
    fn two_trials_is_fine() {
        let w = sign_walk(&[1, 2, 3]).unwrap();
        let e = rho_monte_carlo(&w, 2, 1).unwrap();
        assert_eq!(e.trials, 2);
        assert!(rho_monte_carlo(&w, 1, 1).is_err());
    }
}
