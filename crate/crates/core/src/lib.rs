//! Exact concentration probabilities for inhomogeneous random walks on
//! concrete groups, together with the structural toolkit used to explain
//! large concentration: nilprogressions and their norms, the concentration
//! semi-metric `d_mu`, typical pairs, approximate-group covers, translate
//! collections and coset spanning trees.
//!
//! Everything is exact: group elements have canonical integer or rational
//! representations and probability weights are arbitrary-precision rationals.
//! Square roots only appear at reporting boundaries.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command-line
//! front end and parallel drivers live in the companion `nilwalk-cli` crate;
//! the optional `rayon` feature parallelizes candidate scoring and Monte Carlo
//! sampling with a deterministic merge.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod bounds;
pub mod error;
pub mod group;
pub mod measure;
pub mod nilprog;
pub mod rational;
pub mod segments;
pub mod sl2;
pub mod stats;
pub mod structure;

pub use error::{Error, Result};
pub use group::{GroupContext, GroupElement};
pub use measure::{Measure, NormTriple, WalkSpec};
pub use rational::Rational;

/// Hash map keyed by group elements. The hasher is unseeded, so iteration order
/// is a function of the inserted keys only.
pub type ElementMap<V> = hashbrown::HashMap<GroupElement, V, rustc_hash::FxBuildHasher>;
/// Hash set of group elements.
pub type ElementSet = hashbrown::HashSet<GroupElement, rustc_hash::FxBuildHasher>;

/// Default cap on support sizes and enumerations.
pub const DEFAULT_CAP: usize = 1_000_000;
/// Default cap on ball enumerations.
pub const DEFAULT_BALL_CAP: usize = 10_000_000;
