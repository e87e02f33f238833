//! The inverse-theorem toolkit: multiplicative energy, truncation, covers,
//! translate collections, the coset tree and end-to-end detection.

mod cover;
mod detect;
mod energy;
mod translates;
mod tree;

pub use cover::{approx_group_cover, ApproxGroupCover};
pub use detect::{
    default_catalog, detect_structure, verify_conclusion, AtypicalMass, Candidate, CandidateScore, ConclusionCheck,
    DetectParams, EnergyCheck, PairRecord, StructureReport,
};
pub use energy::{mult_energy, truncate_measure, SubMeasure, Truncation, TruncationParams};
pub use translates::{
    maximal_disjoint_translates, nested_collections, stabilization_level, stabilize_collections, DistanceCache, HpSets,
    Stabilization, TranslateCollection,
};
pub use tree::{build_coset_tree, representative_set, CosetTree, TreeEdge};
