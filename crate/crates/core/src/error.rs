use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation (bad element,
    /// violated hypothesis, unnormalized measure, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An enumeration or convolution outgrew its configured cap.
    #[error("resource cap exceeded in {what}: cap {cap}, reached {reached}")]
    Resource { what: &'static str, cap: usize, reached: usize },

    /// The operation is not implemented for this input (e.g. collecting in step > 2).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The dyadic descent ran out of room before finding a flat window.
    #[error("no flat segment: {reason} (descent depth {})", chain.len())]
    NoFlatSegment { reason: String, chain: Vec<crate::segments::DescentLevel> },

    /// Nested translate collections did not stabilize within the level budget.
    #[error("collections did not stabilize within {} levels", level_sizes.len())]
    NoStabilization { level_sizes: Vec<usize> },

    /// No dilate up to the configured maximum contains the element.
    #[error("norm exceeds lambda_max = {0}")]
    ExceedsLambdaMax(crate::Rational),

    /// Structure detection found no catalog candidate meeting the score
    /// contract. This is not a proof that no structure exists.
    #[error("no structure found: {0}")]
    NoStructure(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn resource(what: &'static str, cap: usize, reached: usize) -> Self {
        Error::Resource { what, cap, reached }
    }
}
