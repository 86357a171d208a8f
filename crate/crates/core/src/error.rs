use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rational literal `{0}`")]
    ParseRational(String),

    #[error("invalid sequence index `{0}`: indices start at 1")]
    BadIndex(String),

    #[error("block {block} has {len} coordinates, expected {block}")]
    BlockLength { block: usize, len: usize },

    #[error("exponent p must exceed 1, got {0}")]
    ExponentTooSmall(String),

    #[error("functional acts on {expected} elements")]
    SpaceMismatch { expected: &'static str },

    #[error("no weight given for nonzero block {0}")]
    MissingWeight(usize),

    #[error("normalized defect is undefined when both arguments vanish")]
    ZeroArguments,

    #[error("vector {0} does not have coordinate sum zero")]
    NotMeanZero(usize),

    #[error("vector {0} is zero")]
    ZeroVector(usize),

    #[error("supports of vectors {0} and {1} are not strictly increasing")]
    SupportOrder(usize, usize),

    #[error("vectors are linearly dependent")]
    Dependent,

    #[error("vector is outside the span of the split map basis")]
    OutsideSpan,

    #[error("pair {0}: the map vanishes on the second vector but not on the first")]
    KernelUnsolvable(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid certificate: {0}")]
    Certificate(String),

    #[error(
        "level {level}: need {needed} vectors to the right of index {tail}, \
         only {found} remain in the supply"
    )]
    SupplyExhausted {
        level: usize,
        needed: usize,
        found: usize,
        tail: usize,
    },

    #[error(
        "level {level}: coefficient mass {best_mass:.6e} reaches the budget {eta:.6e} \
         (multiplier {multiplier}); the basis constant was underestimated"
    )]
    MassCondition {
        level: usize,
        multiplier: u64,
        best_mass: f64,
        eta: f64,
    },

    #[error("functional must be normalized to quasi-additivity constant 1, found {0}")]
    NotNormalized(f64),

    #[error("split map defect {0} exceeds 1 after normalization")]
    SplitDefect(f64),

    #[error("split map does not vanish on x_{0}")]
    NotInKernel(usize),

    #[error("premise violated: {0}")]
    Premise(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
