use thiserror::Error;

/// Errors produced while building or evaluating fractal curves and surfaces.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("need at least {required} knots, got {got}")]
    TooFewKnots { required: usize, got: usize },

    #[error("knot {index} is not finite")]
    NonFiniteKnot { index: usize },

    #[error("knots must be strictly increasing: x[{index}] = {value} does not exceed x[{prev}] = {prev_value}", prev = .index - 1)]
    NonMonotoneKnots {
        index: usize,
        value: f64,
        prev_value: f64,
    },

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{what}[{index}] = {value} is not finite")]
    NonFiniteValue {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("scaling factor alpha[{index}] = {value} violates cap {cap}")]
    ScalingCap { index: usize, value: f64, cap: f64 },

    #[error("scaling vector is not contractive: max |alpha| = {max_abs} >= 1")]
    NotContractive { max_abs: f64 },

    #[error("invalid shape parameter at subinterval {index}: {reason}")]
    InvalidShape { index: usize, reason: String },

    #[error(
        "matching condition fails at subinterval {index}: {side} endpoint off by {mismatch:e}"
    )]
    MatchingCondition {
        index: usize,
        side: &'static str,
        mismatch: f64,
    },

    #[error("subinterval index {index} out of range (have {count})")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("abscissa {x} lies outside [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fixed-point iteration did not converge in {iterations} iterations (last distance {last_distance:e})")]
    NonConvergence {
        iterations: usize,
        last_distance: f64,
    },

    #[error("constraint precondition violated at data indices {indices:?}: {reason}")]
    Constraint { indices: Vec<usize>, reason: String },

    #[error("{direction} grid line {line}: {source}")]
    GridLine {
        direction: &'static str,
        line: usize,
        source: Box<Error>,
    },

    #[error("query ({x}, {y}) is not on the sample lattice")]
    OffLattice { x: f64, y: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
