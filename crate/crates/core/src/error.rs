use thiserror::Error;

/// Errors produced by the probability objects, solvers and simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("alphabet mismatch: expected {expected}, found {found}")]
    AlphabetMismatch { expected: String, found: String },

    #[error("KL divergence undefined: q[{index}] = 0 but p[{index}] = {p}")]
    AbsoluteContinuityViolation { index: usize, p: f64 },

    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty sequence")]
    EmptySequence,

    #[error("symbol index {symbol} outside alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{solver} did not converge: {detail}")]
    NonConvergence { solver: &'static str, detail: String },

    #[error("distortion {distortion} is below the minimum achievable H(X|Y) = {minimum}")]
    InfeasibleDistortion { distortion: f64, minimum: f64 },

    #[error("alphabet too large for exhaustive search: {0}")]
    AlphabetTooLarge(String),

    #[error("grid with {points} points exceeds the oracle budget of {budget}")]
    GridTooFine { points: f64, budget: f64 },

    #[error("no coupling with the required marginals satisfies the bottleneck constraint")]
    InfeasibleCoupling,

    #[error("quadrature unstable: estimates {primary} and {check} disagree")]
    QuadratureUnstable { primary: f64, check: f64 },

    #[error("simulation needs about {required:.3e} operations, budget is {budget:.3e}")]
    BudgetExceeded { required: f64, budget: f64 },

    #[error("decoder configuration: {0}")]
    DecoderConfig(String),

    #[error("threshold decoder found {passing} passing codewords")]
    DecodeFailure { passing: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
