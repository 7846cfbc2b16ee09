//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("atom value {0} is not a finite nonnegative real")]
    NegativeValue(f64),
    #[error("atom probability {0} is not in (0, 1]")]
    NonpositiveProbability(f64),
    #[error("atom probabilities sum to {0}, expected 1 within 1e-12")]
    ProbabilitySumMismatch(f64),
    #[error("distribution mean is {0}, expected 1 within 1e-9")]
    MeanNotOne(f64),
    #[error("distribution is degenerate: E|X-1| vanishes")]
    DegenerateDistribution,
    #[error("no truncation level within the probed grid keeps the tail below mu/4")]
    NoFiniteTruncation,

    #[error("lambda = {0} must lie in [0, 1)")]
    LambdaOutOfRange(f64),
    #[error("mu = {0} must be positive")]
    NonpositiveMu(f64),
    #[error("truncation level A = {0} must be positive")]
    NonpositiveTruncation(f64),
    #[error("profile eps {found:e} does not match the default eps {expected:e}")]
    ProfileEpsMismatch { found: f64, expected: f64 },
    #[error("eps = {0} must lie in (0, 1/8)")]
    EpsTooLarge(f64),
    #[error("no k up to {0} satisfies the geometric-decay condition")]
    KOverflow(u32),
    #[error("k = {0} must be at least 1")]
    InvalidK(u32),
    #[error("truncation tail {tail} exceeds mu/4 = {bound}")]
    TruncationInvalid { tail: f64, bound: f64 },

    #[error("enumeration of {0:e} outcomes exceeds the budget of 1e7")]
    EnumerationTooLarge(f64),
    #[error("operation requires a finite-support distribution")]
    NotFiniteSupport,
    #[error("coefficient vector has zero l1 mass")]
    ZeroCoefficients,
    #[error("coefficient entry is not finite")]
    NonFiniteCoefficient,
    #[error("n = {0} is outside the exact enumeration range 1..=20")]
    NTooLarge(u32),

    #[error("frequency ratio {succ}/{pred} is below 3")]
    RatioTooSmall { pred: u64, succ: u64 },
    #[error("frequency sequence is not strictly increasing at index {0}")]
    NotIncreasing(usize),
    #[error("frequency {0} is not a positive integer")]
    NonpositiveEntry(i64),
    #[error("{got} coefficients need {need} frequencies but the sequence has {have}")]
    CoefficientLengthMismatch {
        got: usize,
        need: usize,
        have: usize,
    },
    #[error("quadrature grid would exceed 2^28 points before reaching the tolerance")]
    GridOverflow,

    #[error("requested oracle is unavailable: {0}")]
    OracleUnavailable(String),
    #[error("partial-sum bound C = {0} must be at least 1")]
    InfeasibleConstraints(f64),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid input file: {0}")]
    Parse(String),
}
