use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("radius {r} is outside the domain (0, inf)")]
    Domain { r: f64 },

    #[error("angular quantum number k must be nonzero")]
    ZeroAngularNumber,

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid sampled function: {0}")]
    InvalidSamples(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("grids do not match: {0}")]
    GridMismatch(String),

    #[error("derivative samples are required but absent")]
    MissingDerivative,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("m and q differ at r = {r}: m = {m}, q = {q}")]
    MassPotentialMismatch { r: f64, m: f64, q: f64 },

    #[error("denominator {what} is nonpositive at r = {r}")]
    NonpositiveDenominator { what: &'static str, r: f64 },

    #[error("Q is nonpositive at r = {r}")]
    NonpositivePotential { r: f64 },

    #[error("r0 = {r0} is too large for the near-origin expansion; try r0 <= {suggested}")]
    FrobeniusRadius { r0: f64, suggested: f64 },

    #[error("|L/Q| = {ratio} exceeds 1/2 at r = {r}")]
    CensusGuard { r: f64, ratio: f64 },

    #[error("initial data are nearly linearly dependent (|W| = {wronskian})")]
    DependentData { wronskian: f64 },

    #[error("gamma = 2q - lambda never becomes positive on the probe ladder")]
    GammaNonpositive,

    #[error("step size underflow at r = {r}")]
    StepUnderflow { r: f64 },

    #[error("certificate refused: {0}")]
    CertificateRefused(String),
}

pub type Result<T> = std::result::Result<T, Error>;
