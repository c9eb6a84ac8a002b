use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("tail exponent alpha = 1 is not supported")]
    AlphaOne,
    #[error("kernel is not normalizable: {0}")]
    NotNormalizable(String),
    #[error("horizon {horizon} exceeds tabulated range {n_max}")]
    HorizonTooLarge { horizon: usize, n_max: usize },
    #[error("renewal function vanishes at {0}")]
    ZeroRenewalMass(usize),
    #[error("terminating chain: escape probability {0:e} within horizon")]
    TerminatingChain(f64),
    #[error("times must be strictly increasing and inside the horizon")]
    BadTimes,
    #[error("resolution {resolution:e} too coarse for dyadic level {level}")]
    ResolutionTooCoarse { resolution: f64, level: u32 },
    #[error("point ({s}, {t}) is off the evaluation grid")]
    OffGrid { s: f64, t: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("sample too small: {got} < {need}")]
    SampleTooSmall { got: usize, need: usize },
    #[error("enumeration too large: r = {r} > {max}")]
    EnumerationTooLarge { r: usize, max: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
