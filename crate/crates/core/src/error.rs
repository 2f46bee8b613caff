use thiserror::Error;

/// Errors raised by dictionary construction, the solver and the certificate engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("atom {index} has norm {norm:e}, below the zero-atom floor")]
    ZeroAtom { index: usize, norm: f64 },

    #[error("atom {index} is not unit-normed (gram diagonal {value})")]
    NotUnitNorm { index: usize, value: f64 },

    #[error("dictionary was built from closed-form correlations and carries no atom samples")]
    MissingSamples,

    #[error("length mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("selected sub-gram is numerically singular (condition estimate {condition:e})")]
    SingularProjection { condition: f64 },

    #[error("invalid model parameters: {0}")]
    InvalidModelParams(String),

    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("theorem hypothesis violated: in-support correlation sum {neumann_in} >= 1")]
    HypothesisViolated { neumann_in: f64 },

    #[error("no root of the correlation derivative bracketed")]
    NoRootBracketed,

    #[error("separation {rho} is not a multiple of the lattice refinement {delta} greater than it")]
    InvalidSeparation { rho: f64, delta: f64 },

    #[error("particle at ({x}, {y}) lies outside the sensor field")]
    OutOfField { x: f64, y: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
