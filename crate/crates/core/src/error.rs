//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T, E = CsfError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CsfError {
    /// A polar angle of the sphere chart came within the pole margin.
    #[error("polar angle {angle} at coordinate {coord} is within {margin} of a pole")]
    PoleProximity { coord: usize, angle: f64, margin: f64 },

    #[error("edge {index} has length {length:e}, at or below the degeneracy floor")]
    DegenerateEdge { index: usize, length: f64 },

    #[error("non-finite value produced ({context})")]
    NonFinite { context: String },

    #[error("shape mismatch: expected {expected} nodes, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    /// Omega(T) dropped to or below the positivity floor, so mu is undefined.
    #[error("Omega(T) minimum {min:e} is not above the positivity floor {floor:e}")]
    NonPositiveOmega { min: f64, floor: f64 },

    #[error("need at least {needed} uniformly spaced samples, found {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CsfError {
    /// Short machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            CsfError::PoleProximity { .. } => "pole_proximity",
            CsfError::DegenerateEdge { .. } => "degenerate_edge",
            CsfError::NonFinite { .. } => "non_finite",
            CsfError::ShapeMismatch { .. } => "shape_mismatch",
            CsfError::NonPositiveOmega { .. } => "non_positive_omega",
            CsfError::InsufficientSamples { .. } => "insufficient_samples",
            CsfError::InvalidModel(_) => "invalid_model",
            CsfError::InvalidCurve(_) => "invalid_curve",
            CsfError::Config(_) => "config",
            CsfError::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for CsfError {
    fn from(e: std::io::Error) -> Self {
        CsfError::Io(e.to_string())
    }
}
