//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by geometry, quadrature and solver routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The point is on or outside the domain boundary where a strictly
    /// interior point is required.
    #[error("point {point:?} is not strictly interior (signed margin {margin:.3e})")]
    Domain { point: [f64; 3], margin: f64 },

    /// A zero velocity was passed where a ray direction is required.
    #[error("velocity is zero; backward characteristic is undefined")]
    DegenerateVelocity,

    /// Coincident velocities passed to a collision map or kernel.
    #[error("coincident velocities; collision geometry is degenerate")]
    DegenerateCollision,

    /// An adaptive quadrature failed to reach its tolerance.
    #[error("quadrature did not converge: estimated error {estimate:.3e} > tolerance {tolerance:.3e} after {panels} panels")]
    Quadrature {
        estimate: f64,
        tolerance: f64,
        panels: usize,
    },

    /// A field or kernel table was used with a grid it does not belong to.
    #[error("grid mismatch: {0}")]
    Grid(String),

    /// The fixed-point iteration diverged.
    #[error("iteration is not contractive (spectral radius estimate {rho_estimate:.4})")]
    NonContractive { rho_estimate: f64 },

    /// Not enough iterates recorded to fit the requested bound.
    #[error("insufficient data: {needed} iterates required, {got} recorded")]
    InsufficientData { needed: usize, got: usize },

    /// The projection basis for the coercivity probe is ill conditioned.
    #[error("projection basis ill conditioned (Gram condition {condition:.3e})")]
    Basis { condition: f64 },

    /// A probe ran but could not certify its conclusion.
    #[error("probe inconclusive: {0}")]
    ProbeInconclusive(String),

    /// Invalid configuration value.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
