//! Pseudo-spectral simulation of the incompressible Navier–Stokes–Cahn–Hilliard
//! system on periodic boxes, together with the norm diagnostics, decay fits and
//! functional-inequality checks used to study its small-data behaviour.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: grids, fields, FFTs, Fourier multipliers, Leray projection,
//!   dealiased products and Sobolev/Lebesgue norms.
//! * [`model`]: potentials, chemical potential, Korteweg forcing and the
//!   right-hand sides (full and implicit/explicit split).
//! * [`integrator`]: first-order IMEX and classical RK4 time stepping.
//! * [`diagnostics`]: energies, the critical `X`/`Y` pair, negative-order
//!   norms and decay-exponent fitting.
//! * [`inequality`]: randomized checks of the interpolation, embedding and
//!   commutator inequalities.

pub mod diagnostics;
pub mod inequality;
pub mod integrator;
pub mod model;
pub mod spectral;

pub use diagnostics::{DecayFit, DiagnosticsRecord, DiagnosticsSpec};
pub use integrator::{Scheme, StepControls};
pub use model::{ModelParams, State};
pub use spectral::{Field, Grid, VectorField};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid parameter `{field}`: {reason}")]
    InvalidGrid { field: &'static str, reason: String },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("negative fractional power of a field with nonzero mean (mean {mean:e}, L2 norm {norm:e})")]
    NegativePowerOnNonzeroMean { mean: f64, norm: f64 },

    #[error("incompatible exponents: {reason} (residual {residual:e})")]
    InvalidExponent { reason: String, residual: f64 },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("time step diverged at t = {time}")]
    StepDiverged { time: f64 },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
