// SPDX-License-Identifier: Apache-2.0

//! Steering toolkit for a non-autonomous diffusion model on `[0, π]` with
//! delayed interval-valued forcing and impulsive state jumps.
//!
//! The model is desk-scale on purpose: the generator `a(t)·∂²/∂ξ²` with
//! Dirichlet ends diagonalizes in the sine basis, so the two-parameter
//! solution family acts as spectral multipliers `exp(−n²·∫ₛᵗ a)`. Everything
//! else is built on top of that:
//!
//! * [`space`]: grid-sampled `L^p` states, duality pairings, the duality
//!   mapping, and the sine transform pair.
//! * [`evolution`]: coefficient specs, the multiplier family and its adjoint.
//! * [`history`]: exponentially weighted history norms, trajectory segments,
//!   and the fading-memory bound checker.
//! * [`inclusion`]: interval-valued right-hand sides, selection policies, and
//!   sampled selections along a trajectory.
//! * [`impulse`]: separable jump kernels applied through `cos²` of the state.
//! * [`steering`]: the control operator pair, the controllability Gramian,
//!   the duality-mapping resolvent, and the feedback law.
//! * [`solver`]: the impulsive mild-solution stepper and the fixed-point loop
//!   coupling trajectory, selection, and control.
//! * [`config`] / [`report`] / [`checks`]: run configuration, CSV/JSON/SVG
//!   emission, and the invariant suites behind the `check` subcommand.
//!
//! The crate ships runnable walkthroughs under `examples/`; start with
//! `evolution_family` and `lambda_sweep`.

use thiserror::Error;

pub mod checks;
pub mod config;
pub mod evolution;
pub mod history;
pub mod impulse;
pub mod inclusion;
pub mod quad;
pub mod report;
pub mod solver;
pub mod space;
pub mod steering;

pub use config::RunConfig;
pub use evolution::{Coefficient, EvolutionFamily};
pub use history::{HistoryKind, HistorySegment, PiecewiseTrajectory};
pub use impulse::{Impulse, ImpulseSet};
pub use inclusion::{Envelope, InclusionSpec, SelectionPolicy, Selector, TimeWeight};
pub use solver::{GammaOptions, SolveReport, TimeGrid};
pub use space::{DualVector, Grid, ModeVector, SineBasis, StateVector};
pub use steering::{ControlVector, Gramian, SteeringLaw};

/// Crate-wide error type. Variants map onto the CLI exit codes documented in
/// the README: configuration problems exit 2, invariant failures exit 3, and
/// solver non-convergence exits 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("time ordering violated: s = {s} must not exceed t = {t}")]
    TimeOrder { s: f64, t: f64 },
    #[error("outside domain: {0}")]
    Domain(String),
    #[error("history window too short: need {needed}, have {have}")]
    Window { needed: f64, have: f64 },
    #[error("mode truncation not resolvable: {0}")]
    Resolution(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver did not converge: {0}")]
    SolverFailure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
