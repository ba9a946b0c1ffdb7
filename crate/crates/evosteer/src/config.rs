// SPDX-License-Identifier: Apache-2.0

//! Run configuration: a TOML schema that assembles the model objects.
//!
//! A config names the function space and truncation, the diffusion
//! coefficient, the history profile, an optional interval forcing with its
//! selection policy, an impulse train, the target state, the λ grid, and
//! the solver knobs. [`RunConfig::validate`] front-loads every constraint
//! it can check statically so that a bad file fails before any numerics
//! run; the `to_*` builders then hand out ready model objects.
//!
//! The `schema` field pins the layout (`"evosteer/1"`); anything else is
//! rejected so stale files do not get silently reinterpreted.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::evolution::{Coefficient, EvolutionFamily};
use crate::history::{auto_window, build_history, HistoryKind, HistorySegment};
use crate::impulse::{Impulse, ImpulseSet};
use crate::inclusion::{Envelope, InclusionSpec, SelectionPolicy, TimeWeight};
use crate::solver::{GammaOptions, TimeGrid};
use crate::space::{Grid, ModeVector, SineBasis};
use crate::steering::ResolventOptions;
use crate::{Error, Result};

pub const SCHEMA: &str = "evosteer/1";

fn default_window() -> f64 {
    0.0
}
fn default_sigma_floor() -> f64 {
    1e-6
}
fn default_uc_samples() -> usize {
    64
}
fn default_tol() -> f64 {
    1e-8
}
fn default_max_outer() -> usize {
    60
}
fn default_newton_tol() -> f64 {
    1e-10
}
fn default_newton_max_iter() -> usize {
    100
}
fn default_quad_tol() -> f64 {
    1e-13
}
fn default_tail_tol() -> f64 {
    1e-12
}
fn default_fading_samples() -> usize {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSection {
    /// Lebesgue exponent of the state space; must exceed 1.
    pub p: f64,
    /// Mode truncation.
    pub modes: usize,
    /// Spatial sample count.
    pub grid_points: usize,
    /// Final time `T`.
    pub horizon: f64,
    /// Optional declared modulus of continuity for the coefficient,
    /// audited by the check suite: `|a(t) − a(s)| ≤ c·|t − s|^κ`.
    #[serde(default)]
    pub modulus_order: Option<f64>,
    #[serde(default)]
    pub modulus_constant: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistorySection {
    /// Decay rate of the history weight `e^{νθ}`.
    pub nu: f64,
    /// Sampling step for the tabulated profile.
    pub step: f64,
    /// Window length; 0 picks `max(r, ln(1/tail_tol)/ν)` automatically.
    #[serde(default = "default_window")]
    pub window: f64,
    pub profile: HistoryKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InclusionSection {
    pub envelope: Envelope,
    pub beta: TimeWeight,
    /// Delay `r` of the state argument.
    pub delay: f64,
    pub policy: SelectionPolicy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpec {
    /// `amplitude · w_mode`.
    Mode { mode: usize, amplitude: f64 },
    /// Explicit leading coefficients, zero-padded to the truncation.
    Coeffs { coeffs: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteeringSection {
    /// Regularization values, strictly positive and strictly decreasing.
    pub lambdas: Vec<f64>,
    #[serde(default = "default_sigma_floor")]
    pub sigma_floor: f64,
    #[serde(default = "default_uc_samples")]
    pub uc_samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSection {
    /// Time steps of the uniform grid.
    pub steps: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_outer")]
    pub max_outer: usize,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    #[serde(default = "default_quad_tol")]
    pub quad_tol: f64,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    #[serde(default = "default_fading_samples")]
    pub fading_samples: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OutputSection {
    /// Base seed for the selection streams.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema: String,
    pub model: ModelSection,
    pub coefficient: Coefficient,
    pub history: HistorySection,
    #[serde(default)]
    pub inclusion: Option<InclusionSection>,
    #[serde(default, rename = "impulse")]
    pub impulses: Vec<Impulse>,
    pub target: TargetSpec,
    pub steering: SteeringSection,
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("parse failure: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.schema != SCHEMA {
            return fail(format!(
                "schema \"{}\" not understood; this build reads \"{SCHEMA}\"",
                self.schema
            ));
        }
        let m = &self.model;
        if !(m.p.is_finite() && m.p > 1.0) {
            return fail(format!(
                "exponent p = {} is outside (1, ∞); the duality mapping needs p > 1",
                m.p
            ));
        }
        if m.modes < 2 {
            return fail("need at least two modes for the control block".into());
        }
        if m.grid_points < 4 || m.modes > m.grid_points / 2 {
            return fail(format!(
                "grid_points = {} cannot resolve {} modes; need grid_points ≥ 2·modes",
                m.grid_points, m.modes
            ));
        }
        if !(m.horizon.is_finite() && m.horizon > 0.0) {
            return fail(format!("horizon {} must be positive", m.horizon));
        }
        if let (Some(k), c) = (m.modulus_order, m.modulus_constant) {
            if !(k > 0.0 && k <= 1.0) {
                return fail(format!("modulus order {k} must lie in (0, 1]"));
            }
            if c.is_none() {
                return fail("modulus_order declared without modulus_constant".into());
            }
        }

        self.coefficient
            .validate(m.horizon)
            .map_err(|e| Error::Config(format!("coefficient: {e}")))?;

        let h = &self.history;
        if !(h.nu.is_finite() && h.nu > 0.0) {
            return fail(format!("history weight rate ν = {} must be positive", h.nu));
        }
        if !(h.step > 0.0) {
            return fail("history sampling step must be positive".into());
        }
        if h.window < 0.0 {
            return fail("history window must be nonnegative (0 = automatic)".into());
        }
        if let HistoryKind::DecayingMode { mode, .. } = h.profile {
            if mode == 0 || mode > m.modes {
                return fail(format!("history profile mode {mode} outside 1..={}", m.modes));
            }
        }

        if let Some(inc) = &self.inclusion {
            inc.envelope
                .validate()
                .map_err(|e| Error::Config(format!("envelope: {e}")))?;
            inc.beta
                .validate()
                .map_err(|e| Error::Config(format!("time weight: {e}")))?;
            inc.policy
                .validate()
                .map_err(|e| Error::Config(format!("selection policy: {e}")))?;
            if !(inc.delay.is_finite() && inc.delay > 0.0) {
                return fail(format!("delay {} must be positive", inc.delay));
            }
            if self.history.window > 0.0 && inc.delay > self.history.window {
                return fail(format!(
                    "delay {} exceeds the declared history window {}",
                    inc.delay, self.history.window
                ));
            }
        }

        // Impulse trains are validated by the builder; surface its message
        // as a config error with the grid check on top.
        let set = ImpulseSet::new(self.impulses.clone(), m.horizon)
            .map_err(|e| Error::Config(format!("impulses: {e}")))?;
        TimeGrid::new(m.horizon, self.solver.steps.max(2), &set)
            .map_err(|e| Error::Config(format!("time grid: {e}")))?;

        match &self.target {
            TargetSpec::Mode { mode, amplitude } => {
                if *mode == 0 || *mode > m.modes {
                    return fail(format!("target mode {mode} outside 1..={}", m.modes));
                }
                if !amplitude.is_finite() {
                    return fail("target amplitude must be finite".into());
                }
            }
            TargetSpec::Coeffs { coeffs } => {
                if coeffs.is_empty() || coeffs.len() > m.modes {
                    return fail(format!(
                        "target coefficient list must have 1..={} entries",
                        m.modes
                    ));
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return fail("target coefficients must be finite".into());
                }
            }
        }

        let s = &self.steering;
        if s.lambdas.is_empty() {
            return fail("at least one λ value required".into());
        }
        if s.lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return fail("λ values must be positive".into());
        }
        if s.lambdas.windows(2).any(|w| w[1] >= w[0]) {
            return fail("λ values must be strictly decreasing".into());
        }
        if !(s.sigma_floor >= 0.0) {
            return fail("σ floor must be nonnegative".into());
        }
        if s.uc_samples < 2 {
            return fail("observability probe needs at least two samples".into());
        }

        let sv = &self.solver;
        if sv.steps < 2 {
            return fail("need at least two time steps".into());
        }
        for (name, v) in [
            ("tol", sv.tol),
            ("newton_tol", sv.newton_tol),
            ("quad_tol", sv.quad_tol),
            ("tail_tol", sv.tail_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("solver.{name} = {v} must be positive"));
            }
        }
        if sv.max_outer == 0 || sv.newton_max_iter == 0 {
            return fail("iteration limits must be at least one".into());
        }
        if sv.fading_samples == 0 {
            return fail("fading_samples must be at least one".into());
        }
        Ok(())
    }

    pub fn to_family(&self) -> Result<EvolutionFamily> {
        EvolutionFamily::new(
            self.coefficient.clone(),
            self.model.horizon,
            self.model.modes,
        )
    }

    pub fn to_grid(&self) -> Result<Arc<Grid>> {
        Grid::uniform(self.model.grid_points)
    }

    pub fn to_basis(&self) -> Result<SineBasis> {
        SineBasis::new(self.to_grid()?, self.model.modes)
    }

    /// Effective history window: the declared one, or the automatic choice
    /// covering the delay with a kernel tail below `tail_tol`.
    pub fn history_window(&self) -> f64 {
        if self.history.window > 0.0 {
            self.history.window
        } else {
            let r = self.inclusion.as_ref().map(|i| i.delay).unwrap_or(0.0);
            auto_window(r, self.history.nu, self.solver.tail_tol)
        }
    }

    pub fn to_history(&self, basis: &SineBasis) -> Result<HistorySegment> {
        build_history(
            &self.history.profile,
            self.history_window(),
            self.history.step,
            basis,
            self.model.p,
        )
    }

    pub fn to_inclusion(&self) -> Result<Option<InclusionSpec>> {
        match &self.inclusion {
            None => Ok(None),
            Some(sec) => Ok(Some(InclusionSpec::new(
                sec.envelope.clone(),
                sec.beta.clone(),
                sec.delay,
            )?)),
        }
    }

    pub fn to_impulses(&self) -> Result<ImpulseSet> {
        ImpulseSet::new(self.impulses.clone(), self.model.horizon)
    }

    pub fn to_time_grid(&self, impulses: &ImpulseSet) -> Result<TimeGrid> {
        TimeGrid::new(self.model.horizon, self.solver.steps, impulses)
    }

    pub fn target_modes(&self) -> ModeVector {
        let n = self.model.modes;
        match &self.target {
            TargetSpec::Mode { mode, amplitude } => ModeVector::unit(n, *mode).scaled(*amplitude),
            TargetSpec::Coeffs { coeffs } => {
                let mut out = ModeVector::zeros(n);
                for (i, c) in coeffs.iter().enumerate() {
                    out.0[i] = *c;
                }
                out
            }
        }
    }

    pub fn gamma_options(&self) -> GammaOptions {
        GammaOptions {
            tol: self.solver.tol,
            max_outer: self.solver.max_outer,
            resolvent: ResolventOptions {
                newton_tol: self.solver.newton_tol,
                newton_max_iter: self.solver.newton_max_iter,
            },
            quad_tol: self.solver.quad_tol,
            fading_samples: self.solver.fading_samples,
        }
    }

    /// Selection policy with the CLI seed override folded in.
    pub fn selection_policy(&self, seed_override: Option<u64>) -> SelectionPolicy {
        let policy = self
            .inclusion
            .as_ref()
            .map(|i| i.policy.clone())
            .unwrap_or(SelectionPolicy::Midpoint);
        match (policy, seed_override) {
            (SelectionPolicy::SeededRandom { .. }, Some(seed)) => {
                SelectionPolicy::SeededRandom { seed }
            }
            (p, _) => p,
        }
    }

    /// Base seed for sweep rows, CLI override first.
    pub fn effective_seed(&self, seed_override: Option<u64>) -> u64 {
        seed_override.unwrap_or(self.output.seed)
    }
}
