// SPDX-License-Identifier: Apache-2.0

//! Interval-valued forcing terms and the selection policies that turn them
//! into single-valued integrands.
//!
//! The multivalued term has the separable form
//!
//! ```text
//! F(t, ψ)(ξ) = β(t) · [ env_lo(v(ξ)), env_hi(v(ξ)) ],   v = ψ(−r),
//! ```
//!
//! a pointwise interval around a bounded envelope of the delayed state. Every
//! selection is measurable and bounded by `γ(t) = β(t) · sup|env|`, which is
//! the integrable growth witness the solvability estimates want.
//!
//! A [`Selector`] picks one integrand from the field; the random policy draws
//! pointwise from a seeded generator so runs reproduce exactly.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::history::HistorySegment;
use crate::space::StateVector;
use crate::{Error, Result};

/// Pointwise envelope of the delayed state.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    /// The singleton `{0}`: switches the forcing off.
    Zero,
    /// Band of half-width `eps` around `tanh(v)`.
    TanhBand { eps: f64 },
    /// A state-independent interval `[lo, hi]`.
    ConstantBand { lo: f64, hi: f64 },
}

impl Envelope {
    pub fn validate(&self) -> Result<()> {
        match self {
            Envelope::Zero => Ok(()),
            Envelope::TanhBand { eps } => {
                if eps.is_finite() && *eps >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!("band half-width {eps}")))
                }
            }
            Envelope::ConstantBand { lo, hi } => {
                if lo.is_finite() && hi.is_finite() && lo <= hi {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!(
                        "constant band [{lo}, {hi}] is not an interval"
                    )))
                }
            }
        }
    }

    pub fn lower(&self, v: f64) -> f64 {
        match self {
            Envelope::Zero => 0.0,
            Envelope::TanhBand { eps } => v.tanh() - eps,
            Envelope::ConstantBand { lo, .. } => *lo,
        }
    }

    pub fn upper(&self, v: f64) -> f64 {
        match self {
            Envelope::Zero => 0.0,
            Envelope::TanhBand { eps } => v.tanh() + eps,
            Envelope::ConstantBand { hi, .. } => *hi,
        }
    }

    /// Uniform bound on `|env(v)|` over all states.
    pub fn sup_abs(&self) -> f64 {
        match self {
            Envelope::Zero => 0.0,
            Envelope::TanhBand { eps } => 1.0 + eps,
            Envelope::ConstantBand { lo, hi } => lo.abs().max(hi.abs()),
        }
    }
}

/// Time weight `β(t)` in front of the envelope.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeWeight {
    Constant { value: f64 },
    /// `value · e^{−rate·t}`.
    ExpDecay { value: f64, rate: f64 },
}

impl TimeWeight {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            TimeWeight::Constant { value } => value.is_finite() && *value >= 0.0,
            TimeWeight::ExpDecay { value, rate } => {
                value.is_finite() && *value >= 0.0 && rate.is_finite() && *rate >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("time weight must be finite and nonnegative".into()))
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            TimeWeight::Constant { value } => *value,
            TimeWeight::ExpDecay { value, rate } => value * (-rate * t).exp(),
        }
    }

    /// `∫_0^T β(t) dt`, exact.
    pub fn l1(&self, horizon: f64) -> f64 {
        match self {
            TimeWeight::Constant { value } => value * horizon,
            TimeWeight::ExpDecay { value, rate } => {
                if *rate == 0.0 {
                    value * horizon
                } else {
                    value * (-(-rate * horizon).exp_m1()) / rate
                }
            }
        }
    }
}

/// Pointwise interval bounds for the forcing at one time.
#[derive(Debug, Clone)]
pub struct IntervalField {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl IntervalField {
    pub fn width(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b - a)
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, values: &[f64], slack: f64) -> bool {
        values.len() == self.lo.len()
            && values
                .iter()
                .enumerate()
                .all(|(i, v)| self.lo[i] - slack <= *v && *v <= self.hi[i] + slack)
    }
}

/// The delayed interval forcing `β(t)·[env(ψ(−r))]`.
#[derive(Debug, Clone)]
pub struct InclusionSpec {
    envelope: Envelope,
    beta: TimeWeight,
    delay: f64,
}

impl InclusionSpec {
    pub fn new(envelope: Envelope, beta: TimeWeight, delay: f64) -> Result<Self> {
        envelope.validate()?;
        beta.validate()?;
        if !(delay.is_finite() && delay > 0.0) {
            return Err(Error::InvalidInput(format!("delay {delay} must be positive")));
        }
        Ok(InclusionSpec {
            envelope,
            beta,
            delay,
        })
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    pub fn beta(&self) -> &TimeWeight {
        &self.beta
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    /// Interval bounds given the already-extracted delayed state.
    pub fn field_at(&self, t: f64, delayed: &StateVector) -> IntervalField {
        let b = self.beta.value(t);
        let (mut lo, mut hi) = (
            Vec::with_capacity(delayed.values().len()),
            Vec::with_capacity(delayed.values().len()),
        );
        for &v in delayed.values() {
            let (a, c) = (b * self.envelope.lower(v), b * self.envelope.upper(v));
            // A negative weight cannot occur (validated), so a <= c holds.
            lo.push(a);
            hi.push(c);
        }
        IntervalField { lo, hi }
    }

    /// Interval bounds straight from a history segment, `v = ψ(−r)`.
    pub fn field_from_history(&self, t: f64, psi: &HistorySegment) -> Result<IntervalField> {
        if self.delay > psi.window() + 1e-12 {
            return Err(Error::Window {
                needed: self.delay,
                have: psi.window(),
            });
        }
        Ok(self.field_at(t, &psi.value_at(-self.delay)))
    }

    /// `γ(t) = β(t)·sup|env|`, the pointwise bound on any selection.
    pub fn gamma_sup(&self, t: f64) -> f64 {
        self.beta.value(t) * self.envelope.sup_abs()
    }

    /// `‖F(t,·)‖` as an `L^p(0,π)` bound: constants have norm `π^{1/p}`.
    pub fn gamma_norm(&self, t: f64, p: f64) -> f64 {
        self.gamma_sup(t) * std::f64::consts::PI.powf(1.0 / p)
    }

    /// `∫_0^T γ_X(t) dt`, the integrated growth bound.
    pub fn gamma_norm_l1(&self, horizon: f64, p: f64) -> f64 {
        self.beta.l1(horizon) * self.envelope.sup_abs() * std::f64::consts::PI.powf(1.0 / p)
    }
}

/// How to pick one integrand out of the interval field.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectionPolicy {
    Lower,
    Upper,
    Midpoint,
    /// `(1−alpha)·lo + alpha·hi` with a fixed mixing weight.
    ConvexMix { alpha: f64 },
    /// Pointwise uniform draws from each interval, reproducible by seed.
    SeededRandom { seed: u64 },
}

impl SelectionPolicy {
    pub fn validate(&self) -> Result<()> {
        if let SelectionPolicy::ConvexMix { alpha } = self {
            if !(alpha.is_finite() && (0.0..=1.0).contains(alpha)) {
                return Err(Error::InvalidInput(format!(
                    "mixing weight {alpha} must lie in [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Stateful selection: the random policy carries its generator between
/// calls so a trajectory's draws form one reproducible stream.
#[derive(Debug, Clone)]
pub struct Selector {
    policy: SelectionPolicy,
    rng: Option<ChaCha8Rng>,
}

impl Selector {
    pub fn new(policy: SelectionPolicy) -> Result<Self> {
        policy.validate()?;
        let rng = match &policy {
            SelectionPolicy::SeededRandom { seed } => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        Ok(Selector { policy, rng })
    }

    pub fn policy(&self) -> &SelectionPolicy {
        &self.policy
    }

    /// Rewinds the random stream to its seed. The draws parameterize one
    /// fixed selection function, so an iteration that re-samples the same
    /// field sites must replay the same stream; deterministic policies are
    /// unaffected.
    pub fn reset(&mut self) {
        if let SelectionPolicy::SeededRandom { seed } = self.policy {
            self.rng = Some(ChaCha8Rng::seed_from_u64(seed));
        }
    }

    /// One selection from the field, as point values on the grid.
    pub fn select(&mut self, field: &IntervalField) -> Vec<f64> {
        let pick = |lo: f64, hi: f64, w: f64| lo + w * (hi - lo);
        match (&self.policy, &mut self.rng) {
            (SelectionPolicy::Lower, _) => field.lo.clone(),
            (SelectionPolicy::Upper, _) => field.hi.clone(),
            (SelectionPolicy::Midpoint, _) => field
                .lo
                .iter()
                .zip(&field.hi)
                .map(|(a, b)| pick(*a, *b, 0.5))
                .collect(),
            (SelectionPolicy::ConvexMix { alpha }, _) => field
                .lo
                .iter()
                .zip(&field.hi)
                .map(|(a, b)| pick(*a, *b, *alpha))
                .collect(),
            (SelectionPolicy::SeededRandom { .. }, Some(rng)) => field
                .lo
                .iter()
                .zip(&field.hi)
                .map(|(a, b)| pick(*a, *b, rng.gen::<f64>()))
                .collect(),
            (SelectionPolicy::SeededRandom { .. }, None) => unreachable!("seeded at build"),
        }
    }
}
