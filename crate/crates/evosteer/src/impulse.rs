// SPDX-License-Identifier: Apache-2.0

//! Impulsive state jumps with separable kernels.
//!
//! Each impulse replaces the state at its node by `x(τ⁺) = x(τ) + I(x(τ))`
//! with
//!
//! ```text
//! I(x)(ξ) = c · s(ξ) · ∫₀^π r(η) · cos²(x(η)) dη.
//! ```
//!
//! The `cos²` moment keeps every jump uniformly bounded no matter how large
//! the state grows, with the explicit budget `‖I(x)‖_p ≤ |c|·‖s‖_p·∫|r|`.
//! That bound is what [`Impulse::bound`] reports and what the solvability
//! checks sum over the impulse train.
//!
//! Moments are taken with the state grid's trapezoid weights, the same
//! quadrature the rest of the crate uses for spatial integrals.

use std::sync::Arc;

use crate::space::{Grid, ModeVector, SineBasis, StateVector};
use crate::{Error, Result};

/// Spatial profile used for both the jump shape `s` and the averaging
/// kernel `r`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelShape {
    /// `sin(mode·ξ)`, unnormalized.
    SineMode { mode: usize },
    /// The constant function `1`.
    Constant,
}

impl KernelShape {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelShape::SineMode { mode } if *mode == 0 => Err(Error::InvalidInput(
                "sine kernel mode index starts at 1".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, xi: f64) -> f64 {
        match self {
            KernelShape::SineMode { mode } => (*mode as f64 * xi).sin(),
            KernelShape::Constant => 1.0,
        }
    }
}

/// One impulsive jump at an interior time node.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Impulse {
    /// Jump time `τ`, strictly inside the horizon.
    pub time: f64,
    /// Scalar gain `c`; zero switches the jump off.
    pub strength: f64,
    /// Spatial shape `s(ξ)` the jump is painted with.
    pub shape: KernelShape,
    /// Averaging kernel `r(η)` inside the moment integral.
    pub weight: KernelShape,
}

impl Impulse {
    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        self.weight.validate()?;
        if !(self.time.is_finite() && self.strength.is_finite()) {
            return Err(Error::InvalidInput("impulse time and strength must be finite".into()));
        }
        Ok(())
    }

    /// The moment `∫ r(η)·cos²(x(η)) dη` on the state's grid.
    fn moment(&self, x: &StateVector) -> f64 {
        let grid = x.grid();
        grid.points()
            .iter()
            .zip(grid.weights())
            .zip(x.values())
            .map(|((xi, w), v)| w * self.weight.eval(*xi) * v.cos().powi(2))
            .sum()
    }

    /// The jump `I(x)` as a grid function.
    pub fn apply(&self, x: &StateVector) -> StateVector {
        let m = self.strength * self.moment(x);
        let values = x
            .grid()
            .points()
            .iter()
            .map(|&xi| m * self.shape.eval(xi))
            .collect();
        StateVector::new(values, x.p(), x.grid().clone())
            .expect("bounded kernels keep the jump finite")
    }

    /// The jump in mode coordinates, for the stepper.
    pub fn jump_modes(
        &self,
        basis: &SineBasis,
        state: &ModeVector,
        p: f64,
    ) -> Result<ModeVector> {
        let x = basis.from_modes(state, p)?;
        basis.to_modes(&self.apply(&x))
    }

    /// Uniform budget `d = |c|·‖s‖_p·∫₀^π |r|`, valid for every state.
    pub fn bound(&self, p: f64, grid: &Arc<Grid>) -> Result<f64> {
        let shape = StateVector::from_fn(|xi| self.shape.eval(xi), p, grid.clone())?;
        let weight_l1: f64 = grid
            .points()
            .iter()
            .zip(grid.weights())
            .map(|(xi, w)| w * self.weight.eval(*xi).abs())
            .sum();
        Ok(self.strength.abs() * shape.lp_norm() * weight_l1)
    }
}

/// A validated train of impulses inside `(0, horizon)`.
#[derive(Debug, Clone, Default)]
pub struct ImpulseSet {
    impulses: Vec<Impulse>,
}

impl ImpulseSet {
    pub fn new(mut impulses: Vec<Impulse>, horizon: f64) -> Result<Self> {
        for imp in &impulses {
            imp.validate()?;
            if !(imp.time > 0.0 && imp.time < horizon) {
                return Err(Error::InvalidInput(format!(
                    "impulse time {} must lie strictly inside (0, {horizon})",
                    imp.time
                )));
            }
        }
        impulses.sort_by(|a, b| a.time.total_cmp(&b.time));
        if impulses.windows(2).any(|w| w[0].time == w[1].time) {
            return Err(Error::InvalidInput(
                "impulse times must be distinct".into(),
            ));
        }
        Ok(ImpulseSet { impulses })
    }

    pub fn empty() -> Self {
        ImpulseSet::default()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Impulse> {
        self.impulses.iter()
    }

    pub fn len(&self) -> usize {
        self.impulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.impulses.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.impulses.iter().map(|i| i.time).collect()
    }

    /// Sum of the per-impulse budgets, `Σ_k d_k`.
    pub fn total_bound(&self, p: f64, grid: &Arc<Grid>) -> Result<f64> {
        self.impulses
            .iter()
            .map(|i| i.bound(p, grid))
            .try_fold(0.0, |acc, d| Ok(acc + d?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fine_grid() -> Arc<Grid> {
        Grid::uniform(1025).unwrap()
    }

    fn unit_impulse() -> Impulse {
        // c = 1/π, s = sin ξ, r = sin η.
        Impulse {
            time: 0.5,
            strength: 1.0 / std::f64::consts::PI,
            shape: KernelShape::SineMode { mode: 1 },
            weight: KernelShape::SineMode { mode: 1 },
        }
    }

    #[test]
    fn rest_state_oracle() {
        // At x ≡ 0 the moment is ∫ sin = 2, so I(0)(ξ) = (2/π)·sin ξ.
        let g = fine_grid();
        let x = StateVector::zero(2.0, g.clone()).unwrap();
        let jump = unit_impulse().apply(&x);
        let scale = 2.0 / std::f64::consts::PI;
        for (xi, v) in g.points().iter().zip(jump.values()) {
            assert!(
                (v - scale * xi.sin()).abs() < 1e-5,
                "at ξ = {xi}: {v} vs {}",
                scale * xi.sin()
            );
        }
    }

    #[test]
    fn budget_oracle() {
        // d = (1/π)·‖sin‖₂·∫|sin| = 2/√(2π).
        let d = unit_impulse().bound(2.0, &fine_grid()).unwrap();
        let want = 2.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((d - want).abs() < 1e-6, "got {d}, want {want}");
    }

    #[test]
    fn zero_strength_means_no_jump() {
        let mut imp = unit_impulse();
        imp.strength = 0.0;
        let x = StateVector::from_fn(|xi| xi.cos(), 2.0, fine_grid()).unwrap();
        assert_eq!(imp.apply(&x).lp_norm(), 0.0);
    }

    #[test]
    fn jump_is_pi_periodic_in_the_state() {
        // cos²(v + π) = cos²(v), so shifting the state by π changes nothing.
        let g = fine_grid();
        let imp = unit_impulse();
        let x = StateVector::from_fn(|xi| 0.7 * (2.0 * xi).sin(), 2.0, g.clone()).unwrap();
        let shifted = x.map(|v| v + std::f64::consts::PI);
        let a = imp.apply(&x);
        let b = imp.apply(&shifted);
        let diff: f64 = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn budget_dominates_every_jump() {
        let g = Grid::uniform(129).unwrap();
        let imp = unit_impulse();
        let d = imp.bound(2.0, &g).unwrap();
        for amp in [0.0, 0.5, 3.0, 40.0] {
            let x = StateVector::from_fn(|xi| amp * (3.0 * xi).sin(), 2.0, g.clone()).unwrap();
            let j = imp.apply(&x).lp_norm();
            assert!(j <= d + 1e-12, "amp {amp}: ‖I(x)‖ = {j} > d = {d}");
        }
    }

    #[test]
    fn mode_jump_matches_grid_jump() {
        let g = Grid::uniform(257).unwrap();
        let basis = SineBasis::new(g.clone(), 16).unwrap();
        let imp = unit_impulse();
        let mut state = ModeVector::zeros(16);
        state.0[0] = 1.3;
        state.0[4] = -0.4;
        let jm = imp.jump_modes(&basis, &state, 2.0).unwrap();
        let direct = basis
            .to_modes(&imp.apply(&basis.from_modes(&state, 2.0).unwrap()))
            .unwrap();
        assert!((jm.0.clone() - direct.0.clone()).norm() < 1e-13);
        // The sine shape concentrates the jump in mode 1.
        assert!(jm.coeff(1).abs() > 1e-3);
        assert!(jm.coeff(3).abs() < 1e-12);
    }

    #[test]
    fn set_validation() {
        let mk = |t: f64| Impulse {
            time: t,
            ..unit_impulse()
        };
        assert!(ImpulseSet::new(vec![mk(0.3), mk(0.7)], 1.0).is_ok());
        // Unsorted input is sorted.
        let set = ImpulseSet::new(vec![mk(0.7), mk(0.3)], 1.0).unwrap();
        assert_eq!(set.times(), vec![0.3, 0.7]);
        assert!(ImpulseSet::new(vec![mk(0.0)], 1.0).is_err());
        assert!(ImpulseSet::new(vec![mk(1.0)], 1.0).is_err());
        assert!(ImpulseSet::new(vec![mk(0.4), mk(0.4)], 1.0).is_err());
        assert!(KernelShape::SineMode { mode: 0 }.validate().is_err());
    }
}
