// SPDX-License-Identifier: Apache-2.0

//! History segments, exponentially weighted history norms, and piecewise
//! trajectories with recorded jumps.
//!
//! The history space weighs a segment `ψ: [−∞, 0] → X` with the kernel
//! `g(θ) = e^{νθ}`:
//!
//! ```text
//! ‖ψ‖_g = ∫_{−∞}^0 e^{νs} · ‖ψ‖_{[s,0]} ds,   ‖ψ‖_{[s,0]} = ∫_s^0 ‖ψ(θ)‖_X dθ.
//! ```
//!
//! Exchanging the order of integration turns this into the single integral
//! `∫ ‖ψ(θ)‖ · e^{νθ}/ν dθ`, which is what [`HistorySegment::bg_norm`]
//! evaluates; [`HistorySegment::bg_norm_direct`] keeps the double-integral
//! form (with the explicit tail term for the truncated window) as an
//! independent cross-check. Both integrate the same piecewise-linear
//! interpolant of the sampled norms exactly, so they agree to roundoff.
//!
//! Segments are truncated at a window `H = max(r, ln(1/ε)/ν)`: beyond that
//! the kernel makes any bounded tail contribute less than `ε` relative.
//!
//! Trajectories are left-continuous at jump nodes, `x(τ) = x(τ⁻)`, with the
//! applied jump stored next to the node so `x(τ⁺) = x(τ) + jump` and
//! interpolation to the right of `τ` starts from the post-jump value.

use std::sync::Arc;

use crate::quad::{exp_weighted_integral, exp_weighted_quadratic, trapezoid};
use crate::space::{ModeVector, SineBasis, StateVector};
use crate::{Error, Result};

/// Window length that makes the truncated kernel tail fall below `tail_tol`
/// while still covering the delay `r`.
pub fn auto_window(r: f64, nu: f64, tail_tol: f64) -> f64 {
    r.max((1.0 / tail_tol).ln() / nu)
}

/// A sampled history `ψ` on `[−H, 0]`, linearly interpolated in time.
///
/// Sample times are nondecreasing; an equal adjacent pair represents a jump
/// (left value first), which is how trajectory segments carry impulses.
#[derive(Debug, Clone)]
pub struct HistorySegment {
    times: Vec<f64>,
    states: Vec<StateVector>,
    norms: Vec<f64>,
}

impl HistorySegment {
    pub fn from_samples(times: Vec<f64>, states: Vec<StateVector>) -> Result<Self> {
        if times.len() < 2 || times.len() != states.len() {
            return Err(Error::InvalidInput(
                "history needs at least two matching time/state samples".into(),
            ));
        }
        if *times.last().unwrap() != 0.0 {
            return Err(Error::InvalidInput(
                "history samples must end at θ = 0".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput(
                "history sample times must be nondecreasing".into(),
            ));
        }
        if times.windows(3).any(|w| w[0] == w[2]) {
            return Err(Error::InvalidInput(
                "more than two history samples share a time stamp".into(),
            ));
        }
        let grid = states[0].grid().clone();
        let p = states[0].p();
        if states
            .iter()
            .any(|s| s.p() != p || !Arc::ptr_eq(s.grid(), &grid) && s.grid().len() != grid.len())
        {
            return Err(Error::GridMismatch(
                "history states disagree on grid or exponent".into(),
            ));
        }
        let norms = states.iter().map(StateVector::lp_norm).collect();
        Ok(HistorySegment {
            times,
            states,
            norms,
        })
    }

    /// Window length `H` (the segment covers `[−H, 0]`).
    pub fn window(&self) -> f64 {
        -self.times[0]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn p(&self) -> f64 {
        self.states[0].p()
    }

    /// Value at `θ = 0`, the current state.
    pub fn head(&self) -> &StateVector {
        self.states.last().unwrap()
    }

    /// Linear interpolation at `θ ∈ [−H, 0]`, clamped at the ends. At a jump
    /// stamp the left value is returned; just past it, interpolation starts
    /// from the right value.
    pub fn value_at(&self, theta: f64) -> StateVector {
        let theta = theta.clamp(self.times[0], 0.0);
        // First index with time >= theta.
        let i = self.times.partition_point(|&t| t < theta);
        if self.times[i] == theta {
            return self.states[i].clone();
        }
        // Interpolate on (times[i-1], times[i]); when i-1 is the left half of
        // a jump pair the pair shares a stamp, so times[i-1] here is already
        // the right value.
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (theta - t0) / (t1 - t0);
        let a = &self.states[i - 1];
        let b = &self.states[i];
        let values = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| x + w * (y - x))
            .collect();
        StateVector::new(values, a.p(), a.grid().clone()).expect("interpolant stays finite")
    }

    /// `∫_{−r}^0 ‖ψ(θ)‖ dθ` by trapezoid on the sample grid.
    pub fn segment_norm(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(Error::InvalidInput(format!("negative span {r}")));
        }
        if r > self.window() + 1e-12 {
            return Err(Error::Window {
                needed: r,
                have: self.window(),
            });
        }
        let start = -r;
        let mut ts = Vec::with_capacity(self.times.len() + 1);
        let mut vs = Vec::with_capacity(self.times.len() + 1);
        if self.times.iter().all(|&t| t != start) {
            ts.push(start);
            vs.push(self.value_at(start).lp_norm());
        }
        for (t, n) in self.times.iter().zip(&self.norms) {
            if *t >= start {
                ts.push(*t);
                vs.push(*n);
            }
        }
        Ok(trapezoid(&ts, &vs))
    }

    /// The weighted history norm in its exchanged single-integral form,
    /// `∫_{−H}^0 ‖ψ(θ)‖ · e^{νθ}/ν dθ`, exact for the piecewise-linear
    /// interpolant of the sampled norms.
    pub fn bg_norm(&self, nu: f64) -> f64 {
        exp_weighted_integral(&self.times, &self.norms, nu) / nu
    }

    /// The weighted history norm evaluated from its defining double
    /// integral: `∫ e^{νs}·‖ψ‖_{[s,0]} ds` over `[−H, 0]` plus the exact
    /// tail `e^{−νH}/ν · ‖ψ‖_{[−H,0]}` that the truncation would otherwise
    /// drop. Agrees with [`HistorySegment::bg_norm`] to roundoff; kept as an
    /// independent implementation for the check suites.
    pub fn bg_norm_direct(&self, nu: f64) -> f64 {
        let n = self.times.len();
        // Cumulative ∫_θ^0 ‖ψ‖ at the sample nodes, from the right.
        let mut cum = vec![0.0; n];
        for i in (0..n - 1).rev() {
            let h = self.times[i + 1] - self.times[i];
            cum[i] = cum[i + 1] + 0.5 * (self.norms[i] + self.norms[i + 1]) * h;
        }
        let mut acc = 0.0;
        for i in 0..n - 1 {
            let (a, b) = (self.times[i], self.times[i + 1]);
            if a == b {
                continue;
            }
            let h = b - a;
            let slope = (self.norms[i + 1] - self.norms[i]) / h;
            // On [a, b]: S(θ) = cum[i] − v_i·(θ−a) − slope/2·(θ−a)².
            acc += exp_weighted_quadratic(a, b, cum[i], -self.norms[i], -0.5 * slope, nu);
        }
        acc + (nu * self.times[0]).exp() / nu * cum[0]
    }
}

/// Built-in history profiles for run configuration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HistoryKind {
    Zero,
    Constant { level: f64 },
    /// `φ(θ) = amplitude · e^{rate·θ} · w_mode(ξ)`, decaying into the past.
    DecayingMode { mode: usize, amplitude: f64, rate: f64 },
}

/// Samples a catalog history on `[−H, 0]` with the given time step.
pub fn build_history(
    kind: &HistoryKind,
    window: f64,
    step: f64,
    basis: &SineBasis,
    p: f64,
) -> Result<HistorySegment> {
    if !(window > 0.0 && step > 0.0) {
        return Err(Error::InvalidInput(
            "history window and sampling step must be positive".into(),
        ));
    }
    let n = (window / step).ceil() as usize;
    let grid = basis.grid().clone();
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    for i in 0..=n {
        // March from −H to 0, landing on 0 exactly.
        let theta = if i == n {
            0.0
        } else {
            -window + window * i as f64 / n as f64
        };
        times.push(theta);
        let state = match kind {
            HistoryKind::Zero => StateVector::zero(p, grid.clone())?,
            HistoryKind::Constant { level } => StateVector::constant(*level, p, grid.clone())?,
            HistoryKind::DecayingMode {
                mode,
                amplitude,
                rate,
            } => {
                let shape = basis.mode_shape(*mode, p)?;
                let scale = amplitude * (rate * theta).exp();
                shape.map(|v| scale * v)
            }
        };
        states.push(state);
    }
    HistorySegment::from_samples(times, states)
}

/// A trajectory on `[0, T]` sampled at grid nodes, with left-continuous
/// values and recorded jumps at impulse nodes.
#[derive(Debug, Clone)]
pub struct PiecewiseTrajectory {
    times: Vec<f64>,
    /// Left values `x(t_j) = x(t_j⁻)`.
    states: Vec<ModeVector>,
    /// `(node index, applied jump)`, ascending in node index.
    jumps: Vec<(usize, ModeVector)>,
}

impl PiecewiseTrajectory {
    pub fn new(
        times: Vec<f64>,
        states: Vec<ModeVector>,
        jumps: Vec<(usize, ModeVector)>,
    ) -> Result<Self> {
        if times.len() != states.len() || times.len() < 2 {
            return Err(Error::InvalidInput(
                "trajectory needs matching times and states".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "trajectory times must be strictly increasing".into(),
            ));
        }
        if jumps
            .iter()
            .any(|(i, _)| *i == 0 || *i + 1 >= times.len())
        {
            return Err(Error::InvalidInput(
                "jumps must sit at interior trajectory nodes".into(),
            ));
        }
        Ok(PiecewiseTrajectory {
            times,
            states,
            jumps,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[ModeVector] {
        &self.states
    }

    pub fn jumps(&self) -> &[(usize, ModeVector)] {
        &self.jumps
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Terminal state `x(T)`.
    pub fn terminal(&self) -> &ModeVector {
        self.states.last().unwrap()
    }

    fn jump_at(&self, idx: usize) -> Option<&ModeVector> {
        self.jumps
            .iter()
            .find(|(i, _)| *i == idx)
            .map(|(_, j)| j)
    }

    /// Post-jump value at node `idx`.
    pub fn right_value(&self, idx: usize) -> ModeVector {
        match self.jump_at(idx) {
            Some(j) => self.states[idx].add(j),
            None => self.states[idx].clone(),
        }
    }

    /// Left-continuous evaluation: exact nodes yield the pre-jump value,
    /// interior points interpolate from the post-jump side of the node on
    /// their left.
    pub fn value_at(&self, t: f64) -> ModeVector {
        let t = t.clamp(self.times[0], *self.times.last().unwrap());
        let i = self.times.partition_point(|&x| x < t);
        if self.times[i] == t {
            return self.states[i].clone();
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        let left = self.right_value(i - 1);
        let mut out = left.scaled(1.0 - w);
        out.axpy(w, &self.states[i]);
        out
    }

    /// Largest node-wise distance to another trajectory on the same grid,
    /// measured in the mode coefficients (the `L²` distance of the states).
    pub fn sup_distance(&self, other: &PiecewiseTrajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.sub(b).norm())
            .fold(0.0, f64::max)
    }

    /// Supremum of `‖x(t)‖_p` over nodes, both sides of every jump.
    pub fn sup_lp_norm(&self, basis: &SineBasis, p: f64) -> Result<f64> {
        let mut sup: f64 = 0.0;
        for (i, s) in self.states.iter().enumerate() {
            sup = sup.max(basis.from_modes(s, p)?.lp_norm());
            if self.jump_at(i).is_some() {
                sup = sup.max(basis.from_modes(&self.right_value(i), p)?.lp_norm());
            }
        }
        Ok(sup)
    }

    /// Convex blend `ω·self + (1−ω)·other` used by the relaxed fixed-point
    /// iteration. Jumps blend by node index; both trajectories must share
    /// the grid and jump layout.
    pub fn blend(&self, other: &PiecewiseTrajectory, omega: f64) -> Result<PiecewiseTrajectory> {
        if self.times != other.times || self.jumps.len() != other.jumps.len() {
            return Err(Error::InvalidInput(
                "can only blend trajectories on identical grids".into(),
            ));
        }
        let states = self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| {
                let mut s = a.scaled(omega);
                s.axpy(1.0 - omega, b);
                s
            })
            .collect();
        let jumps = self
            .jumps
            .iter()
            .zip(&other.jumps)
            .map(|((i, a), (j, b))| {
                debug_assert_eq!(i, j);
                let mut s = a.scaled(omega);
                s.axpy(1.0 - omega, b);
                (*i, s)
            })
            .collect();
        PiecewiseTrajectory::new(self.times.clone(), states, jumps)
    }
}

/// The delayed state `x̃(t − r)`: trajectory values once `t − r ≥ 0`, history
/// values before that. This is the reduction the interval field feeds on.
pub fn delayed_value(
    traj: &PiecewiseTrajectory,
    history: &HistorySegment,
    t: f64,
    r: f64,
    basis: &SineBasis,
    p: f64,
) -> Result<StateVector> {
    let s = t - r;
    if s >= 0.0 {
        basis.from_modes(&traj.value_at(s), p)
    } else {
        if -s > history.window() + 1e-12 {
            return Err(Error::Window {
                needed: -s,
                have: history.window(),
            });
        }
        Ok(history.value_at(s))
    }
}

/// The shifted segment `x_t(θ) = x(t+θ)`, patched together from the
/// trajectory on `[−t, 0]` and the supplied history before that; the window
/// length of `history` is preserved. Jump nodes inside the span become
/// duplicate sample stamps carrying the left and right values.
pub fn shift_segment(
    traj: &PiecewiseTrajectory,
    history: &HistorySegment,
    t: f64,
    basis: &SineBasis,
    p: f64,
) -> Result<HistorySegment> {
    if t < 0.0 || t > traj.horizon() + 1e-12 {
        return Err(Error::Domain(format!(
            "segment shift {t} outside the trajectory span [0, {}]",
            traj.horizon()
        )));
    }
    if t == 0.0 {
        return Ok(history.clone());
    }
    let window = history.window();
    let mut times = Vec::new();
    let mut states = Vec::new();

    // History part: θ ∈ [−H, −t).
    if t < window {
        let start = t - window; // in trajectory-absolute time, negative
        if history.times().iter().all(|&x| x != start) {
            times.push(-window);
            states.push(history.value_at(start));
        }
        for (i, &theta) in history.times().iter().enumerate() {
            if theta >= start && theta < 0.0 {
                times.push(theta - t);
                states.push(history.states[i].clone());
            }
        }
    }

    // Trajectory part: θ ∈ [−t, 0], clipped to the window.
    let lo = (t - window).max(0.0);
    if traj.times().iter().all(|&x| x != lo) {
        times.push(lo - t);
        states.push(basis.from_modes(&traj.value_at(lo), p)?);
    }
    for (j, &tj) in traj.times().iter().enumerate() {
        if tj >= lo && tj < t {
            times.push(tj - t);
            states.push(basis.from_modes(&traj.states()[j], p)?);
            if traj.jumps().iter().any(|(i, _)| *i == j) {
                times.push(tj - t);
                states.push(basis.from_modes(&traj.right_value(j), p)?);
            }
        }
    }
    times.push(0.0);
    states.push(basis.from_modes(&traj.value_at(t), p)?);

    HistorySegment::from_samples(times, states)
}

/// One sampled comparison of the fading-memory bound
/// `‖x_t‖_g ≤ ‖φ‖_g + (t/ν)·sup_{0≤s≤t}‖x(s)‖`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct FadingBoundSample {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Evaluates the fading-memory bound at `n_samples` times spread over the
/// trajectory span. Violations (beyond rounding) would mean the history
/// bookkeeping is broken; callers assert on the returned samples.
pub fn check_fading_bound(
    traj: &PiecewiseTrajectory,
    history: &HistorySegment,
    nu: f64,
    basis: &SineBasis,
    p: f64,
    n_samples: usize,
) -> Result<Vec<FadingBoundSample>> {
    let horizon = traj.horizon();
    let phi_norm = history.bg_norm(nu);
    let mut out = Vec::with_capacity(n_samples);
    let mut sup: f64 = 0.0;
    let mut next_node = 0usize;
    for i in 1..=n_samples {
        let t = horizon * i as f64 / n_samples as f64;
        // Grow the running supremum over all nodes up to t.
        while next_node < traj.times().len() && traj.times()[next_node] <= t {
            let j = next_node;
            sup = sup.max(basis.from_modes(&traj.states()[j], p)?.lp_norm());
            sup = sup.max(basis.from_modes(&traj.right_value(j), p)?.lp_norm());
            next_node += 1;
        }
        let lhs = shift_segment(traj, history, t, basis, p)?.bg_norm(nu);
        out.push(FadingBoundSample {
            t,
            lhs,
            rhs: phi_norm + t / nu * sup,
        });
    }
    Ok(out)
}
