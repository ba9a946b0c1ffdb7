// SPDX-License-Identifier: Apache-2.0

//! Quadrature primitives shared across the crate.
//!
//! Two rules cover every integral here. Sampled data (space profiles, history
//! norms) is integrated by composite trapezoid or by exact per-panel formulas
//! for the piecewise-linear interpolant, matching the order of the data
//! itself. Smooth time integrands (coefficient exponents, Gramian entries,
//! per-step multiplier integrals) go through an adaptive composite
//! Gauss-Legendre rule of order 8, because those integrands develop boundary
//! layers of width `~1/n²` in the high modes and no fixed grid of reasonable
//! size resolves them to the tolerances the oracles demand.

/// Abscissae of the 8-point Gauss-Legendre rule on `[-1, 1]`.
const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];

/// Weights paired with [`GL8_NODES`].
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Single-panel 8-point Gauss-Legendre approximation of `∫ₐᵇ f`.
pub fn gauss8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Adaptive composite Gauss-Legendre integration of `∫ₐᵇ f` to absolute
/// tolerance `tol`. Panels are bisected until the one-panel and two-panel
/// values agree; the rule is exact through degree 15 per panel, so smooth
/// integrands converge after a handful of splits even with sharp boundary
/// layers.
pub fn adaptive_gauss<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = gauss8(f, a, b);
    adaptive_step(f, a, b, whole, tol, 32)
}

fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let mid = 0.5 * (a + b);
    let left = gauss8(f, a, mid);
    let right = gauss8(f, mid, b);
    let refined = left + right;
    if (refined - whole).abs() <= tol || depth == 0 {
        return refined;
    }
    adaptive_step(f, a, mid, left, 0.5 * tol, depth - 1)
        + adaptive_step(f, mid, b, right, 0.5 * tol, depth - 1)
}

/// Composite trapezoid over tabulated `(times, values)` samples. Times must
/// be nondecreasing; panels of zero width contribute nothing, which is how
/// duplicated jump nodes in trajectory segments are skipped.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(times.len(), values.len());
    let mut acc = 0.0;
    for i in 1..times.len() {
        acc += 0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]);
    }
    acc
}

/// Exact value of `∫ (v(θ)·e^{νθ}) dθ` over the sample range, where `v` is
/// the piecewise-linear interpolant of `(times, values)`. Used by the
/// weighted history norm: plain trapezoid on the product would cap accuracy
/// at `O(h²)` of the kernel too, which the norm oracles cannot afford.
pub fn exp_weighted_integral(times: &[f64], values: &[f64], nu: f64) -> f64 {
    debug_assert_eq!(times.len(), values.len());
    let mut acc = 0.0;
    for i in 1..times.len() {
        let h = times[i] - times[i - 1];
        if h == 0.0 {
            continue;
        }
        let s = nu * h;
        // ∫₀ʰ e^{νu} du and ∫₀ʰ u·e^{νu} du, both scaled by e^{ν·t_{i-1}}.
        let i0 = s.exp_m1() / nu;
        let i1 = (h * s.exp() - i0) / nu;
        let slope = (values[i] - values[i - 1]) / h;
        acc += (times[i - 1] * nu).exp() * (values[i - 1] * i0 + slope * i1);
    }
    acc
}

/// Exact value of `∫ (q(θ)·e^{νθ}) dθ` over `[a, b]` for the quadratic
/// `q(θ) = c0 + c1·(θ−a) + c2·(θ−a)²`. Companion to
/// [`exp_weighted_integral`] for integrating cumulative (piecewise-quadratic)
/// antiderivatives against the same kernel without losing the exact-panel
/// property.
pub fn exp_weighted_quadratic(a: f64, b: f64, c0: f64, c1: f64, c2: f64, nu: f64) -> f64 {
    let h = b - a;
    if h == 0.0 {
        return 0.0;
    }
    let s = nu * h;
    let i0 = s.exp_m1() / nu;
    let i1 = (h * s.exp() - i0) / nu;
    let i2 = (h * h * s.exp() - 2.0 * i1) / nu;
    (a * nu).exp() * (c0 * i0 + c1 * i1 + c2 * i2)
}
