// SPDX-License-Identifier: Apache-2.0

//! Acceptance gate: the end-to-end guarantees the toolkit ships with, one
//! test per guarantee. Each test prints a PASS line with the measured value
//! next to its limit (visible with --nocapture); the assertions carry the
//! same numbers so a failure is immediately quantitative.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use evosteer::report::render_sweep_csv;
use evosteer::solver::{free_decay, integrate_mild, steer, sweep, ControlInput, SteerProblem};
use evosteer::steering::{resolvent_solve, unique_continuation, ControlVector, ResolventOptions};
use evosteer::{
    Coefficient, EvolutionFamily, Gramian, ImpulseSet, ModeVector, RunConfig, Selector, SineBasis,
    TimeGrid,
};

const LINEAR: &str = r#"
schema = "evosteer/1"

[model]
p = 2.0
modes = 8
grid_points = 257
horizon = 1.0

[coefficient]
kind = "constant"
value = 1.0

[history]
nu = 1.0
step = 0.25
window = 1.0
profile = { kind = "zero" }

[target]
kind = "mode"
mode = 3
amplitude = 1.0

[steering]
lambdas = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5]

[solver]
steps = 200
"#;

const IMPULSIVE: &str = r#"
schema = "evosteer/1"

[model]
p = 2.0
modes = 8
grid_points = 257
horizon = 1.0

[coefficient]
kind = "constant"
value = 1.0

[history]
nu = 1.0
step = 0.05
window = 2.0
profile = { kind = "constant", level = 0.5 }

[inclusion]
envelope = { kind = "tanh_band", eps = 0.1 }
beta = { kind = "constant", value = 0.4 }
delay = 0.5
policy = { kind = "seeded_random", seed = 42 }

[[impulse]]
time = 0.5
strength = 0.2
shape = { kind = "sine_mode", mode = 2 }
weight = { kind = "sine_mode", mode = 1 }

[target]
kind = "mode"
mode = 3
amplitude = 1.0

[steering]
lambdas = [1e-1, 1e-2, 1e-3]

[solver]
steps = 200

[output]
seed = 42
"#;

/// Owned problem pieces an integration test can borrow a [`SteerProblem`]
/// from.
struct Fixture {
    cfg: RunConfig,
    family: EvolutionFamily,
    basis: SineBasis,
    grid: TimeGrid,
    history: evosteer::HistorySegment,
    inclusion: Option<evosteer::InclusionSpec>,
    impulses: ImpulseSet,
    gramian: Gramian,
    target: ModeVector,
}

impl Fixture {
    fn build(toml: &str) -> Self {
        let cfg = RunConfig::from_str(toml).expect("fixture config must parse");
        let family = cfg.to_family().unwrap();
        let basis = cfg.to_basis().unwrap();
        let impulses = cfg.to_impulses().unwrap();
        let grid = cfg.to_time_grid(&impulses).unwrap();
        let history = cfg.to_history(&basis).unwrap();
        let inclusion = cfg.to_inclusion().unwrap();
        let gramian = Gramian::assemble(&family, cfg.solver.quad_tol).unwrap();
        let target = cfg.target_modes();
        Fixture {
            cfg,
            family,
            basis,
            grid,
            history,
            inclusion,
            impulses,
            gramian,
            target,
        }
    }

    fn problem(&self) -> SteerProblem<'_> {
        SteerProblem {
            family: &self.family,
            basis: &self.basis,
            grid: &self.grid,
            history: &self.history,
            inclusion: self.inclusion.as_ref(),
            impulses: &self.impulses,
            gramian: &self.gramian,
            target: &self.target,
            p: self.cfg.model.p,
        }
    }
}

fn random_modes(rng: &mut ChaCha8Rng, n: usize) -> ModeVector {
    let mut v = ModeVector::zeros(n);
    for i in 0..n {
        v.0[i] = rng.gen_range(-1.0..1.0);
    }
    v
}

#[test]
fn evolution_identities_hold_on_random_triples() {
    let start = Instant::now();
    let family = EvolutionFamily::new(Coefficient::Constant { value: 1.0 }, 1.0, 8).unwrap();
    let drifting = EvolutionFamily::new(
        Coefficient::Affine {
            base: 1.0,
            slope: 0.5,
        },
        1.0,
        8,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for trial in 0..1000 {
        let fam = if trial % 2 == 0 { &family } else { &drifting };
        let mut a = rng.gen_range(0.0..1.0);
        let mut b = rng.gen_range(0.0..1.0);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let r = rng.gen_range(a..=b);
        let x = random_modes(&mut rng, 8);
        let y = random_modes(&mut rng, 8);

        let two_leg = fam.apply(b, r, &fam.apply(r, a, &x).unwrap()).unwrap();
        let one_leg = fam.apply(b, a, &x).unwrap();
        worst = worst.max(two_leg.sub(&one_leg).norm());
        worst = worst.max(one_leg.norm() - x.norm());
        let pairing_gap =
            one_leg.0.dot(&y.0) - x.0.dot(&fam.apply_adjoint(b, a, &y).unwrap().0);
        worst = worst.max(pairing_gap.abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(worst <= 1e-10, "worst identity defect {worst:.3e} > 1e-10");
    assert!(elapsed < 5.0, "took {elapsed:.2}s, limit 5s");
    println!("PASS evolution identities: worst defect {worst:.3e} ≤ 1e-10 in {elapsed:.2}s");
}

#[test]
fn duality_identities_hold_across_exponents() {
    let fx = Fixture::build(LINEAR);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for p in [1.5, 2.0, 3.0, 4.0] {
        for _ in 0..250 {
            let x = fx.basis.from_modes(&random_modes(&mut rng, 8), p).unwrap();
            let nx = x.lp_norm();
            if nx < 1e-9 {
                continue;
            }
            let j = x.duality_map();
            let pairing = x.pairing(&j).unwrap();
            worst = worst.max((pairing - nx * nx).abs() / (nx * nx));
            worst = worst.max((j.lq_norm() - nx).abs() / nx);
        }
    }
    assert!(worst <= 1e-9, "worst relative defect {worst:.3e} > 1e-9");
    println!("PASS duality identities: worst relative defect {worst:.3e} ≤ 1e-9 over 1000 states");
}

#[test]
fn gramian_matches_closed_forms_and_is_psd() {
    let fx = Fixture::build(LINEAR);
    let m = fx.gramian.matrix();
    let entry = |w: f64, c: f64| w * (1.0 - (-c).exp()) / c;
    let mut worst = (m[(0, 0)] - entry(4.0, 2.0)).abs();
    worst = worst.max((m[(0, 1)] - entry(2.0, 5.0)).abs());
    worst = worst.max((m[(1, 0)] - entry(2.0, 5.0)).abs());
    worst = worst.max((m[(1, 1)] - entry(1.0, 8.0)).abs());
    for k in 3..=8usize {
        worst = worst.max((m[(k - 1, k - 1)] - entry(1.0, 2.0 * (k * k) as f64)).abs());
    }
    let sym = fx.gramian.symmetry_defect();
    let eig = fx.gramian.min_eigenvalue();
    assert!(worst <= 1e-8, "entry defect {worst:.3e} > 1e-8");
    assert!(sym <= 1e-12, "symmetry defect {sym:.3e} > 1e-12");
    assert!(eig >= -1e-12, "min eigenvalue {eig:.3e} < -1e-12");
    println!(
        "PASS gramian: entry defect {worst:.3e} ≤ 1e-8, symmetry {sym:.1e}, min eig {eig:.3e} ≥ 0"
    );
}

#[test]
fn resolvent_contracts_across_the_lambda_range() {
    let fx = Fixture::build(LINEAR);
    let opts = ResolventOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_split: f64 = 0.0;
    for exp in -6..=3 {
        let lambda = 10f64.powi(exp);
        for p in [1.5, 2.0, 3.0, 4.0] {
            for _ in 0..5 {
                let h = random_modes(&mut rng, 8);
                if h.norm() < 1e-9 {
                    continue;
                }
                let sol = resolvent_solve(lambda, &fx.gramian, &h, p, &fx.basis, &opts).unwrap();
                let zp = fx.basis.from_modes(&sol.z, p).unwrap().lp_norm();
                let hp = fx.basis.from_modes(&h, p).unwrap().lp_norm();
                worst_ratio = worst_ratio.max(zp / hp - 1.0);
            }
        }
        // At p = 2 the Newton path must reproduce the direct linear solve.
        let h = random_modes(&mut rng, 8);
        let direct = resolvent_solve(lambda, &fx.gramian, &h, 2.0, &fx.basis, &opts).unwrap();
        let newton =
            evosteer::steering::resolvent_newton(lambda, &fx.gramian, &h, 2.0, &fx.basis, &opts)
                .unwrap();
        worst_split = worst_split.max(direct.z.sub(&newton.z).norm());
    }
    assert!(
        worst_ratio <= 1e-9,
        "contraction excess {worst_ratio:.3e} > 1e-9"
    );
    assert!(
        worst_split <= 1e-10,
        "newton vs direct split {worst_split:.3e} > 1e-10"
    );
    println!(
        "PASS resolvent: ‖z‖/‖g‖ − 1 ≤ {worst_ratio:.3e} over λ ∈ [1e-6, 1e3], \
         newton split {worst_split:.3e} ≤ 1e-10"
    );
}

#[test]
fn linear_sweep_tracks_the_closed_form_errors() {
    let start = Instant::now();
    let fx = Fixture::build(LINEAR);
    let results = sweep(
        &fx.problem(),
        &fx.cfg.steering.lambdas,
        &fx.cfg.selection_policy(None),
        0,
        &fx.cfg.gamma_options(),
    )
    .unwrap();
    let psi33 = fx.gramian.matrix()[(2, 2)];

    let mut worst_rel: f64 = 0.0;
    for (row, _) in &results {
        let predicted = row.lambda / (row.lambda + psi33);
        worst_rel = worst_rel.max((row.terminal_error - predicted).abs() / predicted);
        assert!(row.converged, "λ = {} did not converge", row.lambda);
    }
    let errors: Vec<f64> = results.iter().map(|(r, _)| r.terminal_error).collect();
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    let elapsed = start.elapsed().as_secs_f64();

    assert!(worst_rel <= 1e-6, "closed-form mismatch {worst_rel:.3e} > 1e-6");
    assert!(decreasing, "errors not strictly decreasing: {errors:?}");
    assert!(elapsed < 10.0, "took {elapsed:.2}s, limit 10s");
    println!(
        "PASS linear sweep: worst relative mismatch {worst_rel:.3e} ≤ 1e-6, \
         strictly decreasing over {} values in {elapsed:.2}s",
        errors.len()
    );
}

#[test]
fn terminal_identity_holds_at_tolerance() {
    for (name, toml, lambda) in [("linear", LINEAR, 1e-3), ("impulsive", IMPULSIVE, 1e-2)] {
        let fx = Fixture::build(toml);
        let mut selector = Selector::new(fx.cfg.selection_policy(None)).unwrap();
        let solve = steer(&fx.problem(), lambda, &mut selector, &fx.cfg.gamma_options()).unwrap();
        let limit = 10.0 * fx.cfg.solver.tol;
        let residual = solve.report.terminal_identity_residual;
        assert!(solve.report.converged, "{name} did not converge");
        assert!(
            residual <= limit,
            "{name}: identity residual {residual:.3e} > {limit:.1e}"
        );
        println!(
            "PASS terminal identity ({name}): ‖x(T) − (x_T − z)‖ = {residual:.3e} ≤ {limit:.1e}"
        );
    }
}

#[test]
fn control_stays_under_its_budget() {
    let fx = Fixture::build(IMPULSIVE);
    for &lambda in &fx.cfg.steering.lambdas {
        let mut selector = Selector::new(fx.cfg.selection_policy(None)).unwrap();
        let solve = steer(&fx.problem(), lambda, &mut selector, &fx.cfg.gamma_options()).unwrap();
        let r = &solve.report;
        assert!(
            r.sup_control <= r.control_bound,
            "λ = {lambda}: sup ‖u‖ = {:.3e} above budget {:.3e}",
            r.sup_control,
            r.control_bound
        );
        println!(
            "PASS control budget (λ = {lambda}): sup ‖u‖ = {:.4e} ≤ {:.4e}, margin {:.4e}",
            r.sup_control, r.control_bound, r.control_margin
        );
    }
}

#[test]
fn fading_bound_holds_along_the_steered_orbit() {
    let fx = Fixture::build(IMPULSIVE);
    assert_eq!(fx.cfg.solver.fading_samples, 100);
    let mut selector = Selector::new(fx.cfg.selection_policy(None)).unwrap();
    let solve = steer(&fx.problem(), 1e-2, &mut selector, &fx.cfg.gamma_options()).unwrap();
    let r = &solve.report;
    assert!(
        r.fading_ok,
        "fading bound violated, worst excess {:.3e}",
        r.fading_max_excess
    );
    println!(
        "PASS fading bound: worst excess {:.3e} ≤ 1e-9 over {} sampled times",
        r.fading_max_excess, fx.cfg.solver.fading_samples
    );
}

#[test]
fn observability_certificate_is_positive_and_flips() {
    let fx = Fixture::build(LINEAR);
    let live = unique_continuation(&fx.family, 64, 1e-6, 1.0).unwrap();
    assert!(
        live.pass && live.sigma_min > 1e-6,
        "σ_min = {:.3e} not above the floor",
        live.sigma_min
    );
    let dead = unique_continuation(&fx.family, 64, 1e-6, 0.0).unwrap();
    assert!(
        !dead.pass && dead.sigma_min == 0.0,
        "silencing the input map must flip the verdict (σ_min = {:.3e})",
        dead.sigma_min
    );
    println!(
        "PASS observability: σ_min = {:.6e} > 1e-6 over 64 samples; \
         zero input map flips to σ_min = 0",
        live.sigma_min
    );
}

#[test]
fn integrator_decay_is_exact_and_second_order() {
    let fx = Fixture::build(LINEAR);

    // Homogeneous run against the exact multipliers.
    let x0 = ModeVector::from_coeffs(&[1.0, -0.5, 0.25, 0.1, 0.0, 0.05, 0.0, 0.01]);
    let traj = free_decay(&fx.family, &fx.basis, &fx.grid, &x0, 2.0).unwrap();
    let exact = fx.family.apply(1.0, 0.0, &x0).unwrap();
    let decay_defect = traj.terminal().sub(&exact).norm();
    assert!(decay_defect <= 1e-10, "decay defect {decay_defect:.3e} > 1e-10");

    // Forced run against the closed-form response to u₃(t) = sin t, halved
    // steps must divide the error by about four.
    let exact_forced = (9.0 * 1f64.sin() - 1f64.cos() + (-9.0f64).exp()) / 82.0;
    let forced_error = |steps: usize| -> f64 {
        let grid = TimeGrid::new(1.0, steps, &ImpulseSet::empty()).unwrap();
        let controls: Vec<ControlVector> = grid
            .times()
            .iter()
            .map(|&t| {
                let mut u = ControlVector::zeros(8);
                u.0[1] = t.sin();
                u
            })
            .collect();
        let traj = integrate_mild(
            &fx.family,
            &fx.basis,
            &grid,
            &ModeVector::zeros(8),
            None,
            ControlInput::Sampled(&controls),
            &ImpulseSet::empty(),
            None,
            2.0,
            1e-13,
        )
        .unwrap();
        (traj.terminal().coeff(3) - exact_forced).abs()
    };
    let coarse = forced_error(64);
    let fine = forced_error(128);
    let ratio = coarse / fine;
    assert!(
        (3.5..=4.5).contains(&ratio),
        "halving ratio {ratio:.3} outside [3.5, 4.5] (errors {coarse:.3e} / {fine:.3e})"
    );
    println!(
        "PASS integrator: homogeneous defect {decay_defect:.3e} ≤ 1e-10, \
         halving ratio {ratio:.3} ∈ [3.5, 4.5]"
    );
}

#[test]
fn sweep_rows_are_byte_identical_across_runs() {
    let fx = Fixture::build(IMPULSIVE);
    let run = || {
        let results = sweep(
            &fx.problem(),
            &fx.cfg.steering.lambdas,
            &fx.cfg.selection_policy(None),
            fx.cfg.effective_seed(None),
            &fx.cfg.gamma_options(),
        )
        .unwrap();
        let rows: Vec<_> = results.into_iter().map(|(row, _)| row).collect();
        render_sweep_csv(&rows)
    };
    let first = run();
    let second = run();
    assert_eq!(first, second, "repeated sweeps must render identical bytes");
    assert!(first.lines().count() > 1);
    println!(
        "PASS reproducibility: {} sweep rows render byte-identically on rerun",
        first.lines().count() - 1
    );
}
