// SPDX-License-Identifier: Apache-2.0

//! Runtime invariant suite: every structural property the model objects
//! promise, evaluated on the configured problem with measured defects.
//!
//! Each check reports the measured value next to its threshold so a failure
//! is immediately quantitative. The suite is what the `check` subcommand
//! runs; a failed check maps to the invariant-failure exit code.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::evolution::{Coefficient, EvolutionFamily};
use crate::inclusion::{SelectionPolicy, Selector};
use crate::quad::adaptive_gauss;
use crate::solver::{free_decay, integrate_mild, ControlInput, TimeGrid};
use crate::space::ModeVector;
use crate::steering::{
    apply_b, apply_b_star, resolvent_solve, unique_continuation, Gramian, ResolventOptions,
};
use crate::Result;

/// One measured invariant.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    /// Measured defect or quantity.
    pub value: f64,
    /// Limit it was compared against.
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckReport {
    pub results: Vec<CheckResult>,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    /// One line per check, the format the CLI prints.
    pub fn render_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            let status = if r.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!(
                "{status}  {:<28} value {:>12.5e}  limit {:>9.2e}  {}\n",
                r.name, r.value, r.threshold, r.detail
            ));
        }
        out
    }
}

fn random_modes(rng: &mut ChaCha8Rng, n: usize) -> ModeVector {
    let mut v = ModeVector::zeros(n);
    for i in 0..n {
        v.0[i] = rng.gen_range(-1.0..1.0);
    }
    v
}

/// Runs the whole suite on the configured problem.
pub fn run_all(cfg: &RunConfig, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut results = Vec::new();
    let mut push = |name: &'static str, value: f64, threshold: f64, pass: bool, detail: String| {
        results.push(CheckResult {
            name,
            pass,
            value,
            threshold,
            detail,
        });
    };

    let family = cfg.to_family()?;
    let basis = cfg.to_basis()?;
    let p = cfg.model.p;
    let n = cfg.model.modes;
    let horizon = cfg.model.horizon;

    // Coefficient positivity on a fine sampling.
    {
        let mut min_a = f64::INFINITY;
        for j in 0..=2048 {
            let t = horizon * j as f64 / 2048.0;
            min_a = min_a.min(family.coefficient().value(t));
        }
        push(
            "coefficient_positivity",
            min_a,
            0.0,
            min_a > 0.0,
            "min a(t) on a 2049-point sampling; must stay positive".into(),
        );
    }

    // Declared modulus of continuity, when the config claims one.
    if let (Some(order), Some(constant)) = (cfg.model.modulus_order, cfg.model.modulus_constant) {
        let excess = family
            .coefficient()
            .modulus_excess(order, constant, horizon);
        push(
            "coefficient_modulus",
            excess,
            1e-12,
            excess <= 1e-12,
            format!("max |a(t)−a(s)| − {constant}·|t−s|^{order} over sampled pairs"),
        );
    }

    // Two-parameter identities on random triples and states.
    {
        let mut worst_cocycle: f64 = 0.0;
        let mut worst_contraction: f64 = 0.0;
        let mut worst_adjoint: f64 = 0.0;
        for _ in 0..1000 {
            let mut a = rng.gen_range(0.0..horizon);
            let mut b = rng.gen_range(0.0..horizon);
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            let r = rng.gen_range(a..=b);
            let x = random_modes(&mut rng, n);
            let y = random_modes(&mut rng, n);

            let two_leg = family.apply(b, r, &family.apply(r, a, &x)?)?;
            let one_leg = family.apply(b, a, &x)?;
            worst_cocycle = worst_cocycle.max(two_leg.sub(&one_leg).norm());

            worst_contraction = worst_contraction.max(one_leg.norm() - x.norm());

            let lhs = one_leg.0.dot(&y.0);
            let rhs = x.0.dot(&family.apply_adjoint(b, a, &y)?.0);
            worst_adjoint = worst_adjoint.max((lhs - rhs).abs());
        }
        push(
            "cocycle_identity",
            worst_cocycle,
            1e-10,
            worst_cocycle <= 1e-10,
            "max ‖U(t,r)U(r,s)x − U(t,s)x‖ over 1000 random triples".into(),
        );
        push(
            "contraction",
            worst_contraction,
            1e-12,
            worst_contraction <= 1e-12,
            "max ‖U(t,s)x‖ − ‖x‖; the family must not expand".into(),
        );
        push(
            "adjoint_pairing",
            worst_adjoint,
            1e-12,
            worst_adjoint <= 1e-12,
            "max |⟨U(t,s)x, y⟩ − ⟨x, U*(t,s)y⟩| over 1000 random pairs".into(),
        );
    }

    // Tail of the multiplier sequence: the compactness witness at mode 32
    // over the shortest separation the toolkit cares about.
    {
        let gap = 0.05f64.min(horizon);
        let witness = EvolutionFamily::new(cfg.coefficient.clone(), horizon, 32)?;
        let tail = witness.decay_profile(horizon - gap, horizon)?[31];
        push(
            "multiplier_tail",
            tail,
            1e-12,
            tail <= 1e-12,
            format!("mode-32 multiplier across a {gap} time gap"),
        );
    }

    // Duality mapping identities on random states.
    {
        let mut worst_pairing: f64 = 0.0;
        let mut worst_exchange: f64 = 0.0;
        for _ in 0..200 {
            let x = basis.from_modes(&random_modes(&mut rng, n), p)?;
            let nx = x.lp_norm();
            if nx < 1e-9 {
                continue;
            }
            let j = x.duality_map();
            let pairing = x.pairing(&j)?;
            worst_pairing = worst_pairing.max((pairing - nx * nx).abs() / (nx * nx));
            worst_exchange = worst_exchange.max((j.lq_norm() - nx).abs() / nx);
        }
        push(
            "duality_pairing",
            worst_pairing,
            1e-9,
            worst_pairing <= 1e-9,
            "max rel |⟨x,𝒥x⟩ − ‖x‖²| over 200 random states".into(),
        );
        push(
            "duality_norm_exchange",
            worst_exchange,
            1e-9,
            worst_exchange <= 1e-9,
            "max rel |‖𝒥x‖_q − ‖x‖_p| over 200 random states".into(),
        );
    }

    // Gramian shape and entries.
    let gramian = Gramian::assemble(&family, cfg.solver.quad_tol)?;
    {
        let sym = gramian.symmetry_defect();
        push(
            "gramian_symmetry",
            sym,
            1e-12,
            sym <= 1e-12,
            "max |Ψ − Ψᵀ| entry".into(),
        );
        let eig = gramian.min_eigenvalue();
        push(
            "gramian_psd",
            eig,
            -1e-12,
            eig >= -1e-12,
            "smallest eigenvalue of Ψ; must be nonnegative".into(),
        );

        let defect = match family.coefficient() {
            Coefficient::Constant { value } => {
                // Closed forms: Ψ entries are (weight/(c·a))·(1 − e^{−c·a·T}).
                let entry = |weight: f64, c: f64| {
                    weight * (1.0 - (-c * value * horizon).exp()) / (c * value)
                };
                let m = gramian.matrix();
                let mut worst = (m[(0, 0)] - entry(4.0, 2.0)).abs();
                worst = worst.max((m[(0, 1)] - entry(2.0, 5.0)).abs());
                worst = worst.max((m[(1, 1)] - entry(1.0, 8.0)).abs());
                for k in 3..=n {
                    let c = 2.0 * (k * k) as f64;
                    worst = worst.max((m[(k - 1, k - 1)] - entry(1.0, c)).abs());
                }
                worst
            }
            _ => {
                // Operator-path quadrature against the assembled matrix.
                let probe = random_modes(&mut rng, n);
                let direct = gramian.apply(&probe);
                let mut worst: f64 = 0.0;
                for k in 0..n {
                    let q = adaptive_gauss(
                        &|t| {
                            let w = family.apply_adjoint(horizon, t, &probe).unwrap();
                            let w = apply_b(&apply_b_star(&w));
                            let w = family.apply(horizon, t, &w).unwrap();
                            w.0[k]
                        },
                        0.0,
                        horizon,
                        1e-12,
                    );
                    worst = worst.max((q - direct.0[k]).abs());
                }
                worst
            }
        };
        push(
            "gramian_entries",
            defect,
            1e-8,
            defect <= 1e-8,
            "worst entry defect against the independent evaluation".into(),
        );
    }

    // Resolvent contraction across a wide λ range at the configured p.
    {
        let opts = ResolventOptions::default();
        let mut worst: f64 = 0.0;
        for exp in [-6.0, -4.0, -2.0, 0.0, 2.0, 3.0] {
            let lambda = 10f64.powf(exp);
            for _ in 0..10 {
                let h = random_modes(&mut rng, n);
                if h.norm() < 1e-9 {
                    continue;
                }
                let sol = resolvent_solve(lambda, &gramian, &h, p, &basis, &opts)?;
                let zp = basis.from_modes(&sol.z, p)?.lp_norm();
                let hp = basis.from_modes(&h, p)?.lp_norm();
                worst = worst.max(zp / hp - 1.0);
            }
        }
        push(
            "resolvent_contraction",
            worst,
            1e-9,
            worst <= 1e-9,
            "max ‖z‖_p/‖g‖_p − 1 over λ ∈ [1e-6, 1e3], 10 gaps each".into(),
        );
    }

    // Observability of the sampled adjoint through the input map.
    {
        let rep = unique_continuation(
            &family,
            cfg.steering.uc_samples,
            cfg.steering.sigma_floor,
            1.0,
        )?;
        push(
            "observability_sigma",
            rep.sigma_min,
            rep.floor,
            rep.pass,
            format!(
                "σ_min of the stacked sampling operator over {} samples; must exceed the floor",
                rep.samples
            ),
        );
    }

    // History norm: the exchanged and double-integral evaluations agree.
    let history = cfg.to_history(&basis)?;
    {
        let nu = cfg.history.nu;
        let a = history.bg_norm(nu);
        let b = history.bg_norm_direct(nu);
        let rel = (a - b).abs() / a.abs().max(1.0);
        push(
            "history_norm_consistency",
            rel,
            1e-8,
            rel <= 1e-8,
            "rel gap between exchanged and direct weighted-norm forms".into(),
        );
    }

    // Impulse budgets dominate actual jumps.
    let impulses = cfg.to_impulses()?;
    if !impulses.is_empty() {
        let mut worst: f64 = -f64::INFINITY;
        for imp in impulses.iter() {
            let d = imp.bound(p, basis.grid())?;
            for amp in [0.0, 1.0, 10.0] {
                let probe = basis.from_modes(&random_modes(&mut rng, n).scaled(amp), p)?;
                let j = imp.apply(&probe).lp_norm();
                worst = worst.max(j - d);
            }
        }
        push(
            "impulse_budgets",
            worst,
            1e-12,
            worst <= 1e-12,
            "max ‖I(x)‖_p − d over probes; the budget must dominate".into(),
        );
    }

    // Selection growth bound.
    let inclusion = cfg.to_inclusion()?;
    if let Some(inc) = &inclusion {
        let mut worst: f64 = -f64::INFINITY;
        let delayed = history.value_at(-inc.delay());
        for j in 0..=8 {
            let t = horizon * j as f64 / 8.0;
            let field = inc.field_at(t, &delayed);
            let g = inc.gamma_sup(t);
            for policy in [
                SelectionPolicy::Lower,
                SelectionPolicy::Upper,
                SelectionPolicy::Midpoint,
                SelectionPolicy::SeededRandom { seed },
            ] {
                let sel = Selector::new(policy)?.select(&field);
                for v in sel {
                    worst = worst.max(v.abs() - g);
                }
            }
        }
        push(
            "selection_growth_bound",
            worst,
            1e-12,
            worst <= 1e-12,
            "max |selection| − γ(t) over policies and sampled times".into(),
        );
    }

    // Fading-memory bound along the free orbit with self-consistent jumps.
    {
        let grid = TimeGrid::new(horizon, cfg.solver.steps.min(200), &impulses)?;
        let x0 = basis.to_modes(history.head())?;
        let traj = if impulses.is_empty() {
            free_decay(&family, &basis, &grid, &x0, p)?
        } else {
            integrate_mild(
                &family,
                &basis,
                &grid,
                &x0,
                None,
                ControlInput::None,
                &impulses,
                None,
                p,
                cfg.solver.quad_tol,
            )?
        };
        let samples = crate::history::check_fading_bound(
            &traj,
            &history,
            cfg.history.nu,
            &basis,
            p,
            cfg.solver.fading_samples,
        )?;
        let excess = samples
            .iter()
            .map(|s| s.lhs - s.rhs)
            .fold(f64::NEG_INFINITY, f64::max);
        push(
            "orbit_fading_bound",
            excess,
            1e-9,
            excess <= 1e-9,
            "max ‖x_t‖_g − (‖φ‖_g + t/ν·sup‖x‖) along the free orbit".into(),
        );
    }

    Ok(CheckReport { results })
}
