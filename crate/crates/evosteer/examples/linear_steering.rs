// SPDX-License-Identifier: Apache-2.0

//! Steers the linear benchmark problem to a third-mode target and audits
//! the run: the measured terminal error matches the closed form
//! λ/(λ+Ψ₃₃), and the integrated endpoint satisfies x(T) = x_T − z to
//! quadrature accuracy.

use std::path::Path;

use evosteer::solver::{steer, SteerProblem};
use evosteer::{Gramian, RunConfig, Selector};

fn main() -> evosteer::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let cfg = RunConfig::from_path(&root.join("configs/linear.toml"))?;

    let family = cfg.to_family()?;
    let basis = cfg.to_basis()?;
    let impulses = cfg.to_impulses()?;
    let grid = cfg.to_time_grid(&impulses)?;
    let history = cfg.to_history(&basis)?;
    let inclusion = cfg.to_inclusion()?;
    let gramian = Gramian::assemble(&family, cfg.solver.quad_tol)?;
    let target = cfg.target_modes();

    let problem = SteerProblem {
        family: &family,
        basis: &basis,
        grid: &grid,
        history: &history,
        inclusion: inclusion.as_ref(),
        impulses: &impulses,
        gramian: &gramian,
        target: &target,
        p: cfg.model.p,
    };

    let lambda = 1e-2;
    let mut selector = Selector::new(cfg.selection_policy(None))?;
    let solve = steer(&problem, lambda, &mut selector, &cfg.gamma_options())?;
    let report = &solve.report;

    let psi33 = gramian.matrix()[(2, 2)];
    let predicted = lambda / (lambda + psi33);
    println!("λ = {lambda}");
    println!("  converged            : {} ({} outer iterations)", report.converged, report.iterations);
    println!("  terminal error       : {:.12e}", report.terminal_error);
    println!("  closed-form λ/(λ+Ψ₃₃): {predicted:.12e}");
    println!(
        "  relative defect      : {:.3e}",
        (report.terminal_error - predicted).abs() / predicted
    );
    println!(
        "  identity residual    : {:.3e}   (x(T) vs x_T − z)",
        report.terminal_identity_residual
    );
    println!(
        "  control: ∫‖u‖² = {:.6e}, sup ‖u‖ = {:.6e}, budget = {:.6e}",
        report.control_l2.powi(2),
        report.sup_control,
        report.control_bound
    );
    println!("  cost ‖x(T)−x_T‖² + λ∫‖u‖² = {:.6e}", report.cost);
    Ok(())
}
