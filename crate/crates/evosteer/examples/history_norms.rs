// SPDX-License-Identifier: Apache-2.0

//! Exercises the phase space of histories: builds a decaying segment, takes
//! its weighted norm two independent ways, and follows the fading-memory
//! bound along a free orbit.

use evosteer::history::{build_history, check_fading_bound};
use evosteer::solver::free_decay;
use evosteer::space::Grid;
use evosteer::{
    Coefficient, EvolutionFamily, HistoryKind, ImpulseSet, SineBasis, TimeGrid,
};

fn main() -> evosteer::Result<()> {
    let grid = Grid::uniform(257)?;
    let basis = SineBasis::new(grid, 8)?;
    let nu = 1.0;

    let history = build_history(
        &HistoryKind::DecayingMode {
            mode: 1,
            amplitude: 0.8,
            rate: 1.0,
        },
        4.0,
        0.02,
        &basis,
        2.0,
    )?;

    println!("segment over [−{}, 0]", history.window());
    println!("  ‖ψ(0)‖_p            = {:.9}", history.head().lp_norm());
    println!("  sup norm over [−1,0] = {:.9}", history.segment_norm(1.0)?);

    // The weighted norm admits two evaluations: the exchanged single
    // integral and the literal double integral. They must agree.
    let a = history.bg_norm(nu);
    let b = history.bg_norm_direct(nu);
    println!("  weighted norm        = {a:.12}");
    println!("  direct evaluation    = {b:.12}");
    println!("  cross-check defect   = {:.3e}", (a - b).abs());

    // Fading memory: along any bounded orbit, the history norm of the
    // shifted segment stays under the decayed start plus the running sup.
    let family = EvolutionFamily::new(Coefficient::Constant { value: 1.0 }, 1.0, 8)?;
    let time_grid = TimeGrid::new(1.0, 100, &ImpulseSet::empty())?;
    let x0 = basis.to_modes(history.head())?;
    let traj = free_decay(&family, &basis, &time_grid, &x0, 2.0)?;

    let samples = check_fading_bound(&traj, &history, nu, &basis, 2.0, 10)?;
    println!("\nfading-memory bound along the free orbit:");
    println!("      t        ‖x_t‖_g        bound");
    for s in &samples {
        println!("  {:6.2}   {:12.9}   {:12.9}", s.t, s.lhs, s.rhs);
    }
    let excess = samples
        .iter()
        .map(|s| s.lhs - s.rhs)
        .fold(f64::NEG_INFINITY, f64::max);
    println!("  worst excess = {excess:.3e} (negative means slack)");
    Ok(())
}
