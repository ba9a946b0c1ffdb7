// SPDX-License-Identifier: Apache-2.0

//! Demonstrates the interior jumps: a kernel impulse applied to a state, the
//! a-priori budget that dominates any jump it can produce, and the mode
//! coordinates of the jump the integrator actually adds.

use evosteer::impulse::KernelShape;
use evosteer::space::Grid;
use evosteer::{Impulse, ImpulseSet, SineBasis, StateVector};

fn main() -> evosteer::Result<()> {
    let grid = Grid::uniform(513)?;
    let basis = SineBasis::new(grid.clone(), 8)?;

    let impulse = Impulse {
        time: 0.5,
        strength: 0.2,
        shape: KernelShape::SineMode { mode: 2 },
        weight: KernelShape::SineMode { mode: 1 },
    };
    impulse.validate()?;

    // Apply to a rest state and to a larger one; the budget covers both.
    let budget = impulse.bound(2.0, &grid)?;
    println!("impulse at t = {}: budget d = {:.9}", impulse.time, budget);
    for amp in [0.0, 1.0, 5.0] {
        let x = StateVector::from_fn(|xi| amp * xi.sin(), 2.0, grid.clone())?;
        let jump = impulse.apply(&x);
        println!(
            "  ‖I(x)‖ at state amplitude {amp}: {:.9} (≤ budget: {})",
            jump.lp_norm(),
            jump.lp_norm() <= budget + 1e-12
        );
    }

    // The jump in mode coordinates, as the integrator sees it.
    let rest = StateVector::zero(2.0, grid)?;
    let modes = impulse.jump_modes(&basis, &basis.to_modes(&rest)?, 2.0)?;
    println!("\njump modes at the rest state:");
    for n in 1..=basis.n_modes() {
        println!("  mode {n}: {:+.9}", modes.coeff(n));
    }
    println!("(only the shape's mode carries weight; the kernel is separable)");

    // A set validates ordering and interior placement.
    let set = ImpulseSet::new(vec![impulse], 1.0)?;
    println!(
        "\nset of {} impulse(s), total budget Σd = {:.9}",
        set.len(),
        set.total_bound(2.0, basis.grid())?
    );
    Ok(())
}
