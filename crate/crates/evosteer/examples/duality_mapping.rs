// SPDX-License-Identifier: Apache-2.0

//! Evaluates the normalized duality mapping on L^p(0, π) and verifies its
//! defining identities: the pairing recovers the squared norm and the image
//! lands in the dual space with the same norm.

use evosteer::space::Grid;
use evosteer::StateVector;

fn main() -> evosteer::Result<()> {
    let grid = Grid::uniform(257)?;

    for p in [1.5, 2.0, 3.0, 4.0] {
        let x = StateVector::from_fn(|xi| xi.sin() + 0.3 * (2.0 * xi).sin(), p, grid.clone())?;
        let nx = x.lp_norm();
        let j = x.duality_map();
        let pairing = x.pairing(&j)?;

        println!("p = {p}");
        println!("  ‖x‖_p              = {:.12}", nx);
        println!("  ⟨x, 𝒥x⟩            = {:.12}", pairing);
        println!(
            "  pairing defect     = {:.3e}",
            (pairing - nx * nx).abs() / (nx * nx)
        );
        println!(
            "  ‖𝒥x‖_q − ‖x‖_p     = {:.3e}",
            (j.lq_norm() - nx).abs()
        );
    }

    // At p = 2 the mapping is the identity.
    let x = StateVector::from_fn(|xi| xi.sin(), 2.0, grid)?;
    let j = x.duality_map();
    let worst = x
        .values()
        .iter()
        .zip(j.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!("\np = 2 pointwise identity defect = {worst:.3e}");
    Ok(())
}
