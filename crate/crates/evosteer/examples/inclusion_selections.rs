// SPDX-License-Identifier: Apache-2.0

//! Shows the multivalued source term: interval bounds produced by an
//! envelope around a delayed state, the selection policies that pick a
//! single-valued branch, and the growth bound that dominates them all.

use evosteer::space::Grid;
use evosteer::{
    Envelope, InclusionSpec, SelectionPolicy, Selector, StateVector, TimeWeight,
};

fn main() -> evosteer::Result<()> {
    let grid = Grid::uniform(257)?;
    let spec = InclusionSpec::new(
        Envelope::TanhBand { eps: 0.2 },
        TimeWeight::ExpDecay {
            value: 0.5,
            rate: 1.0,
        },
        0.5,
    )?;

    // The delayed state the envelope is evaluated on.
    let delayed = StateVector::from_fn(|xi| xi.sin() - 0.4 * (3.0 * xi).sin(), 2.0, grid)?;
    let t = 0.25;
    let field = spec.field_at(t, &delayed);
    println!(
        "interval field at t = {t}: max width {:.6}, growth bound γ(t) = {:.6}",
        field.width(),
        spec.gamma_sup(t)
    );

    // Each policy picks one branch; all of them stay inside the field.
    for policy in [
        SelectionPolicy::Lower,
        SelectionPolicy::Upper,
        SelectionPolicy::Midpoint,
        SelectionPolicy::ConvexMix { alpha: 0.25 },
        SelectionPolicy::SeededRandom { seed: 42 },
    ] {
        let mut selector = Selector::new(policy)?;
        let values = selector.select(&field);
        let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let inside = field.contains(&values, 1e-12);
        println!(
            "  {:<24} sup |f| = {:.6}   inside field: {inside}",
            format!("{:?}", selector.policy()),
            sup
        );
    }

    // A seeded selector replays its stream after reset, which is what makes
    // the fixed-point iteration treat a random branch as one frozen
    // selection function.
    let mut selector = Selector::new(SelectionPolicy::SeededRandom { seed: 42 })?;
    let first = selector.select(&field);
    selector.reset();
    let replay = selector.select(&field);
    println!(
        "\nseeded replay after reset is identical: {}",
        first == replay
    );

    println!(
        "integrated growth over [0, 2]: ∫γ = {:.6}",
        spec.gamma_norm_l1(2.0, 2.0)
    );
    Ok(())
}
