// SPDX-License-Identifier: Apache-2.0

//! Runs the full invariant suite on a configuration, the same battery the
//! `check` subcommand executes: semigroup laws, duality identities, Gramian
//! shape, resolvent contraction, observability, history-norm consistency,
//! impulse budgets, and the fading-memory bound.

use std::path::Path;

use evosteer::checks::run_all;
use evosteer::RunConfig;

fn main() -> evosteer::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    for name in ["linear.toml", "impulsive.toml", "p3.toml"] {
        let cfg = RunConfig::from_path(&root.join("configs").join(name))?;
        let report = run_all(&cfg, cfg.effective_seed(None))?;
        println!("== {name} ==");
        print!("{}", report.render_lines());
        println!(
            "{}\n",
            if report.all_pass() {
                "all checks passed"
            } else {
                "CHECKS FAILED"
            }
        );
    }
    Ok(())
}
