//! Runs the numerical self-check suites that `stiefel-bench check` exposes.

use stiefel_mcmc::check::{run_suite, Suite};

fn main() {
    for suite in [Suite::Jacobians, Suite::Gradients] {
        let report = run_suite(suite);
        println!("{report}\n");
    }
}
