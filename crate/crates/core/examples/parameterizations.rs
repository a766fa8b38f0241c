//! Maps one random unconstrained vector to an orthonormal frame with each
//! of the four parameterizations and prints what comes out.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use stiefel_mcmc::param::{ParamKind, ParamSpec};

fn main() {
    let (j, k) = (6, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    println!("V({j},{k}) has dimension {}", j * k - k * (k + 1) / 2);
    for kind in ParamKind::ALL {
        let spec = ParamSpec::new(kind, j, k).unwrap();
        // Keep the Givens pairs inside the chart: first coordinate positive.
        let mut phi: Vec<f64> = (0..spec.phi_len()).map(|_| rng.sample(StandardNormal)).collect();
        if kind == ParamKind::Givens {
            for pair in phi.chunks_mut(2) {
                pair[0] = pair[0].abs() + 0.5;
            }
        }
        let map = spec.eval(&phi).unwrap();
        let counts = spec.counts();
        println!(
            "\n{kind}: {} unconstrained coordinates ({} essential), log-adjust {:.4}, ‖ΥᵀΥ − I‖ = {:.1e}",
            spec.phi_len(),
            counts.essential,
            map.log_adjust,
            map.upsilon.orthonormality_error()
        );
        for r in 0..j {
            let row: Vec<String> = map.upsilon.row(r).iter().map(|v| format!("{v:8.4}")).collect();
            println!("  {}", row.join(" "));
        }
    }
}
