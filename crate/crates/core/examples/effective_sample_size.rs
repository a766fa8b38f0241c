//! Effective sample size of autocorrelated series with the initial
//! positive sequence estimator, against the AR(1) closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use stiefel_mcmc::diagnostics::{autocovariance, ess_estimate};

fn main() {
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for rho in [-0.5, 0.0, 0.5, 0.9, 0.99] {
        let mut x = Vec::with_capacity(n);
        let mut v: f64 = rng.sample::<f64, _>(StandardNormal) / (1.0f64 - rho * rho).sqrt();
        for _ in 0..n {
            x.push(v);
            v = rho * v + rng.sample::<f64, _>(StandardNormal);
        }
        let est = ess_estimate(&x).unwrap();
        let exact = n as f64 * (1.0 - rho) / (1.0 + rho);
        let acov = autocovariance(&x, 1).unwrap();
        println!(
            "ρ = {rho:5.2}: lag-1 autocorrelation {:6.3}, ESS {:9.0} (closed form {:9.0}, clamped at n), {} pairs",
            acov[1] / acov[0],
            est.ess,
            exact.min(n as f64),
            est.pairs
        );
    }
}
