//! NUTS on the uniform distribution over V(10, 3) with each
//! parameterization: efficiency, divergences and a moment check.

use std::sync::Arc;

use stiefel_mcmc::diagnostics::{chain_report, FunctionOfInterest};
use stiefel_mcmc::nuts::{sample, SamplerConfig};
use stiefel_mcmc::param::ParamKind;
use stiefel_mcmc::targets::{TargetModel, UnconstrainedTarget, Uniform};

fn main() {
    let (j, k) = (10, 3);
    let model: Arc<dyn TargetModel> = Arc::new(Uniform::new(j, k));
    println!("{:<12} {:>8} {:>9} {:>9} {:>6} {:>12}", "kind", "step", "minESS", "ESS/sec", "div", "mean υ² ·J");
    for kind in ParamKind::ALL {
        let target = UnconstrainedTarget::with_kind(model.clone(), kind).unwrap();
        let chain = sample(&target, &SamplerConfig::default().with_seed(1)).unwrap();
        let report = chain_report(&chain, FunctionOfInterest::StiefelOnly).unwrap();
        // Columns of a uniform frame are uniform on the sphere: E υ² = 1/J.
        let frames = chain.mapped_draws.as_ref().unwrap();
        let sq = frames.as_slice().iter().map(|v| v * v).sum::<f64>() / frames.as_slice().len() as f64;
        println!(
            "{:<12} {:>8.4} {:>9.1} {:>9.1} {:>6} {:>12.4}",
            kind.name(),
            chain.step_size,
            report.min_ess,
            report.min_ess_per_sec,
            chain.divergences,
            sq * j as f64
        );
    }
}
