//! Probit eigenmodel for an undirected graph: Pr(edge) = Φ(μ + uᵢᵀΛuⱼ).
//! Fits a synthetic 30-node graph and compares fitted edge probabilities
//! with the observed adjacency.

use std::sync::Arc;

use stiefel_mcmc::bench::{synth_data, Dataset, SynthSpec};
use stiefel_mcmc::nuts::{sample, SamplerConfig};
use stiefel_mcmc::param::ParamKind;
use stiefel_mcmc::targets::{log_normal_cdf, Eigenmodel, TargetModel, UnconstrainedTarget};

fn main() {
    let synthetic = synth_data(&SynthSpec::eigenmodel_default(30, 3), 4);
    let Dataset::Eigenmodel(data) = synthetic.dataset else { unreachable!() };
    let y = data.y.clone();
    let edges = y.as_slice().iter().sum::<f64>() / 2.0;
    println!("{} nodes, {edges} edges", y.rows());
    let model: Arc<dyn TargetModel> = Arc::new(Eigenmodel::new(data));
    println!("auxiliary blocks: {:?}", model.aux_blocks().iter().map(|b| b.name.clone()).collect::<Vec<_>>());
    let target = UnconstrainedTarget::with_kind(model, ParamKind::Polar).unwrap();
    let chain = sample(&target, &SamplerConfig::default().with_seed(3)).unwrap();

    // Posterior mean edge probability, averaged over draws.
    let n = y.rows();
    let mut prob = vec![0.0; n * n];
    for i in 0..chain.draws.rows() {
        let (frames, aux) = target.constrain(chain.draws.row(i)).unwrap();
        let m = frames[0].scale_cols(&aux[0]).matmul_t(&frames[0]);
        for a in 0..n {
            for b in 0..n {
                prob[a * n + b] += log_normal_cdf(aux[1][0] + m[(a, b)]).exp() / chain.draws.rows() as f64;
            }
        }
    }
    let (mut on, mut off, mut n_on, mut n_off) = (0.0, 0.0, 0, 0);
    for a in 0..n {
        for b in (a + 1)..n {
            if y[(a, b)] > 0.5 {
                on += prob[a * n + b];
                n_on += 1;
            } else {
                off += prob[a * n + b];
                n_off += 1;
            }
        }
    }
    println!("mean fitted probability: edges {:.3}, non-edges {:.3}", on / n_on as f64, off / n_off as f64);
    println!("{} divergences", chain.divergences);
}
