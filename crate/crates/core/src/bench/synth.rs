//! Synthetic datasets drawn from each model's generative process.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{inv_sqrt_sym, DenseMatrix};
use crate::nuts::rng::{chain_rng, combine_seeds};
use crate::targets::{EigenmodelData, McData, PpcaData};

/// Generative settings for one synthetic problem.
#[derive(Debug, Clone, PartialEq)]
pub enum SynthSpec {
    /// A single Haar-uniform frame (no observations).
    Uniform { j: usize, k: usize },
    /// `y_i = W Λ z_i + σ ε_i (+ μ)`, `N` rows in `R^J`.
    Ppca {
        n: usize,
        j: usize,
        k: usize,
        lambda: Vec<f64>,
        sigma: f64,
        with_mean: bool,
    },
    /// Probit graph on `J` nodes.
    Eigenmodel { j: usize, k: usize, lambda: Vec<f64>, mu: f64 },
    /// `J × T` panel with a rank-`K` signal, covariates and masked cells.
    Mc {
        j: usize,
        t: usize,
        k: usize,
        lambda: Vec<f64>,
        sigma: f64,
        beta: Vec<f64>,
        missing_fraction: f64,
        eta: f64,
    },
}

impl SynthSpec {
    /// `N=150, J=5, K=2, λ=(9,1), σ=0.01`.
    pub fn ppca_synthetic1() -> Self {
        SynthSpec::Ppca {
            n: 150,
            j: 5,
            k: 2,
            lambda: vec![9.0, 1.0],
            sigma: 0.01,
            with_mean: false,
        }
    }

    /// `N=100, J=50, K=3, λ=(5,3,1.5), σ²=1`.
    pub fn ppca_synthetic2() -> Self {
        SynthSpec::Ppca {
            n: 100,
            j: 50,
            k: 3,
            lambda: vec![5.0, 3.0, 1.5],
            sigma: 1.0,
            with_mean: false,
        }
    }

    /// `λ_k = J(1 − k/(2K))`, `μ = −0.5`.
    pub fn eigenmodel_default(j: usize, k: usize) -> Self {
        SynthSpec::Eigenmodel {
            j,
            k,
            lambda: (0..k).map(|i| j as f64 * (1.0 - 0.5 * i as f64 / k as f64)).collect(),
            mu: -0.5,
        }
    }

    /// `λ_k = 2√(JT)(K−k)/K`, `σ = 1`, one covariate with `β = 1`, 10% masked.
    pub fn mc_default(j: usize, t: usize, k: usize) -> Self {
        let scale = 2.0 * ((j * t) as f64).sqrt();
        SynthSpec::Mc {
            j,
            t,
            k,
            lambda: (0..k).map(|i| scale * (k - i) as f64 / k as f64).collect(),
            sigma: 1.0,
            beta: vec![1.0],
            missing_fraction: 0.1,
            eta: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Dataset {
    Uniform { j: usize, k: usize },
    Ppca(PpcaData),
    Eigenmodel(EigenmodelData),
    Mc(McData),
}

/// Generating values, kept for recovery checks.
#[derive(Debug, Clone, Default)]
pub struct Truth {
    pub frames: Vec<DenseMatrix>,
    pub lambda: Vec<f64>,
    pub sigma: f64,
    pub mu: Vec<f64>,
    pub beta: Vec<f64>,
    /// True values at the masked cells, in parameter order.
    pub held_out: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub truth: Truth,
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DenseMatrix {
    let v = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DenseMatrix::from_vec(rows, cols, v).expect("sizes match")
}

/// Haar-uniform frame: `Z (ZᵀZ)^{-1/2}` with Gaussian `Z`.
pub fn uniform_frame<R: Rng + ?Sized>(j: usize, k: usize, rng: &mut R) -> DenseMatrix {
    loop {
        let z = gaussian_matrix(j, k, rng);
        if let Ok(m) = inv_sqrt_sym(&z.t_matmul(&z)) {
            return z.matmul(&m);
        }
    }
}

/// Deterministic dataset for `(spec, seed)`.
pub fn synth_data(spec: &SynthSpec, seed: u64) -> Synthetic {
    let mut rng = chain_rng(combine_seeds(&[seed, 0x5eed_da7a]));
    match spec {
        SynthSpec::Uniform { j, k } => Synthetic {
            dataset: Dataset::Uniform { j: *j, k: *k },
            truth: Truth {
                frames: vec![uniform_frame(*j, *k, &mut rng)],
                ..Truth::default()
            },
        },
        SynthSpec::Ppca {
            n,
            j,
            k,
            lambda,
            sigma,
            with_mean,
        } => {
            let w = uniform_frame(*j, *k, &mut rng);
            let mu: Vec<f64> = if *with_mean {
                (0..*j).map(|_| rng.sample(StandardNormal)).collect()
            } else {
                vec![0.0; *j]
            };
            let z = gaussian_matrix(*n, *k, &mut rng).scale_cols(lambda);
            let mut y = z.matmul_t(&w);
            for i in 0..*n {
                for c in 0..*j {
                    y[(i, c)] += mu[c] + sigma * rng.sample::<f64, _>(StandardNormal);
                }
            }
            Synthetic {
                dataset: Dataset::Ppca(PpcaData::new(y, *k, *with_mean).expect("valid synthetic PPCA")),
                truth: Truth {
                    frames: vec![w],
                    lambda: lambda.clone(),
                    sigma: *sigma,
                    mu,
                    ..Truth::default()
                },
            }
        }
        SynthSpec::Eigenmodel { j, k, lambda, mu } => {
            let u = uniform_frame(*j, *k, &mut rng);
            let m = u.scale_cols(lambda).matmul_t(&u);
            let mut y = DenseMatrix::zeros(*j, *j);
            for a in 0..*j {
                for b in (a + 1)..*j {
                    let latent = m[(a, b)] + mu + rng.sample::<f64, _>(StandardNormal);
                    let v = if latent > 0.0 { 1.0 } else { 0.0 };
                    y[(a, b)] = v;
                    y[(b, a)] = v;
                }
            }
            Synthetic {
                dataset: Dataset::Eigenmodel(EigenmodelData::new(y, *k).expect("valid synthetic graph")),
                truth: Truth {
                    frames: vec![u],
                    lambda: lambda.clone(),
                    mu: vec![*mu],
                    ..Truth::default()
                },
            }
        }
        SynthSpec::Mc {
            j,
            t,
            k,
            lambda,
            sigma,
            beta,
            missing_fraction,
            eta,
        } => {
            let phi = uniform_frame(*j, *k, &mut rng);
            let psi = uniform_frame(*t, *k, &mut rng);
            let covariates: Vec<DenseMatrix> = beta.iter().map(|_| gaussian_matrix(*j, *t, &mut rng)).collect();
            let mut y = phi.scale_cols(lambda).matmul_t(&psi);
            for (x, b) in covariates.iter().zip(beta) {
                y.axpy(*b, x);
            }
            for v in y.as_mut_slice() {
                *v += sigma * rng.sample::<f64, _>(StandardNormal);
            }
            let cells = *j * *t;
            let n_missing = ((missing_fraction * cells as f64).round() as usize).min(cells);
            let mut order: Vec<usize> = (0..cells).collect();
            let data = loop {
                order.shuffle(&mut rng);
                let mut missing = vec![false; cells];
                for &c in &order[..n_missing] {
                    missing[c] = true;
                }
                if let Ok(d) = McData::new(y.clone(), missing, covariates.clone(), *k, *eta) {
                    break d;
                }
            };
            let mut data = data;
            let held_out = data.missing_cells().iter().map(|&(r, c)| y[(r, c)]).collect();
            // Masked values never reach the model.
            for (r, c) in data.missing_cells() {
                data.y[(r, c)] = 0.0;
            }
            Synthetic {
                dataset: Dataset::Mc(data),
                truth: Truth {
                    frames: vec![phi, psi],
                    lambda: lambda.clone(),
                    sigma: *sigma,
                    beta: beta.clone(),
                    held_out,
                    ..Truth::default()
                },
            }
        }
    }
}
