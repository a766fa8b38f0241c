//! Network eigenmodel with probit link:
//! `P(y_{jj'} = 1) = Φ((ΥΛΥᵀ)_{jj'} + μ)` over the pairs `j < j'`.

use super::normal::{log_normal_cdf, normal_hazard};
use super::{check_shapes, AuxBlock, AuxTransform, LogPost, TargetError, TargetModel};
use crate::linalg::DenseMatrix;

const MU_PRIOR_VAR: f64 = 100.0;

/// Symmetric binary adjacency matrix and the latent dimension.
#[derive(Debug, Clone)]
pub struct EigenmodelData {
    pub y: DenseMatrix,
    pub k: usize,
}

impl EigenmodelData {
    pub fn new(y: DenseMatrix, k: usize) -> Result<Self, TargetError> {
        let (r, c) = y.shape();
        if r != c {
            return Err(TargetError::Data(format!("adjacency must be square, got {r}x{c}")));
        }
        if k == 0 || k > r {
            return Err(TargetError::Data(format!("latent dimension {k} invalid for J={r}")));
        }
        for i in 0..r {
            for j in 0..r {
                let v = y[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(TargetError::Data(format!("y[{i},{j}] = {v} is not binary")));
                }
                if v != y[(j, i)] {
                    return Err(TargetError::Data(format!("adjacency not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { y, k })
    }

    pub fn nodes(&self) -> usize {
        self.y.rows()
    }
}

/// Parameters: `Υ ∈ V^{J×K}`, `λ ∈ R^K` with `N(0, J)` priors, and
/// `μ ∈ R` with a `N(0, 10²)` prior.
#[derive(Debug, Clone)]
pub struct Eigenmodel {
    data: EigenmodelData,
}

impl Eigenmodel {
    pub fn new(data: EigenmodelData) -> Self {
        Self { data }
    }

    pub fn data(&self) -> &EigenmodelData {
        &self.data
    }

    /// Likelihood only, without priors.
    pub fn log_likelihood(&self, upsilon: &DenseMatrix, lambda: &[f64], mu: f64) -> f64 {
        let m = upsilon.scale_cols(lambda).matmul_t(upsilon);
        let n = self.data.nodes();
        let mut ll = 0.0;
        for j in 0..n {
            for jj in j + 1..n {
                let s = if self.data.y[(j, jj)] == 1.0 { 1.0 } else { -1.0 };
                ll += log_normal_cdf(s * (m[(j, jj)] + mu));
            }
        }
        ll
    }
}

fn log_normal_density(x: f64, var: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * x * x / var
}

impl TargetModel for Eigenmodel {
    fn name(&self) -> &str {
        "eigenmodel"
    }

    fn stiefel_blocks(&self) -> Vec<(usize, usize)> {
        vec![(self.data.nodes(), self.data.k)]
    }

    fn aux_blocks(&self) -> Vec<AuxBlock> {
        vec![
            AuxBlock::new("lambda", self.data.k, AuxTransform::Identity),
            AuxBlock::new("mu", 1, AuxTransform::Identity),
        ]
    }

    fn log_posterior(&self, stiefel: &[DenseMatrix], aux: &[Vec<f64>]) -> Result<LogPost, TargetError> {
        check_shapes(self, stiefel, aux)?;
        let u = &stiefel[0];
        let lambda = &aux[0];
        let mu = aux[1][0];
        let n = self.data.nodes();
        let k = self.data.k;

        let m = u.scale_cols(lambda).matmul_t(u);
        let mut value = 0.0;
        let mut g = DenseMatrix::zeros(n, n);
        let mut mu_bar = 0.0;
        for j in 0..n {
            for jj in j + 1..n {
                let s = if self.data.y[(j, jj)] == 1.0 { 1.0 } else { -1.0 };
                let z = s * (m[(j, jj)] + mu);
                value += log_normal_cdf(z);
                let d = s * normal_hazard(z);
                g[(j, jj)] = d;
                g[(jj, j)] = d;
                mu_bar += d;
            }
        }

        // m_{jj'} = Σ_k Υ_jk λ_k Υ_j'k, summed over j < j' (G symmetric, zero diagonal).
        let gu = g.matmul(u);
        let u_bar = gu.scale_cols(lambda);
        let mut lambda_bar = vec![0.0; k];
        for (kk, lb) in lambda_bar.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..n {
                acc += u[(j, kk)] * gu[(j, kk)];
            }
            *lb = 0.5 * acc;
        }

        let lambda_var = n as f64;
        value += log_normal_density(mu, MU_PRIOR_VAR);
        mu_bar -= mu / MU_PRIOR_VAR;
        for (l, lb) in lambda.iter().zip(lambda_bar.iter_mut()) {
            value += log_normal_density(*l, lambda_var);
            *lb -= l / lambda_var;
        }

        Ok(LogPost {
            value,
            stiefel_grad: vec![u_bar],
            aux_grad: vec![lambda_bar, vec![mu_bar]],
        })
    }
}
