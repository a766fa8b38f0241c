//! Low-rank matrix completion for panel data:
//! `Y = Φ Λ Ψᵀ + Ξ + U`, `Ξ_{jt} = βᵀ x_{jt}`, `u_{jt} ~ N(0, σ²)`.
//!
//! Missing cells of `Y` are parameters, stored in row-major order of the
//! mask. Priors: `λ_k ~ Exp(η)`, flat on `β` and the missing cells, and
//! `p(σ²) ∝ σ^{-2}`.

use super::{check_shapes, AuxBlock, AuxTransform, LogPost, TargetError, TargetModel};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone)]
pub struct McData {
    /// `J × T` panel; values at missing cells are ignored.
    pub y: DenseMatrix,
    /// Row-major, `true` where the cell is missing.
    pub missing: Vec<bool>,
    /// One `J × T` matrix per covariate.
    pub covariates: Vec<DenseMatrix>,
    pub k: usize,
    pub eta: f64,
}

impl McData {
    pub fn new(
        y: DenseMatrix,
        missing: Vec<bool>,
        covariates: Vec<DenseMatrix>,
        k: usize,
        eta: f64,
    ) -> Result<Self, TargetError> {
        let (j, t) = y.shape();
        if missing.len() != j * t {
            return Err(TargetError::Data(format!(
                "mask has {} cells, panel has {}",
                missing.len(),
                j * t
            )));
        }
        if k == 0 || k >= j.min(t) {
            return Err(TargetError::Data(format!("rank K={k} must satisfy 0 < K < min(J, T)")));
        }
        if !(eta > 0.0) {
            return Err(TargetError::Data(format!("exponential rate must be positive, got {eta}")));
        }
        for (i, x) in covariates.iter().enumerate() {
            if x.shape() != (j, t) || !x.is_finite() {
                return Err(TargetError::Data(format!("covariate {i} must be a finite {j}x{t} matrix")));
            }
        }
        for r in 0..j {
            if (0..t).all(|c| missing[r * t + c]) {
                return Err(TargetError::Data(format!("row {r} has no observed entry")));
            }
        }
        for c in 0..t {
            if (0..j).all(|r| missing[r * t + c]) {
                return Err(TargetError::Data(format!("column {c} has no observed entry")));
            }
        }
        for r in 0..j {
            for c in 0..t {
                if !missing[r * t + c] && !y[(r, c)].is_finite() {
                    return Err(TargetError::Data(format!("observed cell ({r},{c}) is not finite")));
                }
            }
        }
        Ok(Self {
            y,
            missing,
            covariates,
            k,
            eta,
        })
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|m| **m).count()
    }

    /// Row-major `(row, col)` of each missing cell, in parameter order.
    pub fn missing_cells(&self) -> Vec<(usize, usize)> {
        let t = self.y.cols();
        self.missing
            .iter()
            .enumerate()
            .filter(|(_, m)| **m)
            .map(|(i, _)| (i / t, i % t))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct MatrixCompletion {
    data: McData,
    cells: Vec<(usize, usize)>,
}

impl MatrixCompletion {
    pub fn new(data: McData) -> Self {
        let cells = data.missing_cells();
        Self { data, cells }
    }

    pub fn data(&self) -> &McData {
        &self.data
    }

    /// Residual `Y − ΦΛΨᵀ − Ξ` with the missing cells filled in.
    fn residual(&self, phi: &DenseMatrix, psi: &DenseMatrix, lambda: &[f64], beta: &[f64], y_miss: &[f64]) -> DenseMatrix {
        let mut y = self.data.y.clone();
        for (&(r, c), v) in self.cells.iter().zip(y_miss) {
            y[(r, c)] = *v;
        }
        let mut e = y.sub(&phi.scale_cols(lambda).matmul_t(psi));
        for (x, b) in self.data.covariates.iter().zip(beta) {
            e.axpy(-b, x);
        }
        e
    }
}

impl TargetModel for MatrixCompletion {
    fn name(&self) -> &str {
        "mc"
    }

    fn stiefel_blocks(&self) -> Vec<(usize, usize)> {
        let (j, t) = self.data.y.shape();
        vec![(j, self.data.k), (t, self.data.k)]
    }

    fn aux_blocks(&self) -> Vec<AuxBlock> {
        vec![
            AuxBlock::new("lambda", self.data.k, AuxTransform::Log),
            AuxBlock::new("beta", self.data.covariates.len(), AuxTransform::Identity),
            AuxBlock::new("sigma2", 1, AuxTransform::Log),
            AuxBlock::new("y_miss", self.cells.len(), AuxTransform::Identity),
        ]
    }

    fn log_posterior(&self, stiefel: &[DenseMatrix], aux: &[Vec<f64>]) -> Result<LogPost, TargetError> {
        check_shapes(self, stiefel, aux)?;
        let (phi, psi) = (&stiefel[0], &stiefel[1]);
        let (lambda, beta, y_miss) = (&aux[0], &aux[1], &aux[3]);
        let sigma2 = aux[2][0];
        if lambda.iter().any(|l| !(*l >= 0.0)) || !(sigma2 > 0.0) {
            return Err(TargetError::Domain("λ must be non-negative and σ² positive".into()));
        }
        let (j, t) = self.data.y.shape();
        let cells = (j * t) as f64;

        let e = self.residual(phi, psi, lambda, beta, y_miss);
        let sse = e.frob_dot(&e);
        let mut value = -0.5 * cells * (2.0 * std::f64::consts::PI * sigma2).ln() - 0.5 * sse / sigma2;
        // ∂/∂E of the log-likelihood.
        let g = e.scale(-1.0 / sigma2);

        let phi_bar = g.matmul(psi).scale_cols(lambda).scale(-1.0);
        let psi_bar = g.t_matmul(phi).scale_cols(lambda).scale(-1.0);
        let gpsi = g.matmul(psi);
        let mut lambda_bar: Vec<f64> = (0..self.data.k)
            .map(|kk| -(0..j).map(|r| phi[(r, kk)] * gpsi[(r, kk)]).sum::<f64>())
            .collect();
        let beta_bar: Vec<f64> = self.data.covariates.iter().map(|x| -g.frob_dot(x)).collect();
        let mut sigma2_bar = -0.5 * cells / sigma2 + 0.5 * sse / (sigma2 * sigma2);
        let y_miss_bar: Vec<f64> = self.cells.iter().map(|&(r, c)| g[(r, c)]).collect();

        let eta = self.data.eta;
        for (l, lb) in lambda.iter().zip(lambda_bar.iter_mut()) {
            value += eta.ln() - eta * l;
            *lb -= eta;
        }
        value -= sigma2.ln();
        sigma2_bar -= 1.0 / sigma2;

        Ok(LogPost {
            value,
            stiefel_grad: vec![phi_bar, psi_bar],
            aux_grad: vec![lambda_bar, beta_bar, vec![sigma2_bar], y_miss_bar],
        })
    }
}
