//! Probabilistic PCA with the latent factors integrated out:
//! `y_i ~ N(μ, W Λ² Wᵀ + σ² I_J)` with `W ∈ V^{J×K}`.
//!
//! The marginal density is evaluated through the Woodbury and determinant
//! identities with `M = Λ^{-2} + σ^{-2} WᵀW`, so a gradient costs
//! `O(NJK + K³)`. Priors are flat on `λ`, `σ²` and `μ`.

use super::{check_shapes, AuxBlock, AuxTransform, LogPost, TargetError, TargetModel};
use crate::linalg::{cholesky, solve, DenseMatrix};

/// `N × J` observations.
#[derive(Debug, Clone)]
pub struct PpcaData {
    pub y: DenseMatrix,
    pub k: usize,
    pub with_mean: bool,
}

impl PpcaData {
    pub fn new(y: DenseMatrix, k: usize, with_mean: bool) -> Result<Self, TargetError> {
        let j = y.cols();
        if k == 0 || k >= j {
            return Err(TargetError::Data(format!("PPCA needs 0 < K < J, got K={k}, J={j}")));
        }
        if !y.is_finite() {
            return Err(TargetError::Data("PPCA observations must be finite".into()));
        }
        Ok(Self { y, k, with_mean })
    }
}

#[derive(Debug, Clone)]
pub struct Ppca {
    data: PpcaData,
    ordered: bool,
    /// `‖Y‖²_F`, reused when there is no mean block.
    y_sq: f64,
}

impl Ppca {
    /// `λ` is kept descending by an ordered transform.
    pub fn new(data: PpcaData) -> Self {
        let y_sq = data.y.frob_dot(&data.y);
        Self {
            data,
            ordered: true,
            y_sq,
        }
    }

    /// Samples `λ` through a plain log transform instead of the ordered one.
    pub fn unordered(mut self) -> Self {
        self.ordered = false;
        self
    }

    pub fn data(&self) -> &PpcaData {
        &self.data
    }

    fn n(&self) -> usize {
        self.data.y.rows()
    }

    fn j(&self) -> usize {
        self.data.y.cols()
    }
}

impl TargetModel for Ppca {
    fn name(&self) -> &str {
        "ppca"
    }

    fn stiefel_blocks(&self) -> Vec<(usize, usize)> {
        vec![(self.j(), self.data.k)]
    }

    fn aux_blocks(&self) -> Vec<AuxBlock> {
        let lambda = if self.ordered {
            AuxTransform::OrderedPositiveDesc
        } else {
            AuxTransform::Log
        };
        let mut out = vec![
            AuxBlock::new("lambda", self.data.k, lambda),
            AuxBlock::new("sigma2", 1, AuxTransform::Log),
        ];
        if self.data.with_mean {
            out.push(AuxBlock::new("mu", self.j(), AuxTransform::Identity));
        }
        out
    }

    fn log_posterior(&self, stiefel: &[DenseMatrix], aux: &[Vec<f64>]) -> Result<LogPost, TargetError> {
        check_shapes(self, stiefel, aux)?;
        let w = &stiefel[0];
        let lambda = &aux[0];
        let sigma2 = aux[1][0];
        if lambda.iter().any(|l| !(*l > 0.0)) || !(sigma2 > 0.0) {
            return Err(TargetError::Domain("PPCA scales must be positive".into()));
        }
        let (n, j, k) = (self.n(), self.j(), self.data.k);
        let nf = n as f64;
        let a = 1.0 / sigma2;
        let d: Vec<f64> = lambda.iter().map(|l| l * l).collect();

        let (r, r_sq) = match aux.get(2) {
            Some(mu) => {
                let mut r = self.data.y.clone();
                for i in 0..n {
                    for (v, m) in r.row_mut(i).iter_mut().zip(mu) {
                        *v -= m;
                    }
                }
                let sq = r.frob_dot(&r);
                (r, sq)
            }
            None => (self.data.y.clone(), self.y_sq),
        };

        let gram = w.t_matmul(w);
        let mut m = gram.scale(a);
        for i in 0..k {
            m[(i, i)] += 1.0 / d[i];
        }
        let l = cholesky(&m)?;
        let logdet_m: f64 = 2.0 * (0..k).map(|i| l[(i, i)].ln()).sum::<f64>();
        let m_inv = solve(&m, &DenseMatrix::identity(k))?.symmetric_part();

        let p = r.matmul(w);
        let q = p.t_matmul(&p);
        let minv_q = m_inv.matmul(&q);
        let tr_minv_q: f64 = (0..k).map(|i| minv_q[(i, i)]).sum();
        let sum_log_d: f64 = d.iter().map(|v| v.ln()).sum();
        let two_pi = 2.0 * std::f64::consts::PI;
        let jf = j as f64;
        let value = -0.5
            * (nf * jf * two_pi.ln() - nf * jf * a.ln() + nf * sum_log_d + nf * logdet_m + a * r_sq
                - a * a * tr_minv_q);

        // Adjoints of the intermediate quantities.
        let m_bar = m_inv
            .scale(nf)
            .add(&minv_q.matmul(&m_inv).scale(a * a))
            .scale(-0.5);
        let q_bar = m_inv.scale(0.5 * a * a);
        let a_bar = -0.5 * (-nf * jf / a + r_sq - 2.0 * a * tr_minv_q) + m_bar.frob_dot(&gram);
        let d_bar: Vec<f64> = (0..k)
            .map(|i| -0.5 * nf / d[i] - m_bar[(i, i)] / (d[i] * d[i]))
            .collect();

        let p_bar = p.matmul(&q_bar).scale(2.0);
        let mut w_bar = w.matmul(&m_bar).scale(2.0 * a);
        w_bar.add_assign(&r.t_matmul(&p_bar));

        let lambda_bar: Vec<f64> = lambda.iter().zip(&d_bar).map(|(l, db)| 2.0 * l * db).collect();
        let sigma2_bar = -a * a * a_bar;
        let mut aux_grad = vec![lambda_bar, vec![sigma2_bar]];
        if self.data.with_mean {
            // μ̄ = a·colsum(R) − W·colsum(P̄).
            let mut col_r = vec![0.0; j];
            for i in 0..n {
                for (c, v) in col_r.iter_mut().zip(r.row(i)) {
                    *c += v;
                }
            }
            let mut col_p = vec![0.0; k];
            for i in 0..n {
                for (c, v) in col_p.iter_mut().zip(p_bar.row(i)) {
                    *c += v;
                }
            }
            let wp = w.matvec(&col_p);
            aux_grad.push(col_r.iter().zip(&wp).map(|(cr, x)| a * cr - x).collect());
        }

        Ok(LogPost {
            value,
            stiefel_grad: vec![w_bar],
            aux_grad,
        })
    }
}
