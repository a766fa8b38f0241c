//! Polar expansion: `Υ = Ỹ (ỸᵀỸ)^{-1/2}` with `φ = vec(Ỹ)` and a standard
//! normal kernel on `φ`.

use super::{ParamError, ParamSpec};
use crate::linalg::{svd, DenseMatrix};

/// Smallest admissible ratio of extreme singular values of `Ỹ`.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub(super) struct PolarTape {
    pub upsilon: DenseMatrix,
    pub log_adjust: f64,
    y_tilde: DenseMatrix,
    s: Vec<f64>,
    v: DenseMatrix,
}

impl PolarTape {
    pub fn forward(spec: &ParamSpec, phi: &[f64]) -> Result<Self, ParamError> {
        let y_tilde = DenseMatrix::from_col_major(spec.rows(), spec.cols(), phi);
        let dec = svd(&y_tilde)?;
        let smax = dec.s[0];
        let smin = *dec.s.last().unwrap();
        if !(smin > RANK_TOL * smax) {
            let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
            return Err(ParamError::RankDeficient { ratio });
        }
        // U·Vᵀ equals Ỹ(ỸᵀỸ)^{-1/2} but avoids squaring the condition number.
        let upsilon = dec.u.matmul_t(&dec.v);
        let log_adjust = -0.5 * phi.iter().map(|x| x * x).sum::<f64>();
        Ok(Self {
            upsilon,
            log_adjust,
            y_tilde,
            s: dec.s,
            v: dec.v,
        })
    }

    /// With `P = (ỸᵀỸ)^{1/2} = V S Vᵀ`, `dΥ = (dỸ − Υ dP) P^{-1}` and
    /// `P dP + dP P = dỸᵀỸ + ỸᵀdỸ`. The adjoint is
    /// `Ῡ P^{-1} − 2 Ỹ Q` with `Q = V [(Vᵀ sym(ΥᵀῩP^{-1}) V) ∘ C] Vᵀ`,
    /// `C_ij = 1/(s_i + s_j)`.
    pub fn pullback(&self, upsilon_bar: &DenseMatrix, weight: f64) -> Vec<f64> {
        let k = self.s.len();
        let inv_s: Vec<f64> = self.s.iter().map(|s| 1.0 / s).collect();
        let p_inv = self.v.scale_cols(&inv_s).matmul_t(&self.v);

        let mut grad = upsilon_bar.matmul(&p_inv);
        let g = self.upsilon.t_matmul(upsilon_bar).matmul(&p_inv).symmetric_part();
        let mut g_hat = self.v.t_matmul(&g).matmul(&self.v);
        for i in 0..k {
            for j in 0..k {
                g_hat[(i, j)] /= self.s[i] + self.s[j];
            }
        }
        let q = self.v.matmul(&g_hat).matmul_t(&self.v);
        grad.axpy(-2.0, &self.y_tilde.matmul(&q));
        grad.axpy(-weight, &self.y_tilde);
        grad.to_col_major()
    }
}
