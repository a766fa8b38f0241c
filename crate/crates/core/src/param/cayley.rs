//! Modified Cayley transform, `Υ = (I + X)(I − X)^{-1} I_{J×K}` with
//!
//! ```text
//!     X = [ B  −Aᵀ ]     B ∈ Skew(K),  A ∈ R^{(J−K)×K}
//!         [ A   0  ]
//! ```
//!
//! and `φ = (b, vec(Aᵀ))`, where `b` lists the strictly lower triangle of `B`
//! column by column.
//!
//! The zero lower-right block makes every quantity reduce to the `K × K`
//! Schur complement `N = I_K − B + AᵀA`:
//!
//! * `(I − X)^{-1} I_{J×K} = [N^{-1}; A N^{-1}]`, so `Υ = 2 [N^{-1}; A N^{-1}] − I_{J×K}`;
//! * the Jacobian volume `½ log det(4 Γᵀ(G₁ ⊗ G₂)Γ)` equals
//!   `(K(J−K) + ¾K(K−1)) log 2 − (J−1) log det N`.
//!
//! Both reductions are checked in the tests against the dense Gram form.
//! `N` has positive-definite symmetric part, so `det N > 0` everywhere.

use super::{ParamError, ParamSpec};
use crate::linalg::{lu, DenseMatrix};

#[derive(Debug, Clone)]
pub(super) struct CayleyTape {
    pub upsilon: DenseMatrix,
    pub log_adjust: f64,
    /// `A`, `(J−K) × K`.
    a: DenseMatrix,
    n_inv: DenseMatrix,
}

fn log_volume_constant(rows: usize, cols: usize) -> f64 {
    let (j, k) = (rows as f64, cols as f64);
    (k * (j - k) + 0.75 * k * (k - 1.0)) * std::f64::consts::LN_2
}

impl CayleyTape {
    pub fn forward(spec: &ParamSpec, phi: &[f64]) -> Result<Self, ParamError> {
        let (rows, cols) = (spec.rows(), spec.cols());
        let nb = cols * (cols - 1) / 2;
        let a = DenseMatrix::from_vec(rows - cols, cols, phi[nb..].to_vec())?;

        // N = I − B + AᵀA.
        let mut n = a.t_matmul(&a);
        for i in 0..cols {
            n[(i, i)] += 1.0;
        }
        let mut idx = 0;
        for c in 0..cols {
            for r in c + 1..cols {
                n[(r, c)] -= phi[idx];
                n[(c, r)] += phi[idx];
                idx += 1;
            }
        }
        let factors = lu(&n)?;
        let n_inv = factors.solve(&DenseMatrix::identity(cols));
        let z2 = a.matmul(&n_inv);

        let mut upsilon = DenseMatrix::zeros(rows, cols);
        for i in 0..cols {
            for k in 0..cols {
                upsilon[(i, k)] = 2.0 * n_inv[(i, k)];
            }
            upsilon[(i, i)] -= 1.0;
        }
        for i in 0..rows - cols {
            for k in 0..cols {
                upsilon[(cols + i, k)] = 2.0 * z2[(i, k)];
            }
        }
        let log_adjust = log_volume_constant(rows, cols) - (rows - 1) as f64 * factors.log_abs_det().0;
        Ok(Self {
            upsilon,
            log_adjust,
            a,
            n_inv,
        })
    }

    pub fn pullback(&self, upsilon_bar: &DenseMatrix, weight: f64) -> Vec<f64> {
        let cols = upsilon_bar.cols();
        let rows = upsilon_bar.rows();

        // Υ = 2Z − I_{J×K} with Z₁ = N^{-1}, Z₂ = A Z₁.
        let mut z1_bar = DenseMatrix::zeros(cols, cols);
        for i in 0..cols {
            for k in 0..cols {
                z1_bar[(i, k)] = 2.0 * upsilon_bar[(i, k)];
            }
        }
        let mut z2_bar = DenseMatrix::zeros(rows - cols, cols);
        for i in 0..rows - cols {
            for k in 0..cols {
                z2_bar[(i, k)] = 2.0 * upsilon_bar[(cols + i, k)];
            }
        }
        let mut a_bar = z2_bar.matmul_t(&self.n_inv);
        z1_bar.add_assign(&self.a.t_matmul(&z2_bar));

        // d(N^{-1}) = −N^{-1} dN N^{-1};  d log det N = tr(N^{-1} dN).
        let n_inv_t = self.n_inv.transpose();
        let mut n_bar = n_inv_t.matmul(&z1_bar).matmul(&n_inv_t).scale(-1.0);
        n_bar.axpy(-weight * (rows - 1) as f64, &n_inv_t);

        // N = I − B + AᵀA.
        a_bar.add_assign(&self.a.matmul(&n_bar.add(&n_bar.transpose())));
        let mut grad = Vec::with_capacity(cols * (cols - 1) / 2 + a_bar.rows() * cols);
        for c in 0..cols {
            for r in c + 1..cols {
                // B[r,c] = φ, B[c,r] = −φ and B̄ = −N̄.
                grad.push(-n_bar[(r, c)] + n_bar[(c, r)]);
            }
        }
        grad.extend_from_slice(a_bar.as_slice());
        grad
    }
}
