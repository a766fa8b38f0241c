//! Small dense linear algebra kernel.
//!
//! Everything the parameterizations and models need lives here: a row-major
//! [`DenseMatrix`], one-sided Jacobi SVD, cyclic Jacobi symmetric
//! eigendecomposition, pivoted LU solves, Cholesky, and the symmetric inverse
//! square root. Sizes in this crate stay in the low hundreds, so the
//! algorithms favour accuracy and simplicity over blocking.

mod decomp;
mod matrix;

pub use decomp::{
    cholesky, inv_sqrt_sym, logdet_spd, lu, solve, svd, sym_eig, Lu, Svd, SymEig,
};
pub use matrix::DenseMatrix;

use thiserror::Error;

/// Numerical limits shared by every routine in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinalgTolerances {
    /// Maximum number of Jacobi sweeps for SVD and eigendecomposition.
    pub max_sweeps: usize,
    /// A Jacobi rotation is skipped once the normalized off-diagonal
    /// coupling falls below this value.
    pub rotation_tol: f64,
    /// Symmetry tolerance for `sym_eig`, relative to the largest entry.
    pub symmetry_tol: f64,
    /// LU pivots below `pivot_tol * ‖A‖_∞` mark the matrix singular.
    pub pivot_tol: f64,
    /// `inv_sqrt_sym` requires `λ_min > spd_ratio_tol * λ_max`.
    pub spd_ratio_tol: f64,
}

/// The tolerances used by the free functions of this module.
pub const TOLERANCES: LinalgTolerances = LinalgTolerances {
    max_sweeps: 60,
    rotation_tol: 1e-14,
    symmetry_tol: 1e-12,
    pivot_tol: 1e-14,
    spd_ratio_tol: 1e-12,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("Jacobi iteration did not converge for a {rows}x{cols} matrix after {sweeps} sweeps")]
    NoConvergence {
        rows: usize,
        cols: usize,
        sweeps: usize,
    },
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("matrix is singular to working precision (pivot {pivot:.3e}, scale {scale:.3e})")]
    Singular { pivot: f64, scale: f64 },
    #[error("matrix is not positive definite (eigenvalue ratio {ratio:.3e})")]
    NotPositiveDefinite { ratio: f64 },
    #[error("non-finite entry in input matrix")]
    NonFinite,
}
