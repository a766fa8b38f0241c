//! Posterior targets over Stiefel-valued and auxiliary parameters, and the
//! adapter that turns a model plus one parameterization per Stiefel block
//! into a flat unconstrained log-density.

mod completion;
mod composed;
mod eigenmodel;
mod normal;
mod ppca;
mod uniform;

#[cfg(test)]
mod tests;

pub use completion::{McData, MatrixCompletion};
pub use composed::{build_unconstrained, LogDensity, UnconstrainedTarget};
pub use eigenmodel::{EigenmodelData, Eigenmodel};
pub use normal::{log_normal_cdf, log_normal_pdf, normal_hazard};
pub use ppca::{Ppca, PpcaData};
pub use uniform::Uniform;

use crate::linalg::{DenseMatrix, LinalgError};
use crate::param::ParamError;

#[derive(Debug, thiserror::Error)]
pub enum TargetError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("outside the support: {0}")]
    Domain(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// How an auxiliary block is mapped from the sampled (unconstrained) scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuxTransform {
    Identity,
    /// `v = exp(u)`, element-wise.
    Log,
    /// Positive and descending: `v_n = exp(u_n)`, `v_k = v_{k+1} + exp(u_k)`.
    OrderedPositiveDesc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuxBlock {
    pub name: String,
    pub len: usize,
    pub transform: AuxTransform,
}

impl AuxBlock {
    pub fn new(name: &str, len: usize, transform: AuxTransform) -> Self {
        Self {
            name: name.to_string(),
            len,
            transform,
        }
    }
}

/// Log-posterior value with gradients in the constrained coordinates.
#[derive(Debug, Clone)]
pub struct LogPost {
    pub value: f64,
    pub stiefel_grad: Vec<DenseMatrix>,
    pub aux_grad: Vec<Vec<f64>>,
}

/// Unnormalized log-posterior over Stiefel blocks and auxiliary vectors.
///
/// Auxiliary values passed to `log_posterior` are on the constrained scale;
/// transform Jacobians are the adapter's job. Gradients treat each Stiefel
/// block as a free `J × K` matrix.
pub trait TargetModel: Send + Sync {
    fn name(&self) -> &str;
    fn stiefel_blocks(&self) -> Vec<(usize, usize)>;
    fn aux_blocks(&self) -> Vec<AuxBlock>;
    fn log_posterior(&self, stiefel: &[DenseMatrix], aux: &[Vec<f64>]) -> Result<LogPost, TargetError>;
}

pub(crate) fn check_shapes(
    model: &dyn TargetModel,
    stiefel: &[DenseMatrix],
    aux: &[Vec<f64>],
) -> Result<(), TargetError> {
    let blocks = model.stiefel_blocks();
    if stiefel.len() != blocks.len() {
        return Err(TargetError::Shape(format!(
            "{} expects {} Stiefel blocks, got {}",
            model.name(),
            blocks.len(),
            stiefel.len()
        )));
    }
    for (i, (m, &(r, c))) in stiefel.iter().zip(&blocks).enumerate() {
        if m.shape() != (r, c) {
            return Err(TargetError::Shape(format!(
                "Stiefel block {i} of {} must be {r}x{c}, got {}x{}",
                model.name(),
                m.rows(),
                m.cols()
            )));
        }
    }
    let aux_blocks = model.aux_blocks();
    if aux.len() != aux_blocks.len() {
        return Err(TargetError::Shape(format!(
            "{} expects {} auxiliary blocks, got {}",
            model.name(),
            aux_blocks.len(),
            aux.len()
        )));
    }
    for (v, b) in aux.iter().zip(&aux_blocks) {
        if v.len() != b.len {
            return Err(TargetError::Shape(format!(
                "auxiliary block `{}` has length {}, expected {}",
                b.name,
                v.len(),
                b.len
            )));
        }
    }
    Ok(())
}
