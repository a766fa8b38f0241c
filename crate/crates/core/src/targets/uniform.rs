use super::{check_shapes, AuxBlock, LogPost, TargetError, TargetModel};
use crate::linalg::DenseMatrix;

/// Uniform (Haar) distribution on one Stiefel block: the model contributes
/// nothing and the density is the parameterization's log-adjustment alone.
#[derive(Debug, Clone)]
pub struct Uniform {
    rows: usize,
    cols: usize,
}

impl Uniform {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }
}

impl TargetModel for Uniform {
    fn name(&self) -> &str {
        "uniform"
    }

    fn stiefel_blocks(&self) -> Vec<(usize, usize)> {
        vec![(self.rows, self.cols)]
    }

    fn aux_blocks(&self) -> Vec<AuxBlock> {
        Vec::new()
    }

    fn log_posterior(&self, stiefel: &[DenseMatrix], aux: &[Vec<f64>]) -> Result<LogPost, TargetError> {
        check_shapes(self, stiefel, aux)?;
        Ok(LogPost {
            value: 0.0,
            stiefel_grad: vec![DenseMatrix::zeros(self.rows, self.cols)],
            aux_grad: Vec::new(),
        })
    }
}
