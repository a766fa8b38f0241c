use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use super::{AuxBlock, AuxTransform, TargetError, TargetModel};
use crate::linalg::DenseMatrix;
use crate::param::{ParamKind, ParamSpec};

/// A differentiable log-density on `R^dim`, the interface the sampler needs.
pub trait LogDensity: Send + Sync {
    fn dim(&self) -> usize;

    /// Returns `log π(x)` and writes `∇ log π(x)` into `grad`. Points outside
    /// the support are reported as errors rather than `−∞`.
    fn log_density_grad(&self, x: &[f64], grad: &mut [f64]) -> Result<f64, TargetError>;

    /// Starting point: `0.1 · N(0, I)`.
    fn initial_point(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..self.dim())
            .map(|_| 0.1 * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    /// Entries of every mapped Stiefel block at `x` (column-major per block),
    /// for targets that have them.
    fn stiefel_values(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Offset where auxiliary coordinates start in `x`.
    fn aux_offset(&self) -> usize {
        self.dim()
    }
}

/// A target model composed with one parameterization per Stiefel block.
///
/// The flat layout is `[φ₁ | φ₂ | … | aux₁ | aux₂ | …]`, where auxiliary
/// blocks are on their unconstrained scale.
#[derive(Clone)]
pub struct UnconstrainedTarget {
    model: Arc<dyn TargetModel>,
    specs: Vec<ParamSpec>,
    phi_offsets: Vec<usize>,
    aux_blocks: Vec<AuxBlock>,
    aux_offsets: Vec<usize>,
    dim: usize,
}

impl std::fmt::Debug for UnconstrainedTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UnconstrainedTarget")
            .field("model", &self.model.name())
            .field("specs", &self.specs)
            .field("aux_blocks", &self.aux_blocks)
            .field("dim", &self.dim)
            .finish()
    }
}

/// Composes `model` with `specs`, one per Stiefel block in order.
pub fn build_unconstrained(
    model: Arc<dyn TargetModel>,
    specs: Vec<ParamSpec>,
) -> Result<UnconstrainedTarget, TargetError> {
    let blocks = model.stiefel_blocks();
    if blocks.len() != specs.len() {
        return Err(TargetError::Shape(format!(
            "{} has {} Stiefel blocks but {} parameterizations were given",
            model.name(),
            blocks.len(),
            specs.len()
        )));
    }
    let mut phi_offsets = Vec::with_capacity(specs.len());
    let mut off = 0;
    for (spec, &(r, c)) in specs.iter().zip(&blocks) {
        if (spec.rows(), spec.cols()) != (r, c) {
            return Err(TargetError::Shape(format!(
                "parameterization is {}x{} but the block is {r}x{c}",
                spec.rows(),
                spec.cols()
            )));
        }
        phi_offsets.push(off);
        off += spec.phi_len();
    }
    let aux_blocks = model.aux_blocks();
    let mut aux_offsets = Vec::with_capacity(aux_blocks.len());
    for b in &aux_blocks {
        aux_offsets.push(off);
        off += b.len;
    }
    Ok(UnconstrainedTarget {
        model,
        specs,
        phi_offsets,
        aux_blocks,
        aux_offsets,
        dim: off,
    })
}

impl UnconstrainedTarget {
    /// Uses the same parameterization kind for every Stiefel block.
    pub fn with_kind(model: Arc<dyn TargetModel>, kind: ParamKind) -> Result<Self, TargetError> {
        let specs = model
            .stiefel_blocks()
            .into_iter()
            .map(|(r, c)| ParamSpec::new(kind, r, c))
            .collect::<Result<Vec<_>, _>>()?;
        build_unconstrained(model, specs)
    }

    pub fn model(&self) -> &dyn TargetModel {
        self.model.as_ref()
    }

    pub fn specs(&self) -> &[ParamSpec] {
        &self.specs
    }

    pub fn aux_blocks(&self) -> &[AuxBlock] {
        &self.aux_blocks
    }

    /// Range of block `i`'s unconstrained coordinates.
    pub fn aux_range(&self, i: usize) -> std::ops::Range<usize> {
        self.aux_offsets[i]..self.aux_offsets[i] + self.aux_blocks[i].len
    }

    fn phi<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[self.phi_offsets[i]..self.phi_offsets[i] + self.specs[i].phi_len()]
    }

    /// Maps `x` to Stiefel frames and constrained auxiliary values.
    pub fn constrain(&self, x: &[f64]) -> Result<(Vec<DenseMatrix>, Vec<Vec<f64>>), TargetError> {
        self.check_len(x)?;
        let frames = (0..self.specs.len())
            .map(|i| Ok(self.specs[i].eval(self.phi(x, i))?.upsilon))
            .collect::<Result<Vec<_>, TargetError>>()?;
        let aux = (0..self.aux_blocks.len())
            .map(|i| forward_transform(self.aux_blocks[i].transform, &x[self.aux_range(i)]).0)
            .collect();
        Ok((frames, aux))
    }

    fn check_len(&self, x: &[f64]) -> Result<(), TargetError> {
        if x.len() != self.dim {
            return Err(TargetError::Shape(format!(
                "point has length {}, target dimension is {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }
}

/// Constrained values and log-Jacobian of an auxiliary transform.
fn forward_transform(t: AuxTransform, u: &[f64]) -> (Vec<f64>, f64) {
    match t {
        AuxTransform::Identity => (u.to_vec(), 0.0),
        AuxTransform::Log => (u.iter().map(|v| v.exp()).collect(), u.iter().sum()),
        AuxTransform::OrderedPositiveDesc => {
            let mut v = vec![0.0; u.len()];
            let mut acc = 0.0;
            for i in (0..u.len()).rev() {
                acc += u[i].exp();
                v[i] = acc;
            }
            (v, u.iter().sum())
        }
    }
}

/// Chain rule through an auxiliary transform, including its log-Jacobian.
fn transform_gradient(t: AuxTransform, u: &[f64], v: &[f64], v_bar: &[f64], out: &mut [f64]) {
    match t {
        AuxTransform::Identity => out.copy_from_slice(v_bar),
        AuxTransform::Log => {
            for i in 0..u.len() {
                out[i] = v_bar[i] * v[i] + 1.0;
            }
        }
        AuxTransform::OrderedPositiveDesc => {
            // v_i depends on u_k for every k ≥ i.
            let mut prefix = 0.0;
            for k in 0..u.len() {
                prefix += v_bar[k];
                out[k] = u[k].exp() * prefix + 1.0;
            }
        }
    }
}

impl LogDensity for UnconstrainedTarget {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density_grad(&self, x: &[f64], grad: &mut [f64]) -> Result<f64, TargetError> {
        self.check_len(x)?;
        let mut total = 0.0;
        let mut tapes = Vec::with_capacity(self.specs.len());
        for i in 0..self.specs.len() {
            let tape = self.specs[i].forward(self.phi(x, i))?;
            total += tape.log_adjust();
            tapes.push(tape);
        }
        if !total.is_finite() {
            return Err(TargetError::Domain("parameterization outside its chart".into()));
        }
        let mut aux_values = Vec::with_capacity(self.aux_blocks.len());
        for i in 0..self.aux_blocks.len() {
            let (v, logjac) = forward_transform(self.aux_blocks[i].transform, &x[self.aux_range(i)]);
            total += logjac;
            aux_values.push(v);
        }
        let frames: Vec<DenseMatrix> = tapes.iter().map(|t| t.upsilon().clone()).collect();
        let post = self.model.log_posterior(&frames, &aux_values)?;
        total += post.value;
        if !total.is_finite() {
            return Err(TargetError::Domain(format!("non-finite log-density {total}")));
        }

        for (i, tape) in tapes.iter().enumerate() {
            let g = tape.pullback(&post.stiefel_grad[i], 1.0);
            let off = self.phi_offsets[i];
            grad[off..off + g.len()].copy_from_slice(&g);
        }
        for i in 0..self.aux_blocks.len() {
            let range = self.aux_range(i);
            transform_gradient(
                self.aux_blocks[i].transform,
                &x[range.clone()],
                &aux_values[i],
                &post.aux_grad[i],
                &mut grad[range],
            );
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(TargetError::Domain("non-finite gradient".into()));
        }
        Ok(total)
    }

    /// `0.1 · N(0, I)`, with Givens pairs whose angle is confined to
    /// `(−π/2, π/2)` folded onto `φ♭ > 0` so the start lies inside the chart.
    fn initial_point(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.dim)
            .map(|_| 0.1 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        for (i, spec) in self.specs.iter().enumerate() {
            if spec.kind() != ParamKind::Givens {
                continue;
            }
            let planes = crate::param::rotation_planes(spec.rows(), spec.cols());
            let off = self.phi_offsets[i];
            for (p, &(k, j)) in planes.iter().enumerate() {
                if j > k + 1 {
                    x[off + 2 * p] = x[off + 2 * p].abs();
                }
            }
        }
        x
    }

    fn stiefel_values(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut out = Vec::new();
        for i in 0..self.specs.len() {
            let r = self.specs[i].eval(self.phi(x, i)).ok()?;
            out.extend(r.upsilon.to_col_major());
        }
        Some(out)
    }

    fn aux_offset(&self) -> usize {
        self.aux_offsets.first().copied().unwrap_or(self.dim)
    }
}
