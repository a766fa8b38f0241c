//! Givens representation,
//! `Υ = R_{1,2}(θ_{1,2}) ⋯ R_{1,J} ⋯ R_{K,K+1} ⋯ R_{K,J} I_{J×K}`.
//!
//! Each angle is carried by a coordinate pair `(φ♭, φ♯) = r (cos θ, sin θ)`
//! and the radius gets an independent `N(1, 0.1²)` density. The Jacobian of
//! the angle chart is `∏ cos(θ_{k,j})^{j−k−1}`; angles with a positive
//! exponent must keep `cos θ > 0`, which confines them to `(−π/2, π/2)`,
//! while `θ_{k,k+1}` range over the whole circle.

use super::{ParamError, ParamSpec};
use crate::linalg::DenseMatrix;

pub const GIVENS_RADIUS_MEAN: f64 = 1.0;
pub const GIVENS_RADIUS_SD: f64 = 0.1;

/// Angles and radii recovered from a Givens `φ`, in rotation order.
#[derive(Debug, Clone, PartialEq)]
pub struct GivensAngles {
    /// `(k, j)` plane of each rotation, zero-based, `k < K`, `k < j < J`.
    pub planes: Vec<(usize, usize)>,
    pub theta: Vec<f64>,
    pub r: Vec<f64>,
}

impl GivensAngles {
    /// Exponent of `cos θ` in the Jacobian for rotation `i`.
    pub fn exponent(&self, i: usize) -> usize {
        let (k, j) = self.planes[i];
        j - k - 1
    }
}

/// Rotation planes in product order (leftmost factor first).
pub fn rotation_planes(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut planes = Vec::new();
    for k in 0..cols {
        for j in k + 1..rows {
            planes.push((k, j));
        }
    }
    planes
}

/// Recovers `(θ, r)` from the coordinate pairs of a Givens `φ`.
pub fn givens_angles(spec: &ParamSpec, phi: &[f64]) -> Result<GivensAngles, ParamError> {
    let planes = rotation_planes(spec.rows(), spec.cols());
    if phi.len() != 2 * planes.len() {
        return Err(ParamError::WrongLength {
            expected: 2 * planes.len(),
            got: phi.len(),
        });
    }
    let mut theta = Vec::with_capacity(planes.len());
    let mut r = Vec::with_capacity(planes.len());
    for (i, pair) in phi.chunks_exact(2).enumerate() {
        let radius = pair[0].hypot(pair[1]);
        if radius == 0.0 {
            return Err(ParamError::DegenerateAngle { index: i });
        }
        theta.push(pair[1].atan2(pair[0]));
        r.push(radius);
    }
    Ok(GivensAngles { planes, theta, r })
}

#[derive(Debug, Clone)]
pub(super) struct GivensTape {
    pub upsilon: DenseMatrix,
    pub log_adjust: f64,
    angles: GivensAngles,
    phi: Vec<f64>,
    area_correction: bool,
}

/// Rows `k`, `j` ← `R(θ)` applied: `y_k' = c y_k − s y_j`, `y_j' = s y_k + c y_j`.
#[inline]
fn rotate_rows(y: &mut DenseMatrix, k: usize, j: usize, c: f64, s: f64) {
    for col in 0..y.cols() {
        let yk = y[(k, col)];
        let yj = y[(j, col)];
        y[(k, col)] = c * yk - s * yj;
        y[(j, col)] = s * yk + c * yj;
    }
}

impl GivensTape {
    pub fn forward(spec: &ParamSpec, phi: &[f64]) -> Result<Self, ParamError> {
        let angles = givens_angles(spec, phi)?;
        let mut y = DenseMatrix::eye(spec.rows(), spec.cols());
        for (i, &(k, j)) in angles.planes.iter().enumerate().rev() {
            let (s, c) = angles.theta[i].sin_cos();
            rotate_rows(&mut y, k, j, c, s);
        }

        let var = GIVENS_RADIUS_SD * GIVENS_RADIUS_SD;
        let norm_const = -(GIVENS_RADIUS_SD * (2.0 * std::f64::consts::PI).sqrt()).ln();
        let mut log_adjust = 0.0;
        for i in 0..angles.theta.len() {
            let p = angles.exponent(i);
            if p > 0 {
                let c = angles.theta[i].cos();
                if c <= 0.0 {
                    log_adjust = f64::NEG_INFINITY;
                } else {
                    log_adjust += p as f64 * c.ln();
                }
            }
            let dr = angles.r[i] - GIVENS_RADIUS_MEAN;
            log_adjust += norm_const - dr * dr / (2.0 * var);
            if spec.givens_area_correction() {
                log_adjust -= angles.r[i].ln();
            }
        }
        Ok(Self {
            upsilon: y,
            log_adjust,
            angles,
            phi: phi.to_vec(),
            area_correction: spec.givens_area_correction(),
        })
    }

    pub fn pullback(&self, upsilon_bar: &DenseMatrix, weight: f64) -> Vec<f64> {
        let n = self.angles.theta.len();
        let mut theta_bar = vec![0.0; n];
        let mut y = self.upsilon.clone();
        let mut y_bar = upsilon_bar.clone();
        // The leftmost rotation was applied last; peel rotations off in order.
        for (i, &(k, j)) in self.angles.planes.iter().enumerate() {
            let (s, c) = self.angles.theta[i].sin_cos();
            let mut acc = 0.0;
            for col in 0..y.cols() {
                acc += y_bar[(j, col)] * y[(k, col)] - y_bar[(k, col)] * y[(j, col)];
            }
            theta_bar[i] = acc;
            rotate_rows(&mut y, k, j, c, -s);
            rotate_rows(&mut y_bar, k, j, c, -s);
        }

        let var = GIVENS_RADIUS_SD * GIVENS_RADIUS_SD;
        let mut grad = vec![0.0; 2 * n];
        for i in 0..n {
            let theta = self.angles.theta[i];
            let r = self.angles.r[i];
            let p = self.angles.exponent(i);
            let mut tb = theta_bar[i];
            if p > 0 {
                tb -= weight * p as f64 * theta.tan();
            }
            let mut rb = -weight * (r - GIVENS_RADIUS_MEAN) / var;
            if self.area_correction {
                rb -= weight / r;
            }
            let (x, yv) = (self.phi[2 * i], self.phi[2 * i + 1]);
            let r2 = r * r;
            grad[2 * i] = -tb * yv / r2 + rb * x / r;
            grad[2 * i + 1] = tb * x / r2 + rb * yv / r;
        }
        grad
    }
}
