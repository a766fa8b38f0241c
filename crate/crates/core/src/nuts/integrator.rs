use crate::targets::{LogDensity, TargetError};

/// Phase-space point with cached log-density and gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub logp: f64,
    pub grad: Vec<f64>,
}

impl Point {
    /// Evaluates the target at `q`; momentum starts at zero.
    pub fn at<T: LogDensity + ?Sized>(target: &T, q: Vec<f64>) -> Result<Self, TargetError> {
        let mut grad = vec![0.0; q.len()];
        let logp = target.log_density_grad(&q, &mut grad)?;
        Ok(Self {
            p: vec![0.0; q.len()],
            q,
            logp,
            grad,
        })
    }

    pub fn kinetic(&self, inv_mass: &[f64]) -> f64 {
        0.5 * self
            .p
            .iter()
            .zip(inv_mass)
            .map(|(p, m)| m * p * p)
            .sum::<f64>()
    }

    /// `H = −log π(q) + ½ pᵀ M^{-1} p`.
    pub fn hamiltonian(&self, inv_mass: &[f64]) -> f64 {
        -self.logp + self.kinetic(inv_mass)
    }
}

/// One velocity-Verlet step: half kick, drift with `M^{-1}`, half kick.
pub fn leapfrog<T: LogDensity + ?Sized>(
    target: &T,
    from: &Point,
    eps: f64,
    inv_mass: &[f64],
) -> Result<Point, TargetError> {
    let n = from.q.len();
    let mut p: Vec<f64> = (0..n).map(|i| from.p[i] + 0.5 * eps * from.grad[i]).collect();
    let q: Vec<f64> = (0..n).map(|i| from.q[i] + eps * inv_mass[i] * p[i]).collect();
    let mut grad = vec![0.0; n];
    let logp = target.log_density_grad(&q, &mut grad)?;
    for i in 0..n {
        p[i] += 0.5 * eps * grad[i];
    }
    Ok(Point { q, p, logp, grad })
}
