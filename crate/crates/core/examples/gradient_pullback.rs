//! Reverse-mode gradients through a parameterization: the pullback of a
//! linear functional of Υ plus the log-adjustment, checked against a
//! finite difference.

use stiefel_mcmc::linalg::DenseMatrix;
use stiefel_mcmc::param::{ParamKind, ParamSpec};

fn main() {
    let (j, k) = (5, 2);
    let c = DenseMatrix::from_vec(j, k, (0..j * k).map(|i| (i as f64 * 0.7).sin()).collect()).unwrap();
    for kind in [ParamKind::Polar, ParamKind::Householder, ParamKind::Cayley] {
        let spec = ParamSpec::new(kind, j, k).unwrap();
        let phi: Vec<f64> = (0..spec.phi_len()).map(|i| 0.6 * (1.3 * i as f64 + 0.4).sin()).collect();
        // f(φ) = ⟨C, Υ(φ)⟩ + log_adjust(φ)
        let f = |p: &[f64]| {
            let m = spec.eval(p).unwrap();
            c.frob_dot(&m.upsilon) + m.log_adjust
        };
        let grad = spec.forward(&phi).unwrap().pullback(&c, 1.0);
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for i in 0..phi.len() {
            let mut p = phi.clone();
            p[i] += h;
            let fp = f(&p);
            p[i] -= 2.0 * h;
            let fm = f(&p);
            worst = worst.max(((fp - fm) / (2.0 * h) - grad[i]).abs());
        }
        println!("{:<12} f = {:9.5}  max |analytic − finite difference| = {worst:.2e}", kind.to_string(), f(&phi));
    }
}
