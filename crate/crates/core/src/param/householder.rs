//! Ordered product of Householder reflectors,
//! `Υ = H_J(v_J) ⋯ H_{J−K+1}(v_{J−K+1}) I_{J×K}`, with `φ = (v_J, …, v_{J−K+1})`
//! and a standard normal kernel on `φ`. No Jacobian term is needed.
//!
//! `H_n` embeds `−sgn(v_{n,1}) (I_n − 2 u_n u_nᵀ)` in its lower-right
//! `n × n` block; the signed reflector sends `v_n/‖v_n‖` to `e_1` and back.

use super::{sgn, ParamError, ParamSpec};
use crate::linalg::DenseMatrix;

const MIN_NORM: f64 = 1e-300;

#[derive(Debug, Clone)]
struct Reflector {
    /// Block size `n`.
    n: usize,
    /// Offset of `v_n` inside `φ`.
    offset: usize,
    sign: f64,
    v_norm: f64,
    w_norm: f64,
    u: Vec<f64>,
    /// Frame before this reflector was applied.
    input: DenseMatrix,
}

#[derive(Debug, Clone)]
pub(super) struct HouseholderTape {
    pub upsilon: DenseMatrix,
    pub log_adjust: f64,
    /// Ordered as in `φ`: `v_J` first.
    reflectors: Vec<Reflector>,
    phi: Vec<f64>,
}

/// Offsets of the `K` blocks of `φ`; block `b` has length `J − b`.
fn block_offsets(rows: usize, cols: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(cols);
    let mut off = 0;
    for b in 0..cols {
        out.push(off);
        off += rows - b;
    }
    out
}

/// Applies `−s (I − 2uuᵀ)` to rows `J−n..J` of `y`.
fn apply_reflector(y: &mut DenseMatrix, u: &[f64], sign: f64) {
    let (rows, cols) = y.shape();
    let r0 = rows - u.len();
    for c in 0..cols {
        let t: f64 = u.iter().enumerate().map(|(i, ui)| ui * y[(r0 + i, c)]).sum();
        for (i, ui) in u.iter().enumerate() {
            let cur = y[(r0 + i, c)];
            y[(r0 + i, c)] = -sign * (cur - 2.0 * t * ui);
        }
    }
}

impl HouseholderTape {
    pub fn forward(spec: &ParamSpec, phi: &[f64]) -> Result<Self, ParamError> {
        let (rows, cols) = (spec.rows(), spec.cols());
        let offsets = block_offsets(rows, cols);
        let mut y = DenseMatrix::eye(rows, cols);
        let mut reflectors: Vec<Option<Reflector>> = vec![None; cols];
        // The rightmost reflector (smallest block) acts first.
        for b in (0..cols).rev() {
            let n = rows - b;
            let v = &phi[offsets[b]..offsets[b] + n];
            let v_norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(v_norm > MIN_NORM) {
                return Err(ParamError::DegenerateDirection { index: b });
            }
            let sign = sgn(v[0]);
            let mut u = v.to_vec();
            u[0] += sign * v_norm;
            let w_norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            u.iter_mut().for_each(|x| *x /= w_norm);
            let input = y.clone();
            apply_reflector(&mut y, &u, sign);
            reflectors[b] = Some(Reflector {
                n,
                offset: offsets[b],
                sign,
                v_norm,
                w_norm,
                u,
                input,
            });
        }
        let log_adjust = -0.5 * phi.iter().map(|x| x * x).sum::<f64>();
        Ok(Self {
            upsilon: y,
            log_adjust,
            reflectors: reflectors.into_iter().map(Option::unwrap).collect(),
            phi: phi.to_vec(),
        })
    }

    pub fn pullback(&self, upsilon_bar: &DenseMatrix, weight: f64) -> Vec<f64> {
        let mut grad: Vec<f64> = self.phi.iter().map(|x| -weight * x).collect();
        let mut y_bar = upsilon_bar.clone();
        let (rows, cols) = y_bar.shape();
        // Reverse of application order: v_J's reflector was applied last.
        for refl in &self.reflectors {
            let n = refl.n;
            let r0 = rows - n;
            let u = &refl.u;
            let s = refl.sign;
            let y = &refl.input;

            // ū = 2s [Ȳ (Yᵀu) + Y (Ȳᵀu)] restricted to the active rows.
            let mut u_bar = vec![0.0; n];
            for c in 0..cols {
                let mut yu = 0.0;
                let mut ybu = 0.0;
                for i in 0..n {
                    yu += y[(r0 + i, c)] * u[i];
                    ybu += y_bar[(r0 + i, c)] * u[i];
                }
                for i in 0..n {
                    u_bar[i] += 2.0 * s * (y_bar[(r0 + i, c)] * yu + y[(r0 + i, c)] * ybu);
                }
            }
            // The signed reflector is symmetric, so Ȳ ← H Ȳ.
            apply_reflector(&mut y_bar, u, s);

            // u = w/‖w‖, w = v + s‖v‖e₁.
            let u_dot: f64 = u.iter().zip(&u_bar).map(|(a, b)| a * b).sum();
            let w_bar: Vec<f64> = u
                .iter()
                .zip(&u_bar)
                .map(|(ui, ubi)| (ubi - ui * u_dot) / refl.w_norm)
                .collect();
            let v = &self.phi[refl.offset..refl.offset + n];
            for i in 0..n {
                grad[refl.offset + i] += w_bar[i] + s * w_bar[0] * v[i] / refl.v_norm;
            }
        }
        grad
    }
}
