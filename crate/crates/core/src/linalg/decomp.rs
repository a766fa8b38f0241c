use super::matrix::dot;
use super::{DenseMatrix, LinalgError, TOLERANCES};

/// Thin singular value decomposition `A = U·diag(s)·Vᵀ`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows × cols`, orthonormal columns.
    pub u: DenseMatrix,
    /// Singular values, descending.
    pub s: Vec<f64>,
    /// `cols × cols`, orthogonal.
    pub v: DenseMatrix,
}

/// Symmetric eigendecomposition `P = V·diag(d)·Vᵀ`.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub eigenvectors: DenseMatrix,
    /// Descending.
    pub eigenvalues: Vec<f64>,
}

impl SymEig {
    pub fn reconstruct(&self) -> DenseMatrix {
        self.eigenvectors
            .scale_cols(&self.eigenvalues)
            .matmul_t(&self.eigenvectors)
    }
}

/// One-sided (Hestenes) Jacobi SVD for `rows ≥ cols`.
pub fn svd(a: &DenseMatrix) -> Result<Svd, LinalgError> {
    let (m, n) = a.shape();
    if m < n {
        return Err(LinalgError::Shape(format!(
            "svd needs rows >= cols, got {m}x{n}"
        )));
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    // Column-major working copies: each inner Vec is one column.
    let mut u: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let tol = TOLERANCES.rotation_tol;
    let mut converged = n < 2;
    for _ in 0..TOLERANCES.max_sweeps {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = dot(&u[p], &u[p]);
                let beta = dot(&u[q], &u[q]);
                let gamma = dot(&u[p], &u[q]);
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut u, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            rows: m,
            cols: n,
            sweeps: TOLERANCES.max_sweeps,
        });
    }

    let norms: Vec<f64> = u.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let smax = norms.iter().cloned().fold(0.0, f64::max);
    let mut u_out = DenseMatrix::zeros(m, n);
    let mut v_out = DenseMatrix::zeros(n, n);
    let mut s_out = Vec::with_capacity(n);
    let mut deficient = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let sv = norms[src];
        s_out.push(sv);
        for i in 0..n {
            v_out[(i, dst)] = v[src][i];
        }
        if sv > smax * 1e-300 && sv > 0.0 {
            for i in 0..m {
                u_out[(i, dst)] = u[src][i] / sv;
            }
        } else {
            deficient.push(dst);
        }
    }
    if !deficient.is_empty() {
        complete_orthonormal(&mut u_out, &deficient);
    }
    Ok(Svd {
        u: u_out,
        s: s_out,
        v: v_out,
    })
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let yq = *y;
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Fills the listed columns of `u` with unit vectors orthogonal to all others.
fn complete_orthonormal(u: &mut DenseMatrix, missing: &[usize]) {
    let (m, n) = u.shape();
    let mut candidate = 0;
    for &col in missing {
        loop {
            assert!(candidate < m, "cannot complete orthonormal basis");
            let mut w = vec![0.0; m];
            w[candidate] = 1.0;
            candidate += 1;
            // Two passes of Gram-Schmidt against every filled column.
            for _ in 0..2 {
                for j in (0..n).filter(|j| *j != col) {
                    let cj = u.col(j);
                    let proj = dot(&cj, &w);
                    for (wi, ci) in w.iter_mut().zip(&cj) {
                        *wi -= proj * ci;
                    }
                }
            }
            let norm = dot(&w, &w).sqrt();
            if norm > 1e-8 {
                for i in 0..m {
                    u[(i, col)] = w[i] / norm;
                }
                break;
            }
        }
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn sym_eig(p: &DenseMatrix) -> Result<SymEig, LinalgError> {
    let (n, c) = p.shape();
    if n != c {
        return Err(LinalgError::Shape(format!(
            "sym_eig needs a square matrix, got {n}x{c}"
        )));
    }
    if !p.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let scale = p.max_abs();
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((p[(i, j)] - p[(j, i)]).abs());
        }
    }
    if asym > TOLERANCES.symmetry_tol * scale.max(1.0) {
        return Err(LinalgError::NotSymmetric(asym));
    }

    let mut a = p.symmetric_part();
    let mut v = DenseMatrix::identity(n);
    let threshold = TOLERANCES.rotation_tol * a.frobenius_norm();
    let mut converged = false;
    for _ in 0..TOLERANCES.max_sweeps {
        let mut rotated = false;
        for pi in 0..n {
            for qi in pi + 1..n {
                let apq = a[(pi, qi)];
                if apq.abs() <= threshold || apq == 0.0 {
                    continue;
                }
                rotated = true;
                let app = a[(pi, pi)];
                let aqq = a[(qi, qi)];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // A ← Jᵀ A J on rows/cols p, q.
                for k in 0..n {
                    let akp = a[(k, pi)];
                    let akq = a[(k, qi)];
                    a[(k, pi)] = cs * akp - sn * akq;
                    a[(k, qi)] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let apk = a[(pi, k)];
                    let aqk = a[(qi, k)];
                    a[(pi, k)] = cs * apk - sn * aqk;
                    a[(qi, k)] = sn * apk + cs * aqk;
                }
                a[(pi, qi)] = 0.0;
                a[(qi, pi)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, pi)];
                    let vkq = v[(k, qi)];
                    v[(k, pi)] = cs * vkp - sn * vkq;
                    v[(k, qi)] = sn * vkp + cs * vkq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            rows: n,
            cols: n,
            sweeps: TOLERANCES.max_sweeps,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let mut vecs = DenseMatrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        vals.push(a[(src, src)]);
        for k in 0..n {
            vecs[(k, dst)] = v[(k, src)];
        }
    }
    Ok(SymEig {
        eigenvectors: vecs,
        eigenvalues: vals,
    })
}

/// LU factorization with partial pivoting, `P·A = L·U`.
#[derive(Debug, Clone)]
pub struct Lu {
    /// Unit-lower `L` below the diagonal, `U` on and above it.
    factors: DenseMatrix,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Solves `A·X = B`.
    pub fn solve(&self, b: &DenseMatrix) -> DenseMatrix {
        let n = self.dim();
        assert_eq!(b.rows(), n, "solve: rhs has wrong row count");
        let nrhs = b.cols();
        let mut x = DenseMatrix::zeros(n, nrhs);
        for i in 0..n {
            x.row_mut(i).copy_from_slice(b.row(self.perm[i]));
        }
        let f = &self.factors;
        for i in 0..n {
            for k in 0..i {
                let l = f[(i, k)];
                if l != 0.0 {
                    let (head, tail) = x.as_mut_slice().split_at_mut(i * nrhs);
                    let src = &head[k * nrhs..(k + 1) * nrhs];
                    for (d, s) in tail[..nrhs].iter_mut().zip(src) {
                        *d -= l * s;
                    }
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = f[(i, k)];
                if u != 0.0 {
                    let (head, tail) = x.as_mut_slice().split_at_mut(k * nrhs);
                    let dst = &mut head[i * nrhs..(i + 1) * nrhs];
                    for (d, s) in dst.iter_mut().zip(&tail[..nrhs]) {
                        *d -= u * s;
                    }
                }
            }
            let piv = f[(i, i)];
            x.row_mut(i).iter_mut().for_each(|v| *v /= piv);
        }
        x
    }

    /// Solves `Aᵀ·X = B`.
    pub fn solve_transpose(&self, b: &DenseMatrix) -> DenseMatrix {
        let n = self.dim();
        assert_eq!(b.rows(), n);
        let nrhs = b.cols();
        let f = &self.factors;
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ y = b, Lᵀ z = y, x = Pᵀ z.
        let mut y = b.clone();
        for i in 0..n {
            for k in 0..i {
                let u = f[(k, i)];
                if u != 0.0 {
                    let (head, tail) = y.as_mut_slice().split_at_mut(i * nrhs);
                    for (d, s) in tail[..nrhs].iter_mut().zip(&head[k * nrhs..(k + 1) * nrhs]) {
                        *d -= u * s;
                    }
                }
            }
            let piv = f[(i, i)];
            y.row_mut(i).iter_mut().for_each(|v| *v /= piv);
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let l = f[(k, i)];
                if l != 0.0 {
                    let (head, tail) = y.as_mut_slice().split_at_mut(k * nrhs);
                    for (d, s) in head[i * nrhs..(i + 1) * nrhs].iter_mut().zip(&tail[..nrhs]) {
                        *d -= l * s;
                    }
                }
            }
        }
        let mut x = DenseMatrix::zeros(n, nrhs);
        for i in 0..n {
            x.row_mut(self.perm[i]).copy_from_slice(y.row(i));
        }
        x
    }

    /// `log|det A|` and the sign of `det A`.
    pub fn log_abs_det(&self) -> (f64, f64) {
        let mut sign = self.sign;
        let mut acc = 0.0;
        for i in 0..self.dim() {
            let d = self.factors[(i, i)];
            if d < 0.0 {
                sign = -sign;
            }
            acc += d.abs().ln();
        }
        (acc, sign)
    }
}

pub fn lu(a: &DenseMatrix) -> Result<Lu, LinalgError> {
    let (n, c) = a.shape();
    if n != c {
        return Err(LinalgError::Shape(format!(
            "LU needs a square matrix, got {n}x{c}"
        )));
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let scale = a.inf_norm();
    let mut f = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for k in 0..n {
        let (mut piv_row, mut piv_val) = (k, f[(k, k)].abs());
        for i in k + 1..n {
            let v = f[(i, k)].abs();
            if v > piv_val {
                piv_row = i;
                piv_val = v;
            }
        }
        if piv_val <= TOLERANCES.pivot_tol * scale || piv_val == 0.0 {
            return Err(LinalgError::Singular {
                pivot: piv_val,
                scale,
            });
        }
        if piv_row != k {
            for j in 0..n {
                let tmp = f[(k, j)];
                f[(k, j)] = f[(piv_row, j)];
                f[(piv_row, j)] = tmp;
            }
            perm.swap(k, piv_row);
            sign = -sign;
        }
        let pivot = f[(k, k)];
        for i in k + 1..n {
            let l = f[(i, k)] / pivot;
            f[(i, k)] = l;
            if l != 0.0 {
                let (upper, lower) = f.as_mut_slice().split_at_mut(i * n);
                let src = &upper[k * n + k + 1..(k + 1) * n];
                for (d, s) in lower[k + 1..n].iter_mut().zip(src) {
                    *d -= l * s;
                }
            }
        }
    }
    Ok(Lu {
        factors: f,
        perm,
        sign,
    })
}

/// Solves `A·X = B` by pivoted LU.
pub fn solve(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    if b.rows() != a.rows() {
        return Err(LinalgError::Shape(format!(
            "solve: A is {}x{}, B is {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(lu(a)?.solve(b))
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(LinalgError::Shape("cholesky needs a square matrix".into()));
    }
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let lj = l.row(j);
        let mut d = a[(j, j)] - dot(&lj[..j], &lj[..j]);
        if !(d > 0.0) {
            return Err(LinalgError::NotPositiveDefinite { ratio: d });
        }
        d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// `log det A` for symmetric positive-definite `A`.
pub fn logdet_spd(a: &DenseMatrix) -> Result<f64, LinalgError> {
    let l = cholesky(a)?;
    Ok((0..a.rows()).map(|i| 2.0 * l[(i, i)].ln()).sum())
}

/// Inverse symmetric square root `P^{-1/2}` of a positive-definite matrix.
pub fn inv_sqrt_sym(p: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    let eig = sym_eig(p)?;
    let max = eig.eigenvalues.first().copied().unwrap_or(0.0);
    let min = eig.eigenvalues.last().copied().unwrap_or(0.0);
    if !(max > 0.0) || min <= TOLERANCES.spd_ratio_tol * max {
        let ratio = if max > 0.0 { min / max } else { 0.0 };
        return Err(LinalgError::NotPositiveDefinite { ratio });
    }
    let scales: Vec<f64> = eig.eigenvalues.iter().map(|d| d.powf(-0.5)).collect();
    Ok(eig
        .eigenvectors
        .scale_cols(&scales)
        .matmul_t(&eig.eigenvectors))
}
