//! The dense kernels the parameterizations are built on: thin SVD,
//! symmetric eigendecomposition, Cholesky and LU solves.

use stiefel_mcmc::linalg::{cholesky, inv_sqrt_sym, logdet_spd, solve, svd, sym_eig, DenseMatrix};

fn show(name: &str, m: &DenseMatrix) {
    println!("{name} ({}x{}):", m.rows(), m.cols());
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:9.5}")).collect();
        println!("  {}", row.join(" "));
    }
}

fn main() {
    let a = DenseMatrix::from_rows(&[&[2.0, -1.0, 0.5], &[0.0, 3.0, 1.0], &[1.0, 1.0, -2.0], &[4.0, 0.0, 1.0], &[-1.0, 2.0, 0.0]]);
    let d = svd(&a).unwrap();
    println!("singular values {:?}", d.s);
    println!("reconstruction error {:.2e}", d.u.scale_cols(&d.s).matmul_t(&d.v).sub(&a).frobenius_norm());
    println!("UᵀU defect {:.2e}, VᵀV defect {:.2e}", d.u.orthonormality_error(), d.v.orthonormality_error());

    let p = a.t_matmul(&a);
    let e = sym_eig(&p).unwrap();
    println!("\neigenvalues of AᵀA {:?} (squares of the singular values)", e.eigenvalues);

    let l = cholesky(&p).unwrap();
    show("Cholesky factor of AᵀA", &l);
    println!("log det(AᵀA) = {:.6}", logdet_spd(&p).unwrap());

    // Polar factor A (AᵀA)^{-1/2}: the closest orthonormal frame to A.
    let q = a.matmul(&inv_sqrt_sym(&p).unwrap());
    show("polar factor", &q);
    println!("its orthonormality defect {:.2e}", q.orthonormality_error());

    let b = DenseMatrix::from_rows(&[&[1.0], &[2.0], &[3.0]]);
    let x = solve(&p, &b).unwrap();
    println!("\nsolve(AᵀA, b) residual {:.2e}", p.matmul(&x).sub(&b).frobenius_norm());
}
