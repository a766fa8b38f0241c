use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::linalg::{logdet_spd, solve, DenseMatrix};
use crate::param::{ParamKind, ParamSpec};

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DenseMatrix {
    DenseMatrix::from_vec(r, c, gaussian(rng, r * c)).unwrap()
}

fn random_frame(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DenseMatrix {
    let spec = ParamSpec::new(ParamKind::Polar, r, c).unwrap();
    spec.eval(&gaussian(rng, r * c)).unwrap().upsilon
}

fn central_diff(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            xp[i] = x[i] + h;
            let fp = f(&xp);
            xp[i] = x[i] - h;
            let fm = f(&xp);
            xp[i] = x[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm.max(1.0)
}

/// Checks a model's gradient treating every block as free coordinates.
fn check_model_gradient(model: &dyn TargetModel, stiefel: &[DenseMatrix], aux: &[Vec<f64>]) -> f64 {
    let shapes: Vec<(usize, usize)> = stiefel.iter().map(|m| m.shape()).collect();
    let lens: Vec<usize> = aux.iter().map(|a| a.len()).collect();
    let mut flat: Vec<f64> = stiefel.iter().flat_map(|m| m.as_slice().to_vec()).collect();
    flat.extend(aux.iter().flatten());
    let unflatten = |x: &[f64]| {
        let mut off = 0;
        let s: Vec<DenseMatrix> = shapes
            .iter()
            .map(|&(r, c)| {
                let m = DenseMatrix::from_vec(r, c, x[off..off + r * c].to_vec()).unwrap();
                off += r * c;
                m
            })
            .collect();
        let a: Vec<Vec<f64>> = lens
            .iter()
            .map(|&n| {
                let v = x[off..off + n].to_vec();
                off += n;
                v
            })
            .collect();
        (s, a)
    };
    let f = |x: &[f64]| {
        let (s, a) = unflatten(x);
        model.log_posterior(&s, &a).unwrap().value
    };
    let fd = central_diff(&f, &flat, 1e-5);
    let post = model.log_posterior(stiefel, aux).unwrap();
    let mut analytic: Vec<f64> = post.stiefel_grad.iter().flat_map(|m| m.as_slice().to_vec()).collect();
    analytic.extend(post.aux_grad.iter().flatten());
    rel_err(&analytic, &fd)
}

fn small_graph(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let mut y = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = if rng.random::<f64>() < 0.4 { 1.0 } else { 0.0 };
            y[(i, j)] = v;
            y[(j, i)] = v;
        }
    }
    y
}

fn small_ppca(rng: &mut ChaCha8Rng, n: usize, j: usize, k: usize, with_mean: bool) -> Ppca {
    let y = random_matrix(rng, n, j);
    Ppca::new(PpcaData::new(y, k, with_mean).unwrap())
}

fn small_mc(rng: &mut ChaCha8Rng, j: usize, t: usize, k: usize, n_missing: usize, p: usize) -> MatrixCompletion {
    let y = random_matrix(rng, j, t);
    let mut missing = vec![false; j * t];
    let mut placed = 0;
    while placed < n_missing {
        let idx = rng.random_range(0..j * t);
        if !missing[idx] {
            missing[idx] = true;
            placed += 1;
        }
    }
    let covariates = (0..p).map(|_| random_matrix(rng, j, t)).collect();
    MatrixCompletion::new(McData::new(y, missing, covariates, k, 0.5).unwrap())
}

// log Φ reference values computed at 50-digit precision.
const LOG_CDF_ORACLE: &[(f64, f64)] = &[
    (-37.0, -689.0305855768905936),
    (-30.0, -454.32124395634319711),
    (-20.0, -203.91715537109726394),
    (-10.5, -58.404187061073243416),
    (-10.0, -53.231285150512470578),
    (-9.5, -48.306019298965230282),
    (-5.0, -15.064998393988725736),
    (-1.0, -1.8410216450092635058),
    (0.0, -0.69314718055994530942),
    (1.0, -0.17275377902344988953),
    (3.0, -0.0013508099647481937988),
    (5.0, -2.8665161296376359338e-7),
    (8.0, -6.2209605742717860585e-16),
];

#[test]
fn log_normal_cdf_matches_high_precision_values() {
    for &(x, expected) in LOG_CDF_ORACLE {
        let got = log_normal_cdf(x);
        let rel = ((got - expected) / expected).abs();
        assert!(rel < 1e-12, "x={x}: got {got:e}, expected {expected:e}, rel {rel:e}");
    }
    assert!((log_normal_cdf(0.0) + 0.6931471805599453).abs() < 1e-16);
    assert!(log_normal_cdf(-30.0).is_finite());
}

#[test]
fn log_normal_cdf_complement() {
    let mut x = -8.0;
    while x <= 8.0 {
        let s = log_normal_cdf(x).exp() + log_normal_cdf(-x).exp();
        assert!((s - 1.0).abs() < 1e-12, "x={x}: {s}");
        x += 0.125;
    }
}

#[test]
fn normal_hazard_is_derivative_of_log_cdf() {
    for x in [-35.0, -12.0, -10.001, -9.999, -3.0, 0.0, 2.0, 6.0] {
        let fd = (log_normal_cdf(x + 1e-6) - log_normal_cdf(x - 1e-6)) / 2e-6;
        let h = normal_hazard(x);
        assert!((h - fd).abs() < 1e-6 * h.abs().max(1.0), "x={x}: {h} vs {fd}");
    }
    assert!((log_normal_pdf(0.0) + 0.5 * (2.0 * PI).ln()).abs() < 1e-16);
}

#[test]
fn uniform_model_is_flat() {
    let u = Uniform::new(4, 2);
    let frame = DenseMatrix::eye(4, 2);
    let post = u.log_posterior(&[frame], &[]).unwrap();
    assert_eq!(post.value, 0.0);
    assert!(post.stiefel_grad[0].max_abs() == 0.0);
    assert!(u.log_posterior(&[DenseMatrix::eye(3, 2)], &[]).is_err());
}

#[test]
fn uniform_polar_density_is_gaussian_kernel() {
    let target = UnconstrainedTarget::with_kind(Arc::new(Uniform::new(6, 2)), ParamKind::Polar).unwrap();
    assert_eq!(target.dim(), 12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = gaussian(&mut rng, 12);
    let mut g = vec![0.0; 12];
    let lp = target.log_density_grad(&x, &mut g).unwrap();
    let expected: f64 = -0.5 * x.iter().map(|v| v * v).sum::<f64>();
    assert!((lp - expected).abs() < 1e-12);
    for (gi, xi) in g.iter().zip(&x) {
        assert!((gi + xi).abs() < 1e-9);
    }
}

#[test]
fn eigenmodel_two_node_likelihood() {
    let y = DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let model = Eigenmodel::new(EigenmodelData::new(y, 1).unwrap());
    let frame = DenseMatrix::from_rows(&[&[1.0], &[0.0]]);
    let ll = model.log_likelihood(&frame, &[2.0], 0.0);
    assert!((ll + 0.693147).abs() < 1e-6);
    // Priors: μ ~ N(0, 100), λ ~ N(0, J) with J = 2.
    let prior = -0.5 * (2.0 * PI * 100.0).ln() - 0.5 * (2.0 * PI * 2.0).ln() - 0.5 * 4.0 / 2.0;
    let post = model.log_posterior(&[frame], &[vec![2.0], vec![0.0]]).unwrap();
    assert!((post.value - ll - prior).abs() < 1e-12);
}

#[test]
fn eigenmodel_likelihood_vanishes_for_complete_graph() {
    let n = 5;
    let mut y = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                y[(i, j)] = 1.0;
            }
        }
    }
    let model = Eigenmodel::new(EigenmodelData::new(y, 2).unwrap());
    let frame = DenseMatrix::eye(n, 2);
    let mut prev = f64::NEG_INFINITY;
    for mu in [0.0, 2.0, 5.0, 10.0, 20.0] {
        let ll = model.log_likelihood(&frame, &[1.0, 1.0], mu);
        assert!(ll < 0.0 && ll > prev);
        prev = ll;
    }
    assert!(prev > -1e-12);
}

#[test]
fn eigenmodel_data_validation() {
    let asym = DenseMatrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
    assert!(EigenmodelData::new(asym, 1).is_err());
    let nonbinary = DenseMatrix::from_rows(&[&[0.0, 0.5], &[0.5, 0.0]]);
    assert!(EigenmodelData::new(nonbinary, 1).is_err());
}

#[test]
fn eigenmodel_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let model = Eigenmodel::new(EigenmodelData::new(small_graph(&mut rng, 10), 3).unwrap());
    for _ in 0..10 {
        let frame = random_frame(&mut rng, 10, 3);
        let lambda = gaussian(&mut rng, 3).iter().map(|v| 3.0 * v).collect();
        let mu = vec![rng.sample::<f64, _>(StandardNormal)];
        let err = check_model_gradient(&model, &[frame], &[lambda, mu]);
        assert!(err < 1e-6, "rel err {err:e}");
    }
}

#[test]
fn eigenmodel_sign_flip_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let model = Eigenmodel::new(EigenmodelData::new(small_graph(&mut rng, 12), 3).unwrap());
    let frame = random_frame(&mut rng, 12, 3);
    let aux = vec![vec![2.0, -1.0, 0.5], vec![-0.3]];
    let base = model.log_posterior(&[frame.clone()], &aux).unwrap().value;
    for signs in [[-1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, -1.0, -1.0]] {
        let flipped = frame.scale_cols(&signs);
        let v = model.log_posterior(&[flipped], &aux).unwrap().value;
        assert_eq!(v, base);
    }
}

#[test]
fn ppca_hand_example() {
    let y = DenseMatrix::from_rows(&[&[0.0, 0.0]]);
    let model = Ppca::new(PpcaData::new(y, 1, false).unwrap());
    let w = DenseMatrix::from_rows(&[&[1.0], &[0.0]]);
    let post = model.log_posterior(&[w], &[vec![1.0], vec![1.0]]).unwrap();
    // C = diag(2, 1): −½(log 2 + 2 log 2π).
    assert!((post.value + 2.1844506566893181).abs() < 1e-12, "{}", post.value);
}

#[test]
fn ppca_without_observations_is_zero() {
    let model = Ppca::new(PpcaData::new(DenseMatrix::zeros(0, 3), 1, true).unwrap());
    let w = DenseMatrix::eye(3, 1);
    let post = model.log_posterior(&[w], &[vec![2.0], vec![0.5], vec![0.1, 0.2, 0.3]]).unwrap();
    assert_eq!(post.value, 0.0);
}

/// Direct `Σ_i log N(y_i; μ, WΛ²Wᵀ + σ²I)` with a dense `J × J` covariance.
fn ppca_dense(y: &DenseMatrix, w: &DenseMatrix, lambda: &[f64], sigma2: f64, mu: &[f64]) -> f64 {
    let j = w.rows();
    let d: Vec<f64> = lambda.iter().map(|l| l * l).collect();
    let mut c = w.scale_cols(&d).matmul_t(w);
    for i in 0..j {
        c[(i, i)] += sigma2;
    }
    let logdet = logdet_spd(&c).unwrap();
    let mut r = y.clone();
    for i in 0..y.rows() {
        for (v, m) in r.row_mut(i).iter_mut().zip(mu) {
            *v -= m;
        }
    }
    let cinv_rt = solve(&c, &r.transpose()).unwrap();
    let quad: f64 = (0..y.rows())
        .map(|i| (0..j).map(|a| r[(i, a)] * cinv_rt[(a, i)]).sum::<f64>())
        .sum();
    -0.5 * (y.rows() as f64 * (j as f64 * (2.0 * PI).ln() + logdet) + quad)
}

#[test]
fn ppca_woodbury_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for &(n, j, k) in &[(10, 5, 2), (30, 12, 3), (25, 20, 4)] {
        let model = small_ppca(&mut rng, n, j, k, true);
        let w = random_frame(&mut rng, j, k);
        let mut lambda: Vec<f64> = (0..k).map(|i| 3.0 - 0.5 * i as f64).collect();
        lambda[0] += rng.random::<f64>();
        let sigma2 = 0.3 + rng.random::<f64>();
        let mu = gaussian(&mut rng, j);
        let direct = ppca_dense(&model.data().y, &w, &lambda, sigma2, &mu);
        let post = model
            .log_posterior(&[w], &[lambda, vec![sigma2], mu])
            .unwrap();
        assert!(((post.value - direct) / direct).abs() < 1e-8, "{} vs {direct}", post.value);
    }
}

#[test]
fn ppca_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for with_mean in [false, true] {
        let model = small_ppca(&mut rng, 10, 5, 2, with_mean);
        for _ in 0..10 {
            let w = random_frame(&mut rng, 5, 2);
            let lambda = vec![1.5 + rng.random::<f64>(), 0.5 + rng.random::<f64>()];
            let sigma2 = vec![0.5 + rng.random::<f64>()];
            let mut aux = vec![lambda, sigma2];
            if with_mean {
                aux.push(gaussian(&mut rng, 5));
            }
            let err = check_model_gradient(&model, &[w], &aux);
            assert!(err < 1e-6, "with_mean={with_mean}: rel err {err:e}");
        }
    }
}

#[test]
fn ppca_rejects_non_positive_scales() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let model = small_ppca(&mut rng, 4, 3, 1, false);
    let w = DenseMatrix::eye(3, 1);
    assert!(matches!(
        model.log_posterior(&[w.clone()], &[vec![0.0], vec![1.0]]),
        Err(TargetError::Domain(_))
    ));
    assert!(model.log_posterior(&[w], &[vec![1.0], vec![-1.0]]).is_err());
}

#[test]
fn mc_zero_residual_example() {
    let data = McData::new(DenseMatrix::zeros(2, 2), vec![false; 4], Vec::new(), 1, 1.0).unwrap();
    let model = MatrixCompletion::new(data);
    let z = DenseMatrix::zeros(2, 1);
    let post = model
        .log_posterior(&[z.clone(), z], &[vec![0.0], vec![], vec![1.0], vec![]])
        .unwrap();
    // Exp(1) prior at λ = 0 contributes log 1 = 0; Jeffreys at σ² = 1 is 0.
    assert!((post.value + 3.6757541328186910).abs() < 1e-12, "{}", post.value);
}

#[test]
fn mc_missing_entry_gradient_is_scaled_residual() {
    let y = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 0.0]]);
    let missing = vec![false, false, false, true];
    let model = MatrixCompletion::new(McData::new(y, missing, Vec::new(), 1, 1.0).unwrap());
    let z = DenseMatrix::zeros(2, 1);
    let sigma2 = 0.5;
    let y_m = 1.7;
    let post = model
        .log_posterior(&[z.clone(), z], &[vec![0.0], vec![], vec![sigma2], vec![y_m]])
        .unwrap();
    // Residual at the missing cell is y_m itself.
    assert!((post.aux_grad[3][0] + y_m / sigma2).abs() < 1e-15);
}

#[test]
fn mc_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let model = small_mc(&mut rng, 6, 8, 2, 10, 2);
    for _ in 0..10 {
        let phi = random_frame(&mut rng, 6, 2);
        let psi = random_frame(&mut rng, 8, 2);
        let lambda = vec![1.0 + rng.random::<f64>(), 0.2 + rng.random::<f64>()];
        let beta = gaussian(&mut rng, 2);
        let sigma2 = vec![0.5 + rng.random::<f64>()];
        let y_miss = gaussian(&mut rng, 10);
        let err = check_model_gradient(&model, &[phi, psi], &[lambda, beta, sigma2, y_miss]);
        assert!(err < 1e-6, "rel err {err:e}");
    }
}

#[test]
fn mc_factor_permutation_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let model = small_mc(&mut rng, 6, 8, 3, 5, 1);
    let phi = random_frame(&mut rng, 6, 3);
    let psi = random_frame(&mut rng, 8, 3);
    let lambda = vec![2.0, 1.0, 0.5];
    let rest = vec![vec![0.3], vec![0.8], gaussian(&mut rng, 5)];
    let mut aux = vec![lambda.clone()];
    aux.extend(rest.clone());
    let base = model.log_posterior(&[phi.clone(), psi.clone()], &aux).unwrap().value;

    let perm = [2, 0, 1];
    let permute = |m: &DenseMatrix| {
        let mut out = DenseMatrix::zeros(m.rows(), 3);
        for r in 0..m.rows() {
            for (dst, &src) in perm.iter().enumerate() {
                out[(r, dst)] = m[(r, src)];
            }
        }
        out
    };
    let mut aux_p = vec![perm.iter().map(|&s| lambda[s]).collect::<Vec<_>>()];
    aux_p.extend(rest);
    let v = model.log_posterior(&[permute(&phi), permute(&psi)], &aux_p).unwrap().value;
    assert!((v - base).abs() < 1e-12 * base.abs().max(1.0));
}

#[test]
fn mc_data_validation() {
    let y = DenseMatrix::zeros(3, 4);
    let mut missing = vec![false; 12];
    missing[4..8].iter_mut().for_each(|m| *m = true);
    assert!(McData::new(y.clone(), missing, Vec::new(), 1, 1.0).is_err());
    assert!(McData::new(y.clone(), vec![false; 12], Vec::new(), 3, 1.0).is_err());
    assert!(McData::new(y, vec![false; 11], Vec::new(), 1, 1.0).is_err());
}

#[test]
fn ppca_householder_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let model = Arc::new(small_ppca(&mut rng, 10, 5, 2, false));
    let target = UnconstrainedTarget::with_kind(model, ParamKind::Householder).unwrap();
    assert_eq!(target.dim(), 9 + 2 + 1);
}

#[test]
fn build_rejects_mismatched_specs() {
    let model: Arc<dyn TargetModel> = Arc::new(Uniform::new(5, 2));
    let spec = ParamSpec::new(ParamKind::Polar, 5, 3).unwrap();
    assert!(build_unconstrained(model.clone(), vec![spec]).is_err());
    assert!(build_unconstrained(model, Vec::new()).is_err());
}

#[test]
fn ordered_transform_is_descending() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let model = Arc::new(small_ppca(&mut rng, 10, 5, 3, false));
    let target = UnconstrainedTarget::with_kind(model, ParamKind::Polar).unwrap();
    for _ in 0..20 {
        let x = gaussian(&mut rng, target.dim());
        let (_, aux) = target.constrain(&x).unwrap();
        assert!(aux[0].windows(2).all(|w| w[0] > w[1]) && aux[0][2] > 0.0);
        assert!(aux[1][0] > 0.0);
    }
}

fn composite_models(rng: &mut ChaCha8Rng) -> Vec<Arc<dyn TargetModel>> {
    vec![
        Arc::new(Uniform::new(5, 2)),
        Arc::new(Eigenmodel::new(EigenmodelData::new(small_graph(rng, 6), 3).unwrap())),
        Arc::new(small_ppca(rng, 10, 5, 2, true)),
        Arc::new(small_mc(rng, 5, 6, 2, 4, 1)),
    ]
}

#[test]
fn composite_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for model in composite_models(&mut rng) {
        for kind in ParamKind::ALL {
            let target = UnconstrainedTarget::with_kind(model.clone(), kind).unwrap();
            let f = |x: &[f64]| {
                let mut g = vec![0.0; target.dim()];
                target.log_density_grad(x, &mut g).unwrap()
            };
            for _ in 0..3 {
                let mut x = target.initial_point(&mut rng);
                // Move off the tiny initial scale so the maps are generic.
                for v in x.iter_mut() {
                    *v *= 5.0;
                }
                let mut g = vec![0.0; target.dim()];
                target.log_density_grad(&x, &mut g).unwrap();
                let fd = central_diff(&f, &x, 1e-5);
                let err = rel_err(&g, &fd);
                assert!(err < 1e-6, "{} / {kind}: rel err {err:e}", model.name());
            }
        }
    }
}

#[test]
fn givens_initial_point_is_inside_chart() {
    let target = UnconstrainedTarget::with_kind(Arc::new(Uniform::new(6, 3)), ParamKind::Givens).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for _ in 0..50 {
        let x = target.initial_point(&mut rng);
        let mut g = vec![0.0; target.dim()];
        assert!(target.log_density_grad(&x, &mut g).is_ok());
    }
}

#[test]
fn givens_outside_chart_is_domain_error() {
    let target = UnconstrainedTarget::with_kind(Arc::new(Uniform::new(3, 1)), ParamKind::Givens).unwrap();
    let mut g = vec![0.0; 4];
    let err = target.log_density_grad(&[1.0, 0.0, -1.0, 0.1], &mut g);
    assert!(matches!(err, Err(TargetError::Domain(_))));
}

#[test]
fn stiefel_values_and_aux_offset() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let model = Arc::new(small_mc(&mut rng, 5, 6, 2, 4, 1));
    let target = UnconstrainedTarget::with_kind(model, ParamKind::Householder).unwrap();
    let x = gaussian(&mut rng, target.dim());
    let vals = target.stiefel_values(&x).unwrap();
    assert_eq!(vals.len(), 5 * 2 + 6 * 2);
    let phi_total: usize = target.specs().iter().map(|s| s.phi_len()).sum();
    assert_eq!(target.aux_offset(), phi_total);
}
