//! Self-check suites run by `stiefel-bench check`.
//!
//! Each suite evaluates a family of numerical identities and reports one
//! line per case. These are runtime diagnostics for an installed build; the
//! frozen reference values live in the test suites.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bench::synth::{synth_data, Dataset, SynthSpec};
use crate::diagnostics::ess_univariate;
use crate::linalg::{logdet_spd, DenseMatrix};
use crate::nuts::{sample, SamplerConfig};
use crate::param::{rotation_planes, ParamKind, ParamSpec};
use crate::targets::{Eigenmodel, LogDensity, MatrixCompletion, Ppca, TargetModel, UnconstrainedTarget, Uniform};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Gradients,
    Jacobians,
    UniformMoments,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Gradients, Suite::Jacobians, Suite::UniformMoments];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Gradients => "gradients",
            Suite::Jacobians => "jacobians",
            Suite::UniformMoments => "uniform-moments",
        }
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}` (expected gradients, jacobians or uniform-moments)"))
    }
}

/// One checked case: `value` must be below `threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub case: String,
    pub value: f64,
    pub threshold: f64,
}

impl CheckLine {
    pub fn passed(&self) -> bool {
        self.value < self.threshold
    }
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub suite: Suite,
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        !self.lines.is_empty() && self.lines.iter().all(CheckLine::passed)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            let tag = if l.passed() { "ok  " } else { "FAIL" };
            writeln!(f, "{tag} {:<44} {:.3e} (< {:.1e})", l.case, l.value, l.threshold)?;
        }
        let failed = self.lines.iter().filter(|l| !l.passed()).count();
        write!(f, "{}: {} cases, {failed} failed", self.suite.name(), self.lines.len())
    }
}

pub fn run_suite(suite: Suite) -> CheckReport {
    let lines = match suite {
        Suite::Gradients => gradient_lines(),
        Suite::Jacobians => jacobian_lines(),
        Suite::UniformMoments => uniform_moment_lines(4, 0),
    };
    CheckReport { suite, lines }
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm.max(1.0)
}

fn std_dev(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Small instances of every model.
fn check_models(j: usize, k: usize) -> Vec<Arc<dyn TargetModel>> {
    let mut models: Vec<Arc<dyn TargetModel>> = vec![Arc::new(Uniform::new(j, k))];
    let lambda: Vec<f64> = (0..k).map(|i| (k - i) as f64 + 1.0).collect();
    let eig = SynthSpec::Eigenmodel {
        j,
        k,
        lambda: lambda.clone(),
        mu: -0.5,
    };
    if let Dataset::Eigenmodel(d) = synth_data(&eig, 11).dataset {
        models.push(Arc::new(Eigenmodel::new(d)));
    }
    let ppca = SynthSpec::Ppca {
        n: 4 * j,
        j,
        k,
        lambda: lambda.clone(),
        sigma: 0.5,
        with_mean: true,
    };
    if let Dataset::Ppca(d) = synth_data(&ppca, 12).dataset {
        models.push(Arc::new(Ppca::new(d)));
    }
    let mc = SynthSpec::Mc {
        j,
        t: j + 1,
        k,
        lambda,
        sigma: 0.5,
        beta: vec![0.7],
        missing_fraction: 0.1,
        eta: 1.0,
    };
    if let Dataset::Mc(d) = synth_data(&mc, 13).dataset {
        models.push(Arc::new(MatrixCompletion::new(d)));
    }
    models
}

/// Composite gradients against central differences (`h = 1e-5`), ten
/// points per model and kind. The error is `‖g − g_fd‖ / max(1, ‖g‖)`.
fn gradient_lines() -> Vec<CheckLine> {
    let mut lines = Vec::new();
    for (j, k) in [(4, 2), (6, 3)] {
        for model in check_models(j, k) {
            for kind in ParamKind::ALL {
                let Ok(target) = UnconstrainedTarget::with_kind(model.clone(), kind) else {
                    continue;
                };
                let mut rng = ChaCha8Rng::seed_from_u64(0x9e3 + kind.index() as u64);
                let mut worst: f64 = 0.0;
                for _ in 0..10 {
                    worst = worst.max(gradient_error(&target, &mut rng));
                }
                lines.push(CheckLine {
                    case: format!("{} ({j},{k}) {kind}", model.name()),
                    value: worst,
                    threshold: 1e-6,
                });
            }
        }
    }
    lines
}

fn gradient_error(target: &UnconstrainedTarget, rng: &mut ChaCha8Rng) -> f64 {
    let f = |x: &[f64]| {
        let mut g = vec![0.0; target.dim()];
        target.log_density_grad(x, &mut g)
    };
    let x = loop {
        let x = generic_point(target, rng);
        if f(&x).is_ok() {
            break x;
        }
    };
    let mut g = vec![0.0; target.dim()];
    if target.log_density_grad(&x, &mut g).is_err() {
        return f64::INFINITY;
    }
    let h = 1e-5;
    let mut xp = x.clone();
    let mut fd = vec![0.0; x.len()];
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        match (fp, fm) {
            (Ok(a), Ok(b)) => fd[i] = (a - b) / (2.0 * h),
            _ => return f64::INFINITY,
        }
    }
    rel_err(&g, &fd)
}

/// A point at the typical scale of each coordinate: `N(0, ½²)` entries, and
/// Givens pairs at radius `≈ 1` with angles inside the chart.
pub fn generic_point(target: &UnconstrainedTarget, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x: Vec<f64> = gaussian(rng, target.dim()).iter().map(|v| 0.5 * v).collect();
    let mut off = 0;
    for spec in target.specs() {
        if spec.kind() == ParamKind::Givens {
            for (i, (a, b)) in rotation_planes(spec.rows(), spec.cols()).into_iter().enumerate() {
                let range = if b == a + 1 { 3.0 } else { 1.2 };
                let theta: f64 = rng.random_range(-range..range);
                let r = 1.0 + 0.1 * rng.sample::<f64, _>(StandardNormal);
                x[off + 2 * i] = r * theta.cos();
                x[off + 2 * i + 1] = r * theta.sin();
            }
        }
        off += spec.phi_len();
    }
    x
}

/// Central-difference Jacobian of `f` at `x`, one column per coordinate.
fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> DenseMatrix {
    let m = f(x).len();
    let mut d = DenseMatrix::zeros(m, x.len());
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        for r in 0..m {
            d[(r, i)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    d
}

fn half_logdet_gram(d: &DenseMatrix) -> f64 {
    logdet_spd(&d.t_matmul(d)).map_or(f64::NAN, |v| 0.5 * v)
}

/// Log-adjustment minus the Gram volume of the finite-difference Jacobian,
/// which must not depend on the point. Givens is differentiated in its
/// angles at unit radii, where the radius density is a constant.
fn jacobian_lines() -> Vec<CheckLine> {
    let (j, k) = (4, 2);
    let mut lines = Vec::new();
    let cayley = ParamSpec::new(ParamKind::Cayley, j, k).expect("valid shape");
    let mut rng = ChaCha8Rng::seed_from_u64(0x1ac0);
    let offsets: Vec<f64> = (0..10)
        .map(|_| {
            let phi: Vec<f64> = gaussian(&mut rng, cayley.phi_len()).iter().map(|v| 0.5 * v).collect();
            let frame = |p: &[f64]| cayley.eval(p).map_or(vec![f64::NAN; j * k], |m| m.upsilon.to_col_major());
            let d = fd_jacobian(frame, &phi, 1e-6);
            cayley.eval(&phi).map_or(f64::NAN, |m| m.log_adjust) - half_logdet_gram(&d)
        })
        .collect();
    lines.push(CheckLine {
        case: format!("cayley ({j},{k}) offset sd"),
        value: finite_or_inf(std_dev(&offsets)),
        threshold: 1e-4,
    });

    let givens = ParamSpec::new(ParamKind::Givens, j, k).expect("valid shape");
    let planes = rotation_planes(j, k);
    let unit_phi = |theta: &[f64]| -> Vec<f64> { theta.iter().flat_map(|t| [t.cos(), t.sin()]).collect() };
    let offsets: Vec<f64> = (0..10)
        .map(|_| {
            let theta: Vec<f64> = planes
                .iter()
                .map(|&(a, b)| {
                    let range = if b == a + 1 { 3.0 } else { 1.2 };
                    rng.random_range(-range..range)
                })
                .collect();
            let frame = |t: &[f64]| givens.eval(&unit_phi(t)).map_or(vec![f64::NAN; j * k], |m| m.upsilon.to_col_major());
            let d = fd_jacobian(frame, &theta, 1e-6);
            givens.eval(&unit_phi(&theta)).map_or(f64::NAN, |m| m.log_adjust) - half_logdet_gram(&d)
        })
        .collect();
    lines.push(CheckLine {
        case: format!("givens ({j},{k}) offset sd"),
        value: finite_or_inf(std_dev(&offsets)),
        threshold: 1e-4,
    });
    lines
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// Pooled mean and mean square of every frame entry, in units of the
/// Monte Carlo standard error, for each kind sampling the uniform target
/// at `(10, 3)` with default sampler settings. Haar columns are uniform on
/// the sphere, so `E υ = 0` and `E υ² = 1/J`.
pub fn uniform_moment_lines(chains: usize, base_seed: u64) -> Vec<CheckLine> {
    let (j, k) = (10, 3);
    let model: Arc<dyn TargetModel> = Arc::new(Uniform::new(j, k));
    let mut lines = Vec::new();
    for kind in ParamKind::ALL {
        let target = UnconstrainedTarget::with_kind(model.clone(), kind).expect("valid shape");
        let mut runs = Vec::new();
        for c in 0..chains {
            let cfg = SamplerConfig::default().with_seed(crate::nuts::rng::combine_seeds(&[
                base_seed,
                kind.index() as u64,
                c as u64,
            ]));
            match sample(&target, &cfg) {
                Ok(chain) => runs.push(chain.mapped_draws.expect("uniform target has frames")),
                Err(e) => {
                    lines.push(CheckLine {
                        case: format!("{kind} chain {c}: {e}"),
                        value: f64::INFINITY,
                        threshold: 3.0,
                    });
                }
            }
        }
        if runs.len() < chains {
            continue;
        }
        let (mut worst_mean, mut worst_sq) = (0.0f64, 0.0f64);
        for col in 0..j * k {
            let series: Vec<Vec<f64>> = runs.iter().map(|m| m.col(col)).collect();
            let squares: Vec<Vec<f64>> = series.iter().map(|s| s.iter().map(|v| v * v).collect()).collect();
            worst_mean = worst_mean.max(z_score(&series, 0.0));
            worst_sq = worst_sq.max(z_score(&squares, 1.0 / j as f64));
        }
        lines.push(CheckLine {
            case: format!("{kind} max |mean(u)|/se"),
            value: worst_mean,
            threshold: 3.0,
        });
        lines.push(CheckLine {
            case: format!("{kind} max |mean(u^2) - 1/J|/se"),
            value: worst_sq,
            threshold: 3.0,
        });
    }
    lines
}

/// `|pooled mean − expected| / se`, with the standard error from the pooled
/// variance and the summed per-chain effective sample sizes.
fn z_score(chains: &[Vec<f64>], expected: f64) -> f64 {
    let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let mean = pooled.iter().sum::<f64>() / n;
    let var = pooled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let ess: f64 = chains.iter().map(|c| ess_univariate(c).unwrap_or(0.0)).sum();
    if ess <= 0.0 || var <= 0.0 {
        return f64::INFINITY;
    }
    (mean - expected).abs() / (var / ess).sqrt()
}
