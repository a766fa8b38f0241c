//! No-U-Turn sampler with dual-averaging step size and diagonal metric
//! adaptation.

mod adapt;
mod integrator;
pub mod rng;
mod tree;


use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use adapt::{dual_averaging_update, DualAveragingState, WarmupSchedule, WelfordVariance};
pub use integrator::{leapfrog, Point};
pub use tree::{nuts_draw, transition_from, Transition, TrajectorySampling, TreeOptions};

use crate::linalg::DenseMatrix;
use crate::targets::LogDensity;

const INIT_ATTEMPTS: usize = 100;
const MAX_WARMUP_DIVERGENT_FRACTION: f64 = 0.9;

#[derive(Debug, thiserror::Error)]
pub enum SamplerError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("no finite starting point after {attempts} attempts: {last}")]
    Initialization { attempts: usize, last: String },
    #[error(
        "{divergent} of {total} warmup transitions diverged; \
         try a smaller initial step size or a better-conditioned target"
    )]
    WarmupDivergent { divergent: usize, total: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub iters_total: usize,
    pub iters_keep: usize,
    pub target_accept: f64,
    pub max_treedepth: usize,
    pub mass_adaptation: bool,
    pub seed: u64,
    pub trajectory: TrajectorySampling,
    /// Starting guess for the step-size search.
    pub initial_step: f64,
    pub max_energy_error: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            iters_total: 1000,
            iters_keep: 500,
            target_accept: 0.8,
            max_treedepth: 10,
            mass_adaptation: true,
            seed: 0,
            trajectory: TrajectorySampling::Multinomial,
            initial_step: 1.0,
            max_energy_error: 1000.0,
        }
    }
}

impl SamplerConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn warmup(&self) -> usize {
        self.iters_total - self.iters_keep
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        let bad = |m: String| Err(SamplerError::InvalidConfig(m));
        if self.iters_keep == 0 {
            return bad("iters_keep must be at least 1".into());
        }
        if self.iters_keep > self.iters_total {
            return bad(format!(
                "iters_keep ({}) exceeds iters_total ({})",
                self.iters_keep, self.iters_total
            ));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return bad(format!("target_accept must lie in (0, 1), got {}", self.target_accept));
        }
        if !(self.initial_step > 0.0) || !self.initial_step.is_finite() {
            return bad(format!("initial_step must be positive, got {}", self.initial_step));
        }
        if !(self.max_energy_error > 0.0) {
            return bad(format!("max_energy_error must be positive, got {}", self.max_energy_error));
        }
        Ok(())
    }

    fn tree_options(&self) -> TreeOptions {
        TreeOptions {
            max_treedepth: self.max_treedepth,
            sampling: self.trajectory,
            max_energy_error: self.max_energy_error,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainResult {
    /// `iters_keep × dim`, unconstrained coordinates.
    pub draws: DenseMatrix,
    /// Mapped Stiefel entries of each kept draw, when the target has them.
    pub mapped_draws: Option<DenseMatrix>,
    /// First auxiliary column of `draws`.
    pub aux_offset: usize,
    /// Divergent transitions among kept iterations.
    pub divergences: usize,
    pub warmup_divergences: usize,
    /// Step size used for kept iterations.
    pub step_size: f64,
    /// Step size used at every iteration.
    pub step_sizes: Vec<f64>,
    pub accept_stats: Vec<f64>,
    pub tree_depths: Vec<usize>,
    pub n_leapfrog: usize,
    pub inv_mass: Vec<f64>,
    pub elapsed_seconds: f64,
    pub seed: u64,
}

/// Heuristic initial step: doubles or halves `ε` until the one-step
/// acceptance ratio crosses ½.
pub fn find_reasonable_step<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    current: &Point,
    initial: f64,
    inv_mass: &[f64],
    rng: &mut R,
) -> f64 {
    let mut start = current.clone();
    for (p, m) in start.p.iter_mut().zip(inv_mass) {
        *p = rng.sample::<f64, _>(StandardNormal) / m.sqrt();
    }
    let h0 = start.hamiltonian(inv_mass);
    let log_ratio = |eps: f64| match leapfrog(target, &start, eps, inv_mass) {
        Ok(new) => {
            let r = h0 - new.hamiltonian(inv_mass);
            if r.is_finite() {
                r
            } else {
                f64::NEG_INFINITY
            }
        }
        Err(_) => f64::NEG_INFINITY,
    };
    let mut eps = initial;
    let dir = if log_ratio(eps) > 0.5f64.ln() { 1.0 } else { -1.0 };
    for _ in 0..100 {
        let r = log_ratio(eps);
        if dir * r <= -dir * std::f64::consts::LN_2 {
            break;
        }
        let next = eps * 2f64.powf(dir);
        if !(1e-12..=1e6).contains(&next) {
            break;
        }
        eps = next;
    }
    eps
}

fn initial_point<T: LogDensity + ?Sized, R: Rng>(target: &T, rng: &mut R) -> Result<Point, SamplerError> {
    let mut last = String::new();
    for _ in 0..INIT_ATTEMPTS {
        let q = target.initial_point(rng);
        match Point::at(target, q) {
            Ok(p) if p.logp.is_finite() => return Ok(p),
            Ok(p) => last = format!("log-density {}", p.logp),
            Err(e) => last = e.to_string(),
        }
    }
    Err(SamplerError::Initialization {
        attempts: INIT_ATTEMPTS,
        last,
    })
}

/// Runs one chain: `iters_total − iters_keep` warmup iterations with
/// adaptation, then `iters_keep` kept draws with adaptation frozen.
pub fn sample<T: LogDensity + ?Sized>(target: &T, cfg: &SamplerConfig) -> Result<ChainResult, SamplerError> {
    cfg.validate()?;
    let dim = target.dim();
    if dim == 0 {
        return Err(SamplerError::InvalidConfig("target dimension must be at least 1".into()));
    }
    let clock = Instant::now();
    let mut rng = rng::chain_rng(cfg.seed);
    let opts = cfg.tree_options();
    let warmup = cfg.warmup();
    let schedule = WarmupSchedule::new(warmup, cfg.mass_adaptation);

    let mut current = initial_point(target, &mut rng)?;
    let mut inv_mass = vec![1.0; dim];
    let mut step = find_reasonable_step(target, &current, cfg.initial_step, &inv_mass, &mut rng);
    let mut da = DualAveragingState::new(step);
    let mut variance = WelfordVariance::new(dim);

    let mut draws = Vec::with_capacity(cfg.iters_keep * dim);
    let mut step_sizes = Vec::with_capacity(cfg.iters_total);
    let mut accept_stats = Vec::with_capacity(cfg.iters_total);
    let mut tree_depths = Vec::with_capacity(cfg.iters_total);
    let mut n_leapfrog = 0;
    let mut divergences = 0;
    let mut warmup_divergences = 0;

    for it in 0..cfg.iters_total {
        step_sizes.push(step);
        let tr = nuts_draw(target, &current, step, &inv_mass, &opts, &mut rng)?;
        current = tr.point;
        accept_stats.push(tr.accept_stat);
        tree_depths.push(tr.depth);
        n_leapfrog += tr.n_leapfrog;

        if it < warmup {
            if tr.divergent {
                warmup_divergences += 1;
            }
            da = dual_averaging_update(&da, tr.accept_stat, cfg.target_accept);
            step = da.step();
            if schedule.in_window(it) {
                variance.add(&current.q);
            }
            if schedule.is_window_end(it) {
                inv_mass = variance.regularized_variance();
                variance.reset();
                step = find_reasonable_step(target, &current, step, &inv_mass, &mut rng);
                da = DualAveragingState::new(step);
            }
            if it + 1 == warmup {
                if warmup_divergences as f64 > MAX_WARMUP_DIVERGENT_FRACTION * warmup as f64 {
                    return Err(SamplerError::WarmupDivergent {
                        divergent: warmup_divergences,
                        total: warmup,
                    });
                }
                step = da.final_step();
            }
        } else {
            if tr.divergent {
                divergences += 1;
            }
            draws.extend_from_slice(&current.q);
        }
    }
    let elapsed_seconds = clock.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);

    let draws = DenseMatrix::from_vec(cfg.iters_keep, dim, draws).expect("kept draws fill the matrix");
    let mapped_draws = map_draws(target, &draws);
    Ok(ChainResult {
        draws,
        mapped_draws,
        aux_offset: target.aux_offset(),
        divergences,
        warmup_divergences,
        step_size: step,
        step_sizes,
        accept_stats,
        tree_depths,
        n_leapfrog,
        inv_mass,
        elapsed_seconds,
        seed: cfg.seed,
    })
}

fn map_draws<T: LogDensity + ?Sized>(target: &T, draws: &DenseMatrix) -> Option<DenseMatrix> {
    let mut out = Vec::new();
    let mut width = None;
    for i in 0..draws.rows() {
        let v = target.stiefel_values(draws.row(i))?;
        if *width.get_or_insert(v.len()) != v.len() {
            return None;
        }
        out.extend(v);
    }
    DenseMatrix::from_vec(draws.rows(), width?, out).ok()
}
