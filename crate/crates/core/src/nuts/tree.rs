//! Trajectory building for one NUTS transition.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::integrator::{leapfrog, Point};
use super::SamplerError;
use crate::targets::LogDensity;

/// How the next state is picked from the trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectorySampling {
    /// Weights `exp(−H)` over all states.
    #[default]
    Multinomial,
    /// Uniform over states inside an auxiliary slice.
    Slice,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeOptions {
    pub max_treedepth: usize,
    pub sampling: TrajectorySampling,
    /// Energy error beyond which a trajectory is declared divergent.
    pub max_energy_error: f64,
}

impl Default for TreeOptions {
    fn default() -> Self {
        Self {
            max_treedepth: 10,
            sampling: TrajectorySampling::Multinomial,
            max_energy_error: 1000.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Transition {
    /// New state; its momentum is the one it was reached with.
    pub point: Point,
    /// Mean of `min(1, exp(H₀ − H))` over the trajectory.
    pub accept_stat: f64,
    pub depth: usize,
    pub n_leapfrog: usize,
    pub divergent: bool,
}

struct Ctx<'a, T: ?Sized> {
    target: &'a T,
    eps: f64,
    inv_mass: &'a [f64],
    h0: f64,
    /// `log U` for the slice variable, relative to `−H₀`.
    log_slice: f64,
    opts: TreeOptions,
}

struct Subtree {
    minus: Point,
    plus: Point,
    proposal: Point,
    log_weight: f64,
    n_leapfrog: usize,
    sum_accept: f64,
    stop: bool,
    divergent: bool,
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Classic no-U-turn check with velocities `M^{-1}p` at both ends.
fn is_turning(minus: &Point, plus: &Point, inv_mass: &[f64]) -> bool {
    let mut fwd = 0.0;
    let mut bwd = 0.0;
    for i in 0..minus.q.len() {
        let dq = plus.q[i] - minus.q[i];
        fwd += dq * inv_mass[i] * plus.p[i];
        bwd += dq * inv_mass[i] * minus.p[i];
    }
    fwd < 0.0 || bwd < 0.0
}

fn diverged(from: &Point) -> Subtree {
    Subtree {
        minus: from.clone(),
        plus: from.clone(),
        proposal: from.clone(),
        log_weight: f64::NEG_INFINITY,
        n_leapfrog: 1,
        sum_accept: 0.0,
        stop: true,
        divergent: true,
    }
}

fn leaf<T: LogDensity + ?Sized>(ctx: &Ctx<'_, T>, from: &Point, dir: f64) -> Subtree {
    let new = match leapfrog(ctx.target, from, dir * ctx.eps, ctx.inv_mass) {
        Ok(p) => p,
        Err(_) => return diverged(from),
    };
    let delta = new.hamiltonian(ctx.inv_mass) - ctx.h0;
    if !delta.is_finite() || delta > ctx.opts.max_energy_error {
        return diverged(from);
    }
    let log_weight = match ctx.opts.sampling {
        TrajectorySampling::Multinomial => -delta,
        TrajectorySampling::Slice => {
            if ctx.log_slice <= -delta {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        }
    };
    Subtree {
        minus: new.clone(),
        plus: new.clone(),
        proposal: new,
        log_weight,
        n_leapfrog: 1,
        sum_accept: (-delta).exp().min(1.0),
        stop: false,
        divergent: false,
    }
}

fn build<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    ctx: &Ctx<'_, T>,
    from: &Point,
    dir: f64,
    depth: usize,
    rng: &mut R,
) -> Subtree {
    if depth == 0 {
        return leaf(ctx, from, dir);
    }
    let mut first = build(ctx, from, dir, depth - 1, rng);
    if first.stop {
        return first;
    }
    let edge = if dir > 0.0 { &first.plus } else { &first.minus };
    let second = build(ctx, edge, dir, depth - 1, rng);
    first.n_leapfrog += second.n_leapfrog;
    first.sum_accept += second.sum_accept;
    if second.stop {
        first.stop = true;
        first.divergent = second.divergent;
        return first;
    }
    // Uniform progressive sampling inside the subtree.
    let total = log_add_exp(first.log_weight, second.log_weight);
    if second.log_weight > f64::NEG_INFINITY && rng.random::<f64>() < (second.log_weight - total).exp() {
        first.proposal = second.proposal;
    }
    first.log_weight = total;
    if dir > 0.0 {
        first.plus = second.plus;
    } else {
        first.minus = second.minus;
    }
    first.stop = is_turning(&first.minus, &first.plus, ctx.inv_mass);
    first
}

/// Draws `p ~ N(0, M)` and runs one NUTS transition from `current`.
pub fn nuts_draw<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    current: &Point,
    step: f64,
    inv_mass: &[f64],
    opts: &TreeOptions,
    rng: &mut R,
) -> Result<Transition, SamplerError> {
    let mut start = current.clone();
    for (p, m) in start.p.iter_mut().zip(inv_mass) {
        *p = rng.sample::<f64, _>(StandardNormal) / m.sqrt();
    }
    transition_from(target, start, step, inv_mass, opts, rng)
}

/// One transition from a point whose momentum is already set.
pub fn transition_from<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    start: Point,
    step: f64,
    inv_mass: &[f64],
    opts: &TreeOptions,
    rng: &mut R,
) -> Result<Transition, SamplerError> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(SamplerError::InvalidConfig(format!("step size must be positive and finite, got {step}")));
    }
    let h0 = start.hamiltonian(inv_mass);
    if opts.max_treedepth == 0 {
        return Ok(metropolis_step(target, start, step, inv_mass, h0, opts, rng));
    }
    let log_slice = match opts.sampling {
        TrajectorySampling::Slice => rng.random::<f64>().ln(),
        TrajectorySampling::Multinomial => 0.0,
    };
    let ctx = Ctx {
        target,
        eps: step,
        inv_mass,
        h0,
        log_slice,
        opts: *opts,
    };

    let mut minus = start.clone();
    let mut plus = start.clone();
    let mut proposal = start;
    let mut log_weight = 0.0;
    let mut depth = 0;
    let mut n_leapfrog = 0;
    let mut sum_accept = 0.0;
    let mut divergent = false;
    while depth < opts.max_treedepth {
        let dir = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let edge = if dir > 0.0 { &plus } else { &minus };
        let sub = build(&ctx, edge, dir, depth, rng);
        depth += 1;
        n_leapfrog += sub.n_leapfrog;
        sum_accept += sub.sum_accept;
        if sub.stop {
            divergent = sub.divergent;
            break;
        }
        // Biased progressive sampling favours the newer half.
        if sub.log_weight > f64::NEG_INFINITY && rng.random::<f64>() < (sub.log_weight - log_weight).exp() {
            proposal = sub.proposal;
        }
        log_weight = log_add_exp(log_weight, sub.log_weight);
        if dir > 0.0 {
            plus = sub.plus;
        } else {
            minus = sub.minus;
        }
        if is_turning(&minus, &plus, inv_mass) {
            break;
        }
    }
    Ok(Transition {
        point: proposal,
        accept_stat: if n_leapfrog > 0 { sum_accept / n_leapfrog as f64 } else { 0.0 },
        depth,
        n_leapfrog,
        divergent,
    })
}

fn metropolis_step<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    start: Point,
    step: f64,
    inv_mass: &[f64],
    h0: f64,
    opts: &TreeOptions,
    rng: &mut R,
) -> Transition {
    let (candidate, accept, divergent) = match leapfrog(target, &start, step, inv_mass) {
        Ok(new) => {
            let delta = new.hamiltonian(inv_mass) - h0;
            if !delta.is_finite() || delta > opts.max_energy_error {
                (None, 0.0, true)
            } else {
                (Some(new), (-delta).exp().min(1.0), false)
            }
        }
        Err(_) => (None, 0.0, true),
    };
    let u: f64 = rng.random();
    let point = match candidate {
        Some(new) if u < accept => new,
        _ => start,
    };
    Transition {
        point,
        accept_stat: accept,
        depth: 0,
        n_leapfrog: 1,
        divergent,
    }
}
