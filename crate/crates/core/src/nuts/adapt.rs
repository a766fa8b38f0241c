/// Nesterov dual averaging of `log ε` toward a target acceptance statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct DualAveragingState {
    pub log_step: f64,
    pub log_step_avg: f64,
    pub h_avg: f64,
    pub iteration: usize,
    pub mu: f64,
    pub gamma: f64,
    pub t0: f64,
    pub kappa: f64,
}

impl DualAveragingState {
    /// Starts at `ε₀` with shrinkage point `μ = log(10 ε₀)`.
    pub fn new(initial_step: f64) -> Self {
        Self {
            log_step: initial_step.ln(),
            log_step_avg: 0.0,
            h_avg: 0.0,
            iteration: 0,
            mu: (10.0 * initial_step).ln(),
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
        }
    }

    pub fn step(&self) -> f64 {
        self.log_step.exp()
    }

    /// Step size to freeze after warmup.
    pub fn final_step(&self) -> f64 {
        self.log_step_avg.exp()
    }
}

/// One recursion of dual averaging; `accept_stat` is clamped to `[0, 1]`.
pub fn dual_averaging_update(state: &DualAveragingState, accept_stat: f64, target_accept: f64) -> DualAveragingState {
    let accept = if accept_stat.is_finite() { accept_stat.clamp(0.0, 1.0) } else { 0.0 };
    let mut s = state.clone();
    s.iteration += 1;
    let m = s.iteration as f64;
    let w = 1.0 / (m + s.t0);
    s.h_avg = (1.0 - w) * s.h_avg + w * (target_accept - accept);
    s.log_step = s.mu - m.sqrt() / s.gamma * s.h_avg;
    let eta = m.powf(-s.kappa);
    s.log_step_avg = eta * s.log_step + (1.0 - eta) * s.log_step_avg;
    s
}

/// Streaming (Welford) mean and variance per coordinate.
#[derive(Debug, Clone)]
pub struct WelfordVariance {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl WelfordVariance {
    pub fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for i in 0..x.len() {
            let d = x[i] - self.mean[i];
            self.mean[i] += d / n;
            self.m2[i] += d * (x[i] - self.mean[i]);
        }
    }

    /// Sample variance shrunk toward `1e-3`:
    /// `n/(n+5) · s² + 1e-3 · 5/(n+5)`.
    pub fn regularized_variance(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|m2| {
                let var = if self.n > 1 { m2 / (n - 1.0) } else { 1.0 };
                (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
            })
            .collect()
    }

    pub fn reset(&mut self) {
        self.n = 0;
        self.mean.iter_mut().for_each(|v| *v = 0.0);
        self.m2.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Warmup layout: a step-size-only initial buffer, doubling windows that
/// each end with a metric update, and a terminal step-size-only buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmupSchedule {
    pub init_buffer: usize,
    /// Exclusive end iteration of every metric window.
    pub window_ends: Vec<usize>,
    pub warmup: usize,
}

impl WarmupSchedule {
    pub fn new(warmup: usize, adapt_metric: bool) -> Self {
        if !adapt_metric || warmup < 20 {
            return Self {
                init_buffer: warmup,
                window_ends: Vec::new(),
                warmup,
            };
        }
        let (init, term, base) = if warmup >= 150 {
            (75, 50, 25)
        } else {
            let init = warmup * 15 / 100;
            let term = warmup / 10;
            (init, term, warmup - init - term)
        };
        let term_start = warmup - term;
        let mut ends = Vec::new();
        let mut start = init;
        let mut size = base;
        while start < term_start {
            let mut end = start + size;
            // Stretch the last window to the terminal buffer.
            if end + 2 * size > term_start {
                end = term_start;
            }
            ends.push(end);
            start = end;
            size *= 2;
        }
        Self {
            init_buffer: init,
            window_ends: ends,
            warmup,
        }
    }

    /// Whether iteration `it` contributes to a metric window.
    pub fn in_window(&self, it: usize) -> bool {
        it >= self.init_buffer && self.window_ends.last().is_some_and(|&e| it < e)
    }

    pub fn is_window_end(&self, it: usize) -> bool {
        self.window_ends.contains(&(it + 1))
    }
}
