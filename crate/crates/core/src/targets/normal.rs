use std::f64::consts::{FRAC_1_SQRT_2, PI};

const TAIL_START: f64 = -10.0;
const TAIL_TERMS: usize = 20;

/// `log φ(x)` for the standard normal density.
pub fn log_normal_pdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * (2.0 * PI).ln()
}

/// Mills-ratio series `Σ (−1)ⁿ (2n−1)!! / x²ⁿ`, so that
/// `Φ(x) = φ(x) S(x) / (−x)` in the lower tail.
fn tail_series(x: f64) -> f64 {
    let inv = 1.0 / (x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..=TAIL_TERMS {
        term *= -((2 * n - 1) as f64) * inv;
        sum += term;
    }
    sum
}

/// Numerically stable `log Φ(x)`.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x < TAIL_START {
        log_normal_pdf(x) - (-x).ln() + tail_series(x).ln()
    } else if x < 0.0 {
        (0.5 * libm::erfc(-x * FRAC_1_SQRT_2)).ln()
    } else {
        (-0.5 * libm::erfc(x * FRAC_1_SQRT_2)).ln_1p()
    }
}

/// `d/dx log Φ(x) = φ(x)/Φ(x)`.
pub fn normal_hazard(x: f64) -> f64 {
    if x < TAIL_START {
        -x / tail_series(x)
    } else {
        (log_normal_pdf(x) - log_normal_cdf(x)).exp()
    }
}
