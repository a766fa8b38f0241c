//! Effective sample size and the minESS efficiency metrics.


use serde::{Deserialize, Serialize};

use crate::linalg::DenseMatrix;
use crate::nuts::ChainResult;

const MIN_LEN: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("series has {0} values; at least {MIN_LEN} are needed")]
    TooShort(usize),
    #[error("series is constant")]
    Degenerate,
    #[error("max_lag {max_lag} must be below the series length {n}")]
    LagTooLarge { max_lag: usize, n: usize },
    #[error("elapsed time must be positive and finite, got {0}")]
    Elapsed(f64),
    #[error("iteration count must be at least 1")]
    NoIterations,
    #[error("draw matrix has no columns")]
    NoColumns,
    #[error("non-finite value in series")]
    NonFinite,
}

fn check_series(x: &[f64]) -> Result<(), DiagnosticsError> {
    if x.len() < MIN_LEN {
        return Err(DiagnosticsError::TooShort(x.len()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(DiagnosticsError::NonFinite);
    }
    Ok(())
}

fn centered(x: &[f64]) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - mean).collect()
}

fn lag_cov(d: &[f64], lag: usize) -> f64 {
    d.iter().zip(&d[lag..]).map(|(a, b)| a * b).sum::<f64>() / d.len() as f64
}

/// Biased (`1/n`) sample autocovariances at lags `0..=max_lag`.
///
/// A linear trend is not an error: it yields large positive correlations.
pub fn autocovariance(x: &[f64], max_lag: usize) -> Result<Vec<f64>, DiagnosticsError> {
    check_series(x)?;
    if max_lag >= x.len() {
        return Err(DiagnosticsError::LagTooLarge { max_lag, n: x.len() });
    }
    let d = centered(x);
    let out: Vec<f64> = (0..=max_lag).map(|k| lag_cov(&d, k)).collect();
    if out[0] == 0.0 {
        return Err(DiagnosticsError::Degenerate);
    }
    Ok(out)
}

/// ESS of one series together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssEstimate {
    pub ess: f64,
    /// Number of positive pairs `Γ_m = ρ_{2m} + ρ_{2m+1}` that were summed.
    pub pairs: usize,
    /// Constant series; `ess` is then `n`.
    pub stuck: bool,
}

/// Geyer initial-positive-sequence ESS.
///
/// Autocorrelations are computed pair by pair and the sum stops at the
/// first non-positive `Γ_m`, so the cost is `O(n · lag)`.
pub fn ess_estimate(x: &[f64]) -> Result<EssEstimate, DiagnosticsError> {
    check_series(x)?;
    let n = x.len();
    let d = centered(x);
    let c0 = lag_cov(&d, 0);
    if c0 == 0.0 {
        return Ok(EssEstimate {
            ess: n as f64,
            pairs: 0,
            stuck: true,
        });
    }
    let mut sum = 0.0;
    let mut pairs = 0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let gamma = (lag_cov(&d, 2 * m) + lag_cov(&d, 2 * m + 1)) / c0;
        if gamma <= 0.0 {
            break;
        }
        sum += gamma;
        pairs += 1;
        m += 1;
    }
    // 1 + 2Σ_{k≥1} ρ_k = 2Σ_m Γ_m − 1.
    let tau = 2.0 * sum - 1.0;
    let ess = if tau > 0.0 { (n as f64 / tau).min(n as f64) } else { n as f64 };
    Ok(EssEstimate {
        ess,
        pairs,
        stuck: false,
    })
}

/// ESS clamped to `(0, n]`; a constant series gives `n`.
pub fn ess_univariate(x: &[f64]) -> Result<f64, DiagnosticsError> {
    ess_estimate(x).map(|e| e.ess)
}

/// Which columns enter the minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionOfInterest {
    /// Entries of every mapped Stiefel block plus the auxiliary coordinates
    /// as sampled (unconstrained scale).
    #[default]
    All,
    /// Mapped Stiefel entries only.
    StiefelOnly,
    /// Every sampled coordinate, including raw parameterization inputs.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EssReport {
    pub per_dim_ess: Vec<f64>,
    pub min_ess: f64,
    pub min_ess_per_iter: f64,
    pub min_ess_per_sec: f64,
    pub n: usize,
    pub elapsed_seconds: f64,
    /// Number of constant columns.
    pub stuck_dims: usize,
}

impl EssReport {
    pub fn stuck(&self) -> bool {
        self.stuck_dims > 0
    }
}

fn hcat(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let rows = a.rows();
    let mut out = Vec::with_capacity(rows * (a.cols() + b.cols()));
    for i in 0..rows {
        out.extend_from_slice(a.row(i));
        out.extend_from_slice(b.row(i));
    }
    DenseMatrix::from_vec(rows, a.cols() + b.cols(), out).expect("row counts match")
}

fn column_range(m: &DenseMatrix, start: usize) -> DenseMatrix {
    let cols = m.cols() - start;
    let mut out = Vec::with_capacity(m.rows() * cols);
    for i in 0..m.rows() {
        out.extend_from_slice(&m.row(i)[start..]);
    }
    DenseMatrix::from_vec(m.rows(), cols, out).expect("sizes match")
}

/// Columns of a chain selected by `foi`. Targets without Stiefel blocks
/// fall back to the raw draws.
pub fn select_foi(chain: &ChainResult, foi: FunctionOfInterest) -> DenseMatrix {
    match (foi, &chain.mapped_draws) {
        (FunctionOfInterest::Raw, _) | (_, None) => chain.draws.clone(),
        (FunctionOfInterest::StiefelOnly, Some(m)) => m.clone(),
        (FunctionOfInterest::All, Some(m)) => hcat(m, &column_range(&chain.draws, chain.aux_offset)),
    }
}

/// Per-column ESS of an `n × d` draw matrix with the two normalizations
/// `min/iters` and `min/elapsed`.
pub fn min_ess_report(draws: &DenseMatrix, elapsed_seconds: f64, iters: usize) -> Result<EssReport, DiagnosticsError> {
    if !(elapsed_seconds > 0.0) || !elapsed_seconds.is_finite() {
        return Err(DiagnosticsError::Elapsed(elapsed_seconds));
    }
    if iters == 0 {
        return Err(DiagnosticsError::NoIterations);
    }
    if draws.cols() == 0 {
        return Err(DiagnosticsError::NoColumns);
    }
    let mut per_dim_ess = Vec::with_capacity(draws.cols());
    let mut stuck_dims = 0;
    for c in 0..draws.cols() {
        let e = ess_estimate(&draws.col(c))?;
        stuck_dims += e.stuck as usize;
        per_dim_ess.push(e.ess);
    }
    let min_ess = per_dim_ess.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(EssReport {
        min_ess,
        min_ess_per_iter: min_ess / iters as f64,
        min_ess_per_sec: min_ess / elapsed_seconds,
        per_dim_ess,
        n: draws.rows(),
        elapsed_seconds,
        stuck_dims,
    })
}

/// Report for a finished chain; "iter" is the number of kept draws.
pub fn chain_report(chain: &ChainResult, foi: FunctionOfInterest) -> Result<EssReport, DiagnosticsError> {
    let draws = select_foi(chain, foi);
    min_ess_report(&draws, chain.elapsed_seconds, draws.rows())
}
