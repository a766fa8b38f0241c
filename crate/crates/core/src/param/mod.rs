//! Unconstrained parameterizations of the Stiefel manifold `V(J, K)`.
//!
//! Each kind maps a flat vector `φ` to an orthonormal frame `Υ` (`J × K`)
//! together with a log-adjustment term: the Jacobian correction and/or the
//! density placed on auxiliary coordinates. The sum of the model
//! log-density at `Υ(φ)` and the log-adjustment is the density sampled in
//! `φ`-space.
//!
//! Gradients are propagated with [`MapTape::pullback`], which evaluates
//! `∇_φ [⟨Ῡ, Υ(φ)⟩ + w · log_adjust(φ)]` by reverse-mode differentiation
//! through the forward computation stored on the tape.

mod cayley;
mod givens;
mod householder;
mod polar;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{DenseMatrix, LinalgError};

pub use givens::{givens_angles, rotation_planes, GivensAngles, GIVENS_RADIUS_MEAN, GIVENS_RADIUS_SD};

/// The four parameterization families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Polar,
    Householder,
    Cayley,
    Givens,
}

impl ParamKind {
    pub const ALL: [ParamKind; 4] = [
        ParamKind::Polar,
        ParamKind::Householder,
        ParamKind::Cayley,
        ParamKind::Givens,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamKind::Polar => "polar",
            ParamKind::Householder => "householder",
            ParamKind::Cayley => "cayley",
            ParamKind::Givens => "givens",
        }
    }

    /// Column heading used in rendered tables.
    pub fn title(self) -> &'static str {
        match self {
            ParamKind::Polar => "Polar",
            ParamKind::Householder => "Householder",
            ParamKind::Cayley => "Cayley",
            ParamKind::Givens => "Givens",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Whether this kind can represent `V(J, K)`.
    pub fn supports(self, rows: usize, cols: usize) -> bool {
        cols >= 1 && cols <= rows && !(self == ParamKind::Cayley && cols == rows)
    }
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamKind {
    type Err = ParamError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "polar" => Ok(ParamKind::Polar),
            "householder" => Ok(ParamKind::Householder),
            "cayley" => Ok(ParamKind::Cayley),
            "givens" => Ok(ParamKind::Givens),
            other => Err(ParamError::InvalidSpec(format!(
                "unknown parameterization '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("invalid parameterization: {0}")]
    InvalidSpec(String),
    #[error("phi has length {got}, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("polar map needs a full-rank matrix (singular value ratio {ratio:.3e})")]
    RankDeficient { ratio: f64 },
    #[error("Householder vector {index} is zero")]
    DegenerateDirection { index: usize },
    #[error("Givens coordinate pair {index} is at the origin")]
    DegenerateAngle { index: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A parameterization kind together with the frame shape `J × K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamSpec {
    kind: ParamKind,
    rows: usize,
    cols: usize,
    givens_area_correction: bool,
}

/// Parameter counts of a [`ParamSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamCounts {
    /// Number of essential coordinates (angles for Givens).
    pub essential: usize,
    /// Length of the unconstrained vector `φ`.
    pub phi_len: usize,
}

impl ParamSpec {
    pub fn new(kind: ParamKind, rows: usize, cols: usize) -> Result<Self, ParamError> {
        if cols < 1 || cols > rows {
            return Err(ParamError::InvalidSpec(format!(
                "need 1 <= K <= J, got J={rows}, K={cols}"
            )));
        }
        if kind == ParamKind::Cayley && cols == rows {
            return Err(ParamError::InvalidSpec(format!(
                "the Cayley parameterization is not available for square frames (J=K={rows})"
            )));
        }
        Ok(Self {
            kind,
            rows,
            cols,
            givens_area_correction: false,
        })
    }

    /// Adds `−log r` per Givens coordinate pair so that the sampled radius
    /// has exactly the `N(1, 0.1²)` marginal. Off by default; ignored by
    /// the other kinds.
    pub fn with_givens_area_correction(mut self, on: bool) -> Self {
        self.givens_area_correction = on;
        self
    }

    pub fn kind(&self) -> ParamKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn givens_area_correction(&self) -> bool {
        self.givens_area_correction
    }

    /// Dimension of `V(J, K)`: `JK − K(K+1)/2`.
    pub fn manifold_dim(&self) -> usize {
        self.rows * self.cols - self.cols * (self.cols + 1) / 2
    }

    pub fn counts(&self) -> ParamCounts {
        let (j, k) = (self.rows, self.cols);
        match self.kind {
            ParamKind::Polar => ParamCounts {
                essential: j * k,
                phi_len: j * k,
            },
            ParamKind::Householder => {
                let n = j * k - k * (k - 1) / 2;
                ParamCounts {
                    essential: n,
                    phi_len: n,
                }
            }
            ParamKind::Cayley => {
                let n = k * (k - 1) / 2 + k * (j - k);
                ParamCounts {
                    essential: n,
                    phi_len: n,
                }
            }
            ParamKind::Givens => {
                let angles = self.manifold_dim();
                ParamCounts {
                    essential: angles,
                    phi_len: 2 * angles,
                }
            }
        }
    }

    pub fn phi_len(&self) -> usize {
        self.counts().phi_len
    }

    fn check_len(&self, phi: &[f64]) -> Result<(), ParamError> {
        let expected = self.phi_len();
        if phi.len() != expected {
            return Err(ParamError::WrongLength {
                expected,
                got: phi.len(),
            });
        }
        Ok(())
    }

    /// Runs the forward map and keeps what the pullback needs.
    pub fn forward(&self, phi: &[f64]) -> Result<MapTape, ParamError> {
        self.check_len(phi)?;
        let inner = match self.kind {
            ParamKind::Polar => TapeInner::Polar(polar::PolarTape::forward(self, phi)?),
            ParamKind::Householder => {
                TapeInner::Householder(householder::HouseholderTape::forward(self, phi)?)
            }
            ParamKind::Cayley => TapeInner::Cayley(cayley::CayleyTape::forward(self, phi)?),
            ParamKind::Givens => TapeInner::Givens(givens::GivensTape::forward(self, phi)?),
        };
        Ok(MapTape { inner })
    }

    /// Maps `φ` to `(Υ, log_adjust)`.
    pub fn eval(&self, phi: &[f64]) -> Result<MapResult, ParamError> {
        Ok(self.forward(phi)?.into_result())
    }

    /// `∇_φ [⟨Ῡ, Υ(φ)⟩ + adjust_weight · log_adjust(φ)]`.
    pub fn pullback(
        &self,
        phi: &[f64],
        upsilon_bar: &DenseMatrix,
        adjust_weight: f64,
    ) -> Result<Vec<f64>, ParamError> {
        Ok(self.forward(phi)?.pullback(upsilon_bar, adjust_weight))
    }
}

/// Free-function form of [`ParamSpec::counts`].
pub fn param_count(spec: &ParamSpec) -> ParamCounts {
    spec.counts()
}

pub fn polar_eval(phi: &[f64], spec: &ParamSpec) -> Result<MapResult, ParamError> {
    expect_kind(spec, ParamKind::Polar)?;
    spec.eval(phi)
}

pub fn householder_eval(phi: &[f64], spec: &ParamSpec) -> Result<MapResult, ParamError> {
    expect_kind(spec, ParamKind::Householder)?;
    spec.eval(phi)
}

pub fn cayley_eval(phi: &[f64], spec: &ParamSpec) -> Result<MapResult, ParamError> {
    expect_kind(spec, ParamKind::Cayley)?;
    spec.eval(phi)
}

pub fn givens_eval(phi: &[f64], spec: &ParamSpec) -> Result<MapResult, ParamError> {
    expect_kind(spec, ParamKind::Givens)?;
    spec.eval(phi)
}

/// Free-function form of [`ParamSpec::pullback`].
pub fn pullback(
    spec: &ParamSpec,
    phi: &[f64],
    upsilon_bar: &DenseMatrix,
    adjust_weight: f64,
) -> Result<Vec<f64>, ParamError> {
    spec.pullback(phi, upsilon_bar, adjust_weight)
}

fn expect_kind(spec: &ParamSpec, kind: ParamKind) -> Result<(), ParamError> {
    if spec.kind != kind {
        return Err(ParamError::InvalidSpec(format!(
            "expected a {kind} spec, got {}",
            spec.kind
        )));
    }
    Ok(())
}

/// Output of a forward map.
#[derive(Debug, Clone)]
pub struct MapResult {
    /// `J × K` frame with orthonormal columns.
    pub upsilon: DenseMatrix,
    /// Natural-log adjustment; `−∞` outside the Givens angle domain.
    pub log_adjust: f64,
}

/// Forward state retained for the reverse pass.
#[derive(Debug, Clone)]
pub struct MapTape {
    inner: TapeInner,
}

#[derive(Debug, Clone)]
enum TapeInner {
    Polar(polar::PolarTape),
    Householder(householder::HouseholderTape),
    Cayley(cayley::CayleyTape),
    Givens(givens::GivensTape),
}

impl MapTape {
    pub fn upsilon(&self) -> &DenseMatrix {
        match &self.inner {
            TapeInner::Polar(t) => &t.upsilon,
            TapeInner::Householder(t) => &t.upsilon,
            TapeInner::Cayley(t) => &t.upsilon,
            TapeInner::Givens(t) => &t.upsilon,
        }
    }

    pub fn log_adjust(&self) -> f64 {
        match &self.inner {
            TapeInner::Polar(t) => t.log_adjust,
            TapeInner::Householder(t) => t.log_adjust,
            TapeInner::Cayley(t) => t.log_adjust,
            TapeInner::Givens(t) => t.log_adjust,
        }
    }

    pub fn into_result(self) -> MapResult {
        let log_adjust = self.log_adjust();
        let upsilon = match self.inner {
            TapeInner::Polar(t) => t.upsilon,
            TapeInner::Householder(t) => t.upsilon,
            TapeInner::Cayley(t) => t.upsilon,
            TapeInner::Givens(t) => t.upsilon,
        };
        MapResult {
            upsilon,
            log_adjust,
        }
    }

    /// Gradient of `⟨Ῡ, Υ⟩ + adjust_weight · log_adjust` with respect to `φ`.
    pub fn pullback(&self, upsilon_bar: &DenseMatrix, adjust_weight: f64) -> Vec<f64> {
        assert_eq!(
            upsilon_bar.shape(),
            self.upsilon().shape(),
            "upsilon_bar shape mismatch"
        );
        match &self.inner {
            TapeInner::Polar(t) => t.pullback(upsilon_bar, adjust_weight),
            TapeInner::Householder(t) => t.pullback(upsilon_bar, adjust_weight),
            TapeInner::Cayley(t) => t.pullback(upsilon_bar, adjust_weight),
            TapeInner::Givens(t) => t.pullback(upsilon_bar, adjust_weight),
        }
    }
}

/// Sign with `sgn(0) = +1`.
#[inline]
pub(crate) fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}
