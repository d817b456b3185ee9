//! Gompertz and Gompertz–Makeham parameter estimation.
//!
//! Samples of ages at death are fitted by maximum likelihood; life tables by
//! weighted least squares on the log of the one-year integrated hazard
//! `-ln(1 - qx)`. Both optimize in log-parameter space, so every iterate is a
//! valid parameter set.
//!
//! `gradient_norm` is always the Euclidean norm of the objective's gradient
//! per observation (the log-likelihood divided by the sample size, or the
//! weighted mean squared residual), so one tolerance suits every input size.

mod mle;
mod table;

pub use mle::{fit_gompertz_mle, loglik_gompertz, loglik_gradient};
pub use table::{fit_gompertz_from_lifetable, fit_makeham_from_lifetable};

use crate::models::{DistributionSpec, GompertzParams, MakehamParams, ModelError};

pub const MIN_SAMPLE_SIZE: usize = 10;
pub const MIN_TABLE_ROWS: usize = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("need at least {required} usable observations, got {available}")]
    InsufficientData { available: usize, required: usize },
    #[error("degenerate sample: every value equals {0}")]
    DegenerateSample(f64),
    #[error("log-likelihood overflows at eta = {eta}, b = {b}: eta e^(b x) exceeds the floating-point range")]
    Overflow { eta: f64, b: f64 },
    #[error("invalid fit configuration {name}: {reason}")]
    InvalidConfig { name: &'static str, reason: &'static str },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Starting point; derived from the data when `None`.
    pub initial_params: Option<GompertzParams>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            gradient_tolerance: 1e-8,
            initial_params: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        if self.max_iterations < 1 {
            return Err(FitError::InvalidConfig {
                name: "max_iterations",
                reason: "must be at least 1",
            });
        }
        if !(self.gradient_tolerance > 0.0 && self.gradient_tolerance.is_finite()) {
            return Err(FitError::InvalidConfig {
                name: "gradient_tolerance",
                reason: "must be a finite positive number",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FittedParams {
    Gompertz(GompertzParams),
    Makeham(MakehamParams),
}

impl FittedParams {
    pub fn gompertz(&self) -> &GompertzParams {
        match self {
            Self::Gompertz(g) => g,
            Self::Makeham(m) => m.gompertz(),
        }
    }

    /// Age-independent hazard; zero for a pure Gompertz fit.
    pub fn lambda(&self) -> f64 {
        match self {
            Self::Gompertz(_) => 0.0,
            Self::Makeham(m) => m.lambda(),
        }
    }

    pub fn mode(&self) -> f64 {
        match self {
            Self::Gompertz(g) => g.mode(),
            Self::Makeham(m) => m.mode(),
        }
    }

    pub fn spec(&self) -> DistributionSpec {
        match *self {
            Self::Gompertz(g) => DistributionSpec::Gompertz(g),
            Self::Makeham(m) => DistributionSpec::GompertzMakeham(m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitWarning {
    /// The fitted hazard changes by less than 0.1% across the table's age
    /// span: the data look age-independent and `b` is not meaningful.
    FlatHazard,
}

impl std::fmt::Display for FitWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::FlatHazard => f.write_str("hazard barely changes with age; b is near zero"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: FittedParams,
    /// Log-likelihood for samples; `-½ Σ w r²` over log-hazard residuals for
    /// life tables.
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Weighted RMS of log-hazard residuals (life-table fits only).
    pub residual_rms: Option<f64>,
    /// Sample size, or number of table rows used.
    pub observations: usize,
    pub warnings: Vec<FitWarning>,
}
