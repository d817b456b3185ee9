//! Lifetime distributions and their pointwise functions.
//!
//! | Law | Survival Φ(t) | Tail behaviour |
//! |---|---|---|
//! | [`GompertzParams`] | `exp(-η(e^{bt} - 1))` | faster than exponential |
//! | [`MakehamParams`] | `exp(-λt - η(e^{bt} - 1))` | faster than exponential |
//! | Normal(μ, σ) | `erfc((t-μ)/(σ√2)) / 2` | faster than exponential |
//! | Exponential(rate) | `exp(-rate·t)` | exponential |
//! | UniformBounded(t0) | `1 - t/t0` on `[0, t0)` | finite support |
//!
//! Tail quantities are computed from the log-survival function; plain
//! survival is its exponential. The normal law is defined on the whole real
//! line, so its `Φ(0)` is slightly below one: it is here to study the
//! far-tail limit, not as a realistic model of ages near birth.

mod gompertz;
mod sampling;

pub use gompertz::{eta_to_b, mode_to_eta, GompertzParams, MakehamParams};
pub use sampling::{sample, LifetimeSample, SAMPLER_PRNG};

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::fmt;

use crate::numeric::{bisect_predicate, ln_erfc};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("age must be a finite non-negative number, got {0}")]
    NegativeAge(f64),
    #[error("probability must lie strictly between 0 and 1, got {0}")]
    ProbabilityOutOfRange(f64),
    #[error("hazard undefined at age {0}: survival is zero")]
    UndefinedHazard(f64),
    #[error("eta = {eta} has no positive mode (need 0 < eta < 1)")]
    NoPositiveMode { eta: f64 },
    #[error("conditioning on extinct cohort: survival to age {0} is zero")]
    NullEvent(f64),
    #[error("quantile {0} falls below age 0 for this law")]
    QuantileBelowSupport(f64),
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("sample values must be finite and non-negative, got {0}")]
    InvalidSampleValue(f64),
}

/// Anything with a log-survival function can be bet on and tail-classified.
///
/// [`DistributionSpec`] is the shipped implementor; tests add heavy-tailed
/// laws through the same trait.
pub trait SurvivalCurve {
    /// `ln Φ(t)`; `-∞` exactly where the survival is zero.
    fn log_survival(&self, t: f64) -> Result<f64, ModelError>;

    /// `ln(Φ(t + dt) / Φ(t))`.
    fn log_conditional_survival(&self, t: f64, dt: f64) -> Result<f64, ModelError> {
        let here = self.log_survival(t)?;
        if here == f64::NEG_INFINITY {
            return Err(ModelError::NullEvent(t));
        }
        Ok(self.log_survival(t + dt)? - here)
    }

    /// Characteristic age where tail scans begin.
    fn location_scale(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalParams {
    mu: f64,
    sigma: f64,
}

impl NormalParams {
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn z(&self, t: f64) -> f64 {
        (t - self.mu) / self.sigma
    }

    fn log_survival(&self, t: f64) -> f64 {
        -LN_2 + ln_erfc(self.z(t) / SQRT_2)
    }

    fn log_pdf(&self, t: f64) -> f64 {
        let z = self.z(t);
        -0.5 * z * z - (self.sigma * (2.0 * PI).sqrt()).ln()
    }

    fn cdf(&self, t: f64) -> f64 {
        0.5 * libm::erfc(-self.z(t) / SQRT_2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialParams {
    rate: f64,
}

impl ExponentialParams {
    pub fn rate(&self) -> f64 {
        self.rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformParams {
    t0: f64,
}

impl UniformParams {
    pub fn t0(&self) -> f64 {
        self.t0
    }
}

/// One supported lifetime law with validated parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    Gompertz(GompertzParams),
    GompertzMakeham(MakehamParams),
    Normal(NormalParams),
    Exponential(ExponentialParams),
    UniformBounded(UniformParams),
}

impl DistributionSpec {
    pub fn gompertz(eta: f64, b: f64) -> Result<Self, ModelError> {
        GompertzParams::new(eta, b).map(Self::Gompertz)
    }

    pub fn makeham(lambda: f64, eta: f64, b: f64) -> Result<Self, ModelError> {
        MakehamParams::new(lambda, GompertzParams::new(eta, b)?).map(Self::GompertzMakeham)
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self, ModelError> {
        if !mu.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "mu",
                value: mu,
                reason: "must be finite",
            });
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "sigma",
                value: sigma,
                reason: "must be a finite positive number",
            });
        }
        Ok(Self::Normal(NormalParams { mu, sigma }))
    }

    pub fn exponential(rate: f64) -> Result<Self, ModelError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "rate",
                value: rate,
                reason: "must be a finite positive number",
            });
        }
        Ok(Self::Exponential(ExponentialParams { rate }))
    }

    pub fn uniform_bounded(t0: f64) -> Result<Self, ModelError> {
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "t0",
                value: t0,
                reason: "must be a finite positive age",
            });
        }
        Ok(Self::UniformBounded(UniformParams { t0 }))
    }

    /// Short lowercase law name, as used on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Gompertz(_) => "gompertz",
            Self::GompertzMakeham(_) => "makeham",
            Self::Normal(_) => "normal",
            Self::Exponential(_) => "exponential",
            Self::UniformBounded(_) => "uniform",
        }
    }

    /// `(name, value)` pairs of the law's parameters.
    pub fn parameters(&self) -> Vec<(&'static str, f64)> {
        match self {
            Self::Gompertz(g) => vec![("eta", g.eta()), ("b", g.b())],
            Self::GompertzMakeham(m) => vec![
                ("lambda", m.lambda()),
                ("eta", m.gompertz().eta()),
                ("b", m.gompertz().b()),
            ],
            Self::Normal(n) => vec![("mu", n.mu), ("sigma", n.sigma)],
            Self::Exponential(e) => vec![("rate", e.rate)],
            Self::UniformBounded(u) => vec![("t0", u.t0)],
        }
    }

    pub fn survival(&self, t: f64) -> Result<f64, ModelError> {
        if let Self::UniformBounded(u) = self {
            check_age(t)?;
            return Ok((1.0 - t / u.t0).max(0.0));
        }
        Ok(self.log_survival(t)?.exp())
    }

    pub fn log_survival(&self, t: f64) -> Result<f64, ModelError> {
        check_age(t)?;
        Ok(match self {
            Self::Gompertz(g) => g.log_survival(t),
            Self::GompertzMakeham(m) => m.log_survival(t),
            Self::Normal(n) => n.log_survival(t),
            Self::Exponential(e) => -e.rate * t,
            Self::UniformBounded(u) => {
                if t >= u.t0 {
                    f64::NEG_INFINITY
                } else {
                    (-t / u.t0).ln_1p()
                }
            }
        })
    }

    /// `ln(Φ(t+dt)/Φ(t))` through a law-specific route that stays accurate
    /// for tiny windows (`e^{b·dt} - 1` goes through `expm1`).
    pub fn log_conditional_survival(&self, t: f64, dt: f64) -> Result<f64, ModelError> {
        check_age(t)?;
        check_age(dt)?;
        match self {
            Self::Gompertz(g) => Ok(g.log_conditional_survival(t, dt)),
            Self::GompertzMakeham(m) => Ok(m.log_conditional_survival(t, dt)),
            Self::Exponential(e) => Ok(-e.rate * dt),
            Self::UniformBounded(u) => {
                if t >= u.t0 {
                    Err(ModelError::NullEvent(t))
                } else if t + dt >= u.t0 {
                    Ok(f64::NEG_INFINITY)
                } else {
                    Ok((-dt / (u.t0 - t)).ln_1p())
                }
            }
            Self::Normal(n) => {
                let here = n.log_survival(t);
                if here == f64::NEG_INFINITY {
                    return Err(ModelError::NullEvent(t));
                }
                Ok(n.log_survival(t + dt) - here)
            }
        }
    }

    pub fn cdf(&self, t: f64) -> Result<f64, ModelError> {
        match self {
            Self::Normal(n) => {
                check_age(t)?;
                Ok(n.cdf(t))
            }
            Self::UniformBounded(u) => {
                check_age(t)?;
                Ok((t / u.t0).min(1.0))
            }
            _ => Ok(-self.log_survival(t)?.exp_m1()),
        }
    }

    pub fn pdf(&self, t: f64) -> Result<f64, ModelError> {
        check_age(t)?;
        Ok(match self {
            Self::Gompertz(g) => g.pdf(t),
            Self::GompertzMakeham(m) => m.pdf(t),
            Self::Normal(n) => n.log_pdf(t).exp(),
            Self::Exponential(e) => e.rate * (-e.rate * t).exp(),
            Self::UniformBounded(u) => {
                if t < u.t0 {
                    1.0 / u.t0
                } else {
                    0.0
                }
            }
        })
    }

    /// Force of mortality `pdf / Φ`.
    pub fn hazard(&self, t: f64) -> Result<f64, ModelError> {
        check_age(t)?;
        match self {
            Self::Gompertz(g) => Ok(g.hazard(t)),
            Self::GompertzMakeham(m) => Ok(m.hazard(t)),
            Self::Exponential(e) => Ok(e.rate),
            Self::UniformBounded(u) => {
                if t >= u.t0 {
                    Err(ModelError::UndefinedHazard(t))
                } else {
                    Ok(1.0 / (u.t0 - t))
                }
            }
            Self::Normal(n) => {
                let ls = n.log_survival(t);
                if ls == f64::NEG_INFINITY {
                    Err(ModelError::UndefinedHazard(t))
                } else {
                    Ok((n.log_pdf(t) - ls).exp())
                }
            }
        }
    }

    /// Inverse of [`cdf`](Self::cdf) on `(0, 1)`.
    ///
    /// Gompertz, exponential and uniform laws use closed forms; Makeham and
    /// normal laws use bracketed bisection down to floating-point resolution.
    pub fn quantile(&self, u: f64) -> Result<f64, ModelError> {
        if !(u > 0.0 && u < 1.0) {
            return Err(ModelError::ProbabilityOutOfRange(u));
        }
        Ok(match self {
            Self::Gompertz(g) => g.quantile(u),
            Self::GompertzMakeham(m) => m.quantile(u),
            Self::Exponential(e) => -(-u).ln_1p() / e.rate,
            Self::UniformBounded(p) => u * p.t0,
            Self::Normal(n) => {
                if u <= n.cdf(0.0) {
                    return Err(ModelError::QuantileBelowSupport(u));
                }
                let mut hi = (n.mu + 40.0 * n.sigma).max(1.0);
                while n.cdf(hi) < u {
                    hi *= 2.0;
                }
                let (lo, hi) = bisect_predicate(0.0, hi, 0.0, |t| n.cdf(t) >= u);
                0.5 * (lo + hi)
            }
        })
    }

    /// Age of peak density. Flat or decreasing densities report 0.
    pub fn mode(&self) -> f64 {
        match self {
            Self::Gompertz(g) => g.mode(),
            Self::GompertzMakeham(m) => m.mode(),
            Self::Normal(n) => n.mu.max(0.0),
            Self::Exponential(_) | Self::UniformBounded(_) => 0.0,
        }
    }

    /// Inverse-transform sample of `n` lifetimes; see [`sample`].
    pub fn sample(&self, n: usize, seed: u64) -> Result<LifetimeSample, ModelError> {
        sample(self, n, seed)
    }
}

impl SurvivalCurve for DistributionSpec {
    fn log_survival(&self, t: f64) -> Result<f64, ModelError> {
        DistributionSpec::log_survival(self, t)
    }

    fn log_conditional_survival(&self, t: f64, dt: f64) -> Result<f64, ModelError> {
        DistributionSpec::log_conditional_survival(self, t, dt)
    }

    fn location_scale(&self) -> f64 {
        match self {
            Self::Gompertz(g) => gompertz_scale(g),
            Self::GompertzMakeham(m) => gompertz_scale(m.gompertz()),
            Self::Normal(n) => n.mu.max(n.sigma),
            Self::Exponential(e) => 1.0 / e.rate,
            Self::UniformBounded(u) => 0.5 * u.t0,
        }
    }
}

fn gompertz_scale(g: &GompertzParams) -> f64 {
    let mode = g.mode();
    if mode > 0.0 {
        mode
    } else {
        1.0 / g.b()
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name())?;
        for (i, (name, value)) in self.parameters().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{name}={value}")?;
        }
        write!(f, ")")
    }
}

fn check_age(t: f64) -> Result<(), ModelError> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NegativeAge(t))
    }
}
