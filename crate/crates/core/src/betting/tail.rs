//! Empirical classification of how fast `Φ(t)` vanishes.
//!
//! The ratio `r(t) = Φ(t+Δt)/Φ(t)` is scanned on a geometric age grid:
//!
//! - survival hits exactly zero at finite age → [`TailCase::FiniteSupport`]
//! - `r(t)` keeps falling towards 0 → [`TailCase::FasterThanExponential`]
//! - `r(t)` settles at a constant in `(0, 1)` → [`TailCase::Exponential`]
//! - `r(t)` climbs towards 1 → [`TailCase::SlowerThanExponential`]

use super::BetError;
use crate::models::{ModelError, SurvivalCurve};
use crate::numeric::bisect_predicate;

const GRID_FACTOR: f64 = 1.25;
/// Roughly one decade of the grid (1.25^10 ≈ 9.3).
const DECADE_POINTS: usize = 10;
/// A survival that drops to exactly zero from above `e^{-1e6}` is a support
/// edge; overflowing log-survival of an unbounded law approaches zero from
/// values near `-f64::MAX` instead.
const SUPPORT_EDGE_LOG_SURVIVAL: f64 = -1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TailCase {
    FiniteSupport,
    FasterThanExponential,
    Exponential,
    SlowerThanExponential,
}

impl TailCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            TailCase::FiniteSupport => "FiniteSupport",
            TailCase::FasterThanExponential => "FasterThanExponential",
            TailCase::Exponential => "Exponential",
            TailCase::SlowerThanExponential => "SlowerThanExponential",
        }
    }
}

impl std::fmt::Display for TailCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSample {
    pub t: f64,
    pub ratio: f64,
    /// `ln ratio`, exact even where the ratio rounds to 1 or 0.
    pub log_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailClass {
    pub case: TailCase,
    /// Ratios examined, in increasing age. Never empty.
    pub evidence: Vec<RatioSample>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyConfig {
    pub horizon: f64,
    pub tol: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            horizon: super::DEFAULT_HORIZON,
            tol: 1e-3,
        }
    }
}

pub fn classify_tail<L: SurvivalCurve + ?Sized>(
    law: &L,
    delta_t: f64,
    config: ClassifyConfig,
) -> Result<TailClass, BetError> {
    super::check_window(delta_t)?;
    let ClassifyConfig { horizon, tol } = config;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(BetError::InvalidQuery {
            name: "horizon",
            value: horizon,
            reason: "must be a finite positive age",
        });
    }
    if !(tol > 0.0 && tol < 0.1) {
        return Err(BetError::InvalidQuery {
            name: "tol",
            value: tol,
            reason: "must lie in (0, 0.1)",
        });
    }

    let grid = age_grid(law.location_scale(), horizon);

    if let Some(edge) = support_edge(law, horizon)? {
        let mut evidence = scan(law, delta_t, grid.iter().copied().filter(|&t| t < edge))?;
        if evidence.is_empty() {
            let t = 0.5 * edge;
            let log_ratio = law.log_conditional_survival(t, delta_t)?;
            evidence.push(RatioSample {
                t,
                ratio: log_ratio.exp(),
                log_ratio,
            });
        }
        return Ok(TailClass {
            case: TailCase::FiniteSupport,
            evidence,
        });
    }

    let evidence = scan(law, delta_t, grid.into_iter())?;
    let case = decide(&evidence, tol);
    match case {
        Some(case) => Ok(TailClass { case, evidence }),
        None => Err(BetError::Indeterminate { evidence }),
    }
}

fn age_grid(scale: f64, horizon: f64) -> Vec<f64> {
    let start = if scale.is_finite() && scale > 0.0 {
        scale.min(horizon)
    } else {
        1.0f64.min(horizon)
    };
    let mut grid = Vec::new();
    let mut t = start;
    while t < horizon {
        grid.push(t);
        t *= GRID_FACTOR;
    }
    grid.push(horizon);
    grid
}

/// Age where the survival drops to exactly zero, if it does so from a
/// non-negligible value before `horizon`.
fn support_edge<L: SurvivalCurve + ?Sized>(law: &L, horizon: f64) -> Result<Option<f64>, BetError> {
    if law.log_survival(horizon)? != f64::NEG_INFINITY {
        return Ok(None);
    }
    if law.log_survival(0.0)? == f64::NEG_INFINITY {
        return Ok(Some(0.0));
    }
    let (lo, hi) = bisect_predicate(0.0, horizon, 0.0, |t| {
        law.log_survival(t).map_or(true, |ls| ls == f64::NEG_INFINITY)
    });
    if law.log_survival(lo)? > SUPPORT_EDGE_LOG_SURVIVAL {
        Ok(Some(hi))
    } else {
        Ok(None)
    }
}

fn scan<L, I>(law: &L, delta_t: f64, ages: I) -> Result<Vec<RatioSample>, BetError>
where
    L: SurvivalCurve + ?Sized,
    I: Iterator<Item = f64>,
{
    let mut evidence = Vec::new();
    for t in ages {
        let log_ratio = match law.log_conditional_survival(t, delta_t) {
            Ok(lcs) => lcs,
            Err(ModelError::NullEvent(_)) => break,
            Err(e) => return Err(e.into()),
        };
        let ratio = log_ratio.exp();
        evidence.push(RatioSample { t, ratio, log_ratio });
        // Once the ratio underflows there is nothing left to learn.
        if ratio == 0.0 {
            break;
        }
    }
    Ok(evidence)
}

fn decide(evidence: &[RatioSample], tol: f64) -> Option<TailCase> {
    let last = evidence.last()?.ratio;
    let tail: Vec<f64> = evidence
        .iter()
        .rev()
        .take(DECADE_POINTS)
        .rev()
        .map(|s| s.ratio)
        .collect();
    let non_increasing = tail.windows(2).all(|w| w[1] <= w[0]);
    let strictly_increasing = tail.windows(2).all(|w| w[1] > w[0]);

    // A constant ratio, judged on its logarithm so that ratios near 1 (short
    // windows, small rates) or near 0 are still measured to full precision.
    if tail.len() == DECADE_POINTS {
        let logs: Vec<f64> = evidence[evidence.len() - DECADE_POINTS..].iter().map(|s| s.log_ratio).collect();
        let last_log = logs[DECADE_POINTS - 1];
        if last_log < 0.0 && last_log.is_finite() {
            let (lo, hi) = logs
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)));
            if (hi - lo) / -last_log < tol {
                return Some(TailCase::Exponential);
            }
        }
    }
    if last < tol && non_increasing && (tail.len() == 1 || tail[0] > last) {
        return Some(TailCase::FasterThanExponential);
    }
    if last > 1.0 - tol && tail.len() > 1 && strictly_increasing {
        return Some(TailCase::SlowerThanExponential);
    }
    None
}
