//! The survival bet: will a person aged `t` live another `Δt` years?
//!
//! The win probability is the conditional survival `Φ(t+Δt)/Φ(t)`. For a
//! Gompertz law it has the closed form `exp(-η e^{bt} (e^{bΔt} - 1))`, which
//! inverts to the age at which the bet is won with a given probability:
//!
//! ```text
//! t = (1/b) · ln( -ln p / (η (e^{bΔt} - 1)) )
//! ```

mod tail;

pub use tail::{classify_tail, ClassifyConfig, RatioSample, TailCase, TailClass};

use crate::models::{GompertzParams, ModelError, SurvivalCurve};
use crate::numeric::bisect_predicate;

/// Default age limit for the numerical searches below, in years.
pub const DEFAULT_HORIZON: f64 = 5000.0;

/// Buffon's threshold: events this unlikely may be disregarded.
pub const BUFFON_DISREGARD_PROBABILITY: f64 = 1.0 / 10_000.0;

/// Buffon's odds against a 56-year-old dying within a day, read off
/// 18th-century tables. Reported for comparison only.
pub const BUFFON_HISTORICAL_ODDS: f64 = 10_189.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BetError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid {name} = {value}: {reason}")]
    InvalidQuery {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("tail behaviour is inconclusive within the horizon ({} ratios examined)", evidence.len())]
    Indeterminate { evidence: Vec<RatioSample> },
    #[error("win probability never drops below {epsilon} before age {horizon} (last ratio {last_ratio})")]
    UnreachableEpsilon {
        epsilon: f64,
        horizon: f64,
        last_ratio: f64,
    },
    #[error("even a newborn wins the bet with probability below {p}")]
    ThresholdBeforeBirth { p: f64 },
}

/// A `t`-year-old surviving another `delta_t` years.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetQuery {
    t: f64,
    delta_t: f64,
}

impl BetQuery {
    pub fn new(t: f64, delta_t: f64) -> Result<Self, BetError> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(BetError::InvalidQuery {
                name: "t",
                value: t,
                reason: "age must be finite and non-negative",
            });
        }
        check_window(delta_t)?;
        Ok(Self { t, delta_t })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }
}

/// Target win probability `p` for a window `delta_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdQuery {
    delta_t: f64,
    p: f64,
}

impl ThresholdQuery {
    pub fn new(delta_t: f64, p: f64) -> Result<Self, BetError> {
        check_window(delta_t)?;
        check_probability("p", p)?;
        Ok(Self { delta_t, p })
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// Result of [`threshold_age`]. Negative ages are kept as computed;
/// `before_birth` flags them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdAge {
    pub years: f64,
    pub before_birth: bool,
}

fn check_window(delta_t: f64) -> Result<(), BetError> {
    if delta_t > 0.0 && delta_t.is_finite() {
        Ok(())
    } else {
        Err(BetError::InvalidQuery {
            name: "delta_t",
            value: delta_t,
            reason: "window must be finite and positive",
        })
    }
}

fn check_probability(name: &'static str, p: f64) -> Result<(), BetError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(BetError::InvalidQuery {
            name,
            value: p,
            reason: "probability must lie strictly between 0 and 1",
        })
    }
}

/// Probability of winning the bet, `Φ(t+Δt)/Φ(t)`.
pub fn conditional_survival<L: SurvivalCurve + ?Sized>(
    law: &L,
    q: BetQuery,
) -> Result<f64, BetError> {
    Ok(law.log_conditional_survival(q.t, q.delta_t)?.exp())
}

/// Closed-form age at which a Gompertz bet is won with probability `q.p`.
pub fn threshold_age(params: &GompertzParams, q: ThresholdQuery) -> ThresholdAge {
    let window = (params.b() * q.delta_t).exp_m1();
    let years = ((-q.p.ln()).ln() - params.ln_eta() - window.ln()) / params.b();
    ThresholdAge {
        years,
        before_birth: years < 0.0,
    }
}

/// Age at which the win probability falls to `q.p`, found by bisection.
///
/// Works for any law whose conditional survival decreases with age; it is
/// the cross-check for [`threshold_age`] and the route for non-Gompertz
/// laws. Only ages `t ≥ 0` are searched.
pub fn threshold_age_bisect<L: SurvivalCurve + ?Sized>(
    law: &L,
    q: ThresholdQuery,
) -> Result<f64, BetError> {
    let at_or_below = |t: f64| -> Result<bool, BetError> {
        match law.log_conditional_survival(t, q.delta_t) {
            Ok(lcs) => Ok(lcs.exp() <= q.p),
            Err(ModelError::NullEvent(_)) => Ok(true),
            Err(e) => Err(e.into()),
        }
    };
    if at_or_below(0.0)? {
        return Err(BetError::ThresholdBeforeBirth { p: q.p });
    }
    let hi = bracket(law, DEFAULT_HORIZON, &at_or_below)?
        .ok_or_else(|| unreachable_error(law, q.delta_t, q.p))?;
    let (lo, hi) = bisect_predicate(0.0, hi, 1e-10, |t| at_or_below(t).unwrap_or(true));
    Ok(0.5 * (lo + hi))
}

/// Smallest age on a 0.01-year grid at which the bet is lost with
/// probability above `1 - epsilon`, i.e. `Φ(t+Δt)/Φ(t) < ε`.
///
/// Laws whose conditional survival never drops below `epsilon` (the
/// exponential, for `ε` under its constant ratio) give
/// [`BetError::UnreachableEpsilon`].
pub fn epsilon_age<L: SurvivalCurve + ?Sized>(
    law: &L,
    delta_t: f64,
    epsilon: f64,
) -> Result<f64, BetError> {
    check_window(delta_t)?;
    check_probability("epsilon", epsilon)?;
    let below = |t: f64| -> Result<bool, BetError> {
        match law.log_conditional_survival(t, delta_t) {
            Ok(lcs) => Ok(lcs.exp() < epsilon),
            Err(ModelError::NullEvent(_)) => Ok(true),
            Err(e) => Err(e.into()),
        }
    };
    if below(0.0)? {
        return Ok(0.0);
    }
    let hi = bracket(law, DEFAULT_HORIZON, &below)?
        .ok_or_else(|| unreachable_error(law, delta_t, epsilon))?;
    let (lo, _) = bisect_predicate(0.0, hi, 1e-9, |t| below(t).unwrap_or(true));

    let mut cents = (lo * 100.0).ceil() as i64;
    let age = |c: i64| c as f64 / 100.0;
    while !below(age(cents))? {
        cents += 1;
    }
    while cents > 0 && below(age(cents - 1))? {
        cents -= 1;
    }
    Ok(age(cents))
}

/// Expand from the law's location scale until `is_past` holds, doubling up
/// to `horizon`. `None` when it never does.
fn bracket<L, F>(law: &L, horizon: f64, mut is_past: F) -> Result<Option<f64>, BetError>
where
    L: SurvivalCurve + ?Sized,
    F: FnMut(f64) -> Result<bool, BetError>,
{
    let mut t = law.location_scale().clamp(1e-3, horizon);
    loop {
        if is_past(t)? {
            return Ok(Some(t));
        }
        if t >= horizon {
            return Ok(None);
        }
        t = (2.0 * t).min(horizon);
    }
}

fn unreachable_error<L: SurvivalCurve + ?Sized>(law: &L, delta_t: f64, epsilon: f64) -> BetError {
    let last_ratio = law
        .log_conditional_survival(DEFAULT_HORIZON, delta_t)
        .map(f64::exp)
        .unwrap_or(0.0);
    BetError::UnreachableEpsilon {
        epsilon,
        horizon: DEFAULT_HORIZON,
        last_ratio,
    }
}

/// Odds against an event, `(1 - d)/d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Odds {
    Finite(f64),
    /// The event has probability zero.
    Infinite,
}

impl Odds {
    pub fn against(probability: f64) -> Self {
        if probability == 0.0 {
            Odds::Infinite
        } else {
            Odds::Finite((1.0 - probability) / probability)
        }
    }
}

/// Odds against dying within `window` years at `age`, set against Buffon's
/// disregard threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuffonOdds {
    pub death_probability: f64,
    pub odds_against: Odds,
    /// `death_probability ≤ 1/10000`.
    pub disregardable: bool,
}

pub fn buffon_odds<L: SurvivalCurve + ?Sized>(
    law: &L,
    age: f64,
    window: f64,
) -> Result<BuffonOdds, BetError> {
    let q = BetQuery::new(age, window)?;
    let lcs = law.log_conditional_survival(q.t, q.delta_t)?;
    let death = -lcs.exp_m1();
    let odds_against = if death == 0.0 {
        Odds::Infinite
    } else {
        Odds::Finite(lcs.exp() / death)
    };
    Ok(BuffonOdds {
        death_probability: death,
        odds_against,
        disregardable: death <= BUFFON_DISREGARD_PROBABILITY,
    })
}
