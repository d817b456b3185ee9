//! The St. Petersburg game: a fair coin is tossed until it lands heads; after
//! `t` tails the player wins `2^{t+1}`. Every outcome contributes exactly 1 to
//! the expectation, so the untruncated game has none, yet a typical game pays
//! 2 or 4.
//!
//! Exact quantities use big integers and rationals. Simulation draws one bit
//! per flip from a seeded ChaCha8 stream.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use crate::models::SAMPLER_PRNG;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("max_flips must be at least 1")]
    ZeroFlips,
    #[error("bankroll cap must be at least 1")]
    ZeroCap,
    #[error("n_games must be at least 1")]
    NoGames,
    #[error("workers must be at least 1")]
    NoWorkers,
}

/// At most one truncation applies, so the variants are exclusive by
/// construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GameConfig {
    /// The casino has unlimited resources.
    Unlimited,
    /// If no heads shows within `max_flips` tosses the game pays 0.
    MaxFlips(u32),
    /// Payoffs are capped at the casino's bankroll.
    BankrollCap(BigUint),
}

impl GameConfig {
    pub fn max_flips(n: u32) -> Result<Self, GameError> {
        if n == 0 {
            return Err(GameError::ZeroFlips);
        }
        Ok(Self::MaxFlips(n))
    }

    pub fn bankroll_cap(cap: BigUint) -> Result<Self, GameError> {
        if cap.is_zero() {
            return Err(GameError::ZeroCap);
        }
        Ok(Self::BankrollCap(cap))
    }

    /// Cap of `2^m`.
    pub fn cap_power(m: u32) -> Self {
        Self::BankrollCap(pow2(m))
    }

    /// Payoff of a game that showed heads after `tails` tails.
    pub fn payoff(&self, tails: u32) -> BigUint {
        let raw = pow2(tails + 1);
        match self {
            Self::BankrollCap(cap) if raw > *cap => cap.clone(),
            _ => raw,
        }
    }
}

fn pow2(k: u32) -> BigUint {
    BigUint::one() << k
}

fn half_pow(k: u32) -> BigRational {
    BigRational::new(1.into(), pow2(k).into())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameOutcome {
    pub tails: u32,
    /// False when a truncated game ran out of tosses.
    pub heads: bool,
    pub payoff: BigUint,
}

/// Exact expectation, or the marker for an infinite one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExpectedGain {
    Finite(BigRational),
    Diverges,
}

impl std::fmt::Display for ExpectedGain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Finite(v) => write!(f, "{v}"),
            Self::Diverges => f.write_str("diverges"),
        }
    }
}

/// Every outcome of a game limited to `max_flips` tosses, with its exact
/// probability.
pub fn outcome_distribution(max_flips: u32) -> Result<Vec<(GameOutcome, BigRational)>, GameError> {
    let config = GameConfig::max_flips(max_flips)?;
    let mut out: Vec<(GameOutcome, BigRational)> = (0..max_flips)
        .map(|t| {
            let outcome = GameOutcome {
                tails: t,
                heads: true,
                payoff: config.payoff(t),
            };
            (outcome, half_pow(t + 1))
        })
        .collect();
    out.push((
        GameOutcome {
            tails: max_flips,
            heads: false,
            payoff: BigUint::zero(),
        },
        half_pow(max_flips),
    ));
    Ok(out)
}

/// Expected payoff when the game stops after `n` tosses.
pub fn expected_gain_truncated(n: u32) -> Result<BigRational, GameError> {
    Ok(outcome_distribution(n)?
        .into_iter()
        .map(|(o, p)| BigRational::from_integer(o.payoff.into()) * p)
        .sum())
}

/// Expected payoff when payoffs are capped at `cap`.
///
/// The `k` outcomes paying at most `cap` each contribute 1, and every later
/// outcome pays `cap`, adding `cap · 2^{-k}` in total.
pub fn expected_gain_capped(cap: &BigUint) -> Result<BigRational, GameError> {
    if cap.is_zero() {
        return Err(GameError::ZeroCap);
    }
    let config = GameConfig::BankrollCap(cap.clone());
    let mut sum = BigRational::zero();
    let mut t = 0;
    while pow2(t + 1) <= *cap {
        sum += BigRational::from_integer(config.payoff(t).into()) * half_pow(t + 1);
        t += 1;
    }
    Ok(sum + BigRational::from_integer(cap.clone().into()) * half_pow(t))
}

pub fn expected_gain(config: &GameConfig) -> ExpectedGain {
    match config {
        GameConfig::Unlimited => ExpectedGain::Diverges,
        // The constructors reject zero; a hand-built zero is the empty game.
        GameConfig::MaxFlips(n) => ExpectedGain::Finite(expected_gain_truncated(*n).unwrap_or_else(|_| BigRational::zero())),
        GameConfig::BankrollCap(cap) => {
            ExpectedGain::Finite(expected_gain_capped(cap).unwrap_or_else(|_| BigRational::zero()))
        }
    }
}

/// `P(payoff > x)` in the unlimited game: `2^{-⌊log₂ x⌋}` for `x ≥ 1`.
pub fn prob_payoff_exceeds(x: &BigUint) -> BigRational {
    if x.is_zero() {
        return BigRational::one();
    }
    half_pow((x.bits() - 1) as u32)
}

/// `P(payoff ≥ x)` in the unlimited game.
pub fn prob_payoff_at_least(x: &BigUint) -> BigRational {
    if x.is_zero() {
        return BigRational::one();
    }
    prob_payoff_exceeds(&(x - 1u32))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MedianAnalysis {
    /// Smallest payoff `m` with `P(payoff ≤ m) ≥ 1/2`.
    pub lower_median: BigUint,
    /// Largest payoff `m` with `P(payoff ≥ m) ≥ 1/2`.
    pub upper_median: BigUint,
    /// Chance a single game pays $32 or more.
    pub p_at_least_32: BigRational,
}

/// Medians of a single unlimited game's payoff.
pub fn median_payoff_analysis() -> MedianAnalysis {
    let half = BigRational::new(1.into(), 2.into());
    let mut t = 0;
    while BigRational::one() - prob_payoff_exceeds(&pow2(t + 1)) < half {
        t += 1;
    }
    let lower_median = pow2(t + 1);
    let mut u = t;
    while prob_payoff_at_least(&pow2(u + 2)) >= half {
        u += 1;
    }
    MedianAnalysis {
        lower_median,
        upper_median: pow2(u + 1),
        p_at_least_32: prob_payoff_at_least(&BigUint::from(32u32)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub n_games: u64,
    pub seed: u64,
    pub workers: usize,
    /// Games that ended in heads, by number of preceding tails.
    pub histogram: BTreeMap<u32, u64>,
    /// Truncated games that never showed heads.
    pub busts: u64,
    pub total_payoff: BigUint,
    pub max_payoff: BigUint,
    pub mean: f64,
    /// Standard error of the mean from the sample variance; `None` for a
    /// single game.
    pub std_error: Option<f64>,
}

impl SimulationSummary {
    pub fn mean_exact(&self) -> BigRational {
        BigRational::new(self.total_payoff.clone().into(), self.n_games.into())
    }

    /// Fraction of games ending after exactly `tails` tails.
    pub fn frequency(&self, tails: u32) -> f64 {
        self.histogram.get(&tails).copied().unwrap_or(0) as f64 / self.n_games as f64
    }

    pub fn generator(&self) -> &'static str {
        SAMPLER_PRNG
    }
}

/// Fair-coin flips, one bit of the stream per flip.
struct Coin {
    rng: ChaCha8Rng,
    bits: u64,
    left: u32,
}

impl Coin {
    fn heads(&mut self) -> bool {
        if self.left == 0 {
            self.bits = self.rng.next_u64();
            self.left = 64;
        }
        let bit = self.bits & 1 == 1;
        self.bits >>= 1;
        self.left -= 1;
        bit
    }
}

/// Plays `n_games` games split evenly over `workers` threads.
///
/// Worker `w` draws from stream `w` of the generator seeded with `seed`, so
/// the summary is a pure function of `(config, n_games, seed, workers)`.
pub fn simulate(config: &GameConfig, n_games: u64, seed: u64, workers: usize) -> Result<SimulationSummary, GameError> {
    if n_games == 0 {
        return Err(GameError::NoGames);
    }
    if workers == 0 {
        return Err(GameError::NoWorkers);
    }
    if let GameConfig::MaxFlips(0) = config {
        return Err(GameError::ZeroFlips);
    }
    let limit = match config {
        GameConfig::MaxFlips(n) => Some(*n),
        _ => None,
    };
    let w = workers as u64;
    let shards: Vec<(BTreeMap<u32, u64>, u64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..w)
            .map(|k| {
                let games = (k + 1) * n_games / w - k * n_games / w;
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(k);
                    let mut coin = Coin { rng, bits: 0, left: 0 };
                    let mut histogram = BTreeMap::new();
                    let mut busts = 0;
                    for _ in 0..games {
                        let mut tails = 0;
                        loop {
                            if limit == Some(tails) {
                                busts += 1;
                                break;
                            }
                            if coin.heads() {
                                *histogram.entry(tails).or_insert(0) += 1;
                                break;
                            }
                            tails += 1;
                        }
                    }
                    (histogram, busts)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("simulation worker panicked")).collect()
    });

    let mut histogram = BTreeMap::new();
    let mut busts = 0;
    for (h, b) in shards {
        busts += b;
        for (t, c) in h {
            *histogram.entry(t).or_insert(0) += c;
        }
    }

    let mut total = BigUint::zero();
    let mut squares = BigUint::zero();
    let mut max_payoff = BigUint::zero();
    for (&t, &c) in &histogram {
        let payoff = config.payoff(t);
        total += &payoff * c;
        squares += &payoff * &payoff * c;
        if payoff > max_payoff {
            max_payoff = payoff;
        }
    }
    let n = BigRational::from_integer(n_games.into());
    let mean_exact = BigRational::from_integer(total.clone().into()) / &n;
    let std_error = (n_games > 1).then(|| {
        let centered = BigRational::from_integer(squares.into()) - &mean_exact * &mean_exact * &n;
        let variance = centered / (&n - BigRational::one());
        (variance.to_f64().unwrap_or(f64::INFINITY) / n_games as f64).sqrt()
    });
    Ok(SimulationSummary {
        n_games,
        seed,
        workers,
        histogram,
        busts,
        mean: mean_exact.to_f64().unwrap_or(f64::INFINITY),
        total_payoff: total,
        max_payoff,
        std_error,
    })
}
