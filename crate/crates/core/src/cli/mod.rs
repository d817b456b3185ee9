//! The `lifebet` command line.
//!
//! Exit codes: 0 on success, 2 on a usage error (bad or inconsistent
//! options, caught before any computation), 1 when a computation fails.

mod commands;
mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

use crate::models::{DistributionSpec, GompertzParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Window units and their length in years. A day is 1/365 of a year.
pub const WINDOW_UNITS: [(&str, &str, f64); 6] = [
    ("y", "year", 1.0),
    ("mo", "month", 1.0 / 12.0),
    ("d", "day", 1.0 / 365.0),
    ("h", "hour", 1.0 / (365.0 * 24.0)),
    ("min", "minute", 1.0 / (365.0 * 24.0 * 60.0)),
    ("s", "second", 1.0 / (365.0 * 24.0 * 3600.0)),
];

#[derive(Parser, Debug)]
#[command(
    name = "lifebet",
    version,
    about = "Survival bets, threshold ages, tail classes, mortality fits and the St. Petersburg game"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Human,
    Csv,
    JsonLines,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Survival, density, hazard and quantiles of a lifetime law.
    Survival(SurvivalArgs),
    /// Probability that a person of a given age survives a window, with the
    /// odds against dying in it.
    Bet(BetArgs),
    /// Age at which the survival bet is won with probability p, or first lost
    /// with probability above 1 - epsilon.
    Threshold(ThresholdArgs),
    /// Grid of threshold ages for mode-parameterized Gompertz laws.
    Table1(Table1Args),
    /// Threshold age as a function of a short window, one column per law.
    Fig2(Fig2Args),
    /// Asymptotic class of the survival tail.
    Classify(ClassifyArgs),
    /// Fit Gompertz or Gompertz–Makeham parameters to a sample or life table.
    Fit(FitArgs),
    /// Life table generated from a lifetime law.
    SynthTable(SynthTableArgs),
    /// Expected gain, payoff medians and simulation of the St. Petersburg game.
    Stpetersburg(StPetersburgArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Law {
    Gompertz,
    Makeham,
    Normal,
    Exponential,
    Uniform,
}

/// Lifetime-law options shared by several subcommands.
#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    /// Lifetime law.
    #[arg(long, value_enum)]
    pub model: Option<Law>,
    /// Gompertz shape as an exponent: eta = e^E.
    #[arg(long, value_name = "E", allow_negative_numbers = true, conflicts_with = "eta")]
    pub eta_exp: Option<f64>,
    /// Gompertz shape eta.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Gompertz scale b (1/years).
    #[arg(long)]
    pub b: Option<f64>,
    /// Gompertz mode (years); combine with one of eta or b.
    #[arg(long)]
    pub mode: Option<f64>,
    /// Makeham age-independent hazard (1/years).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Normal mean (years).
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    /// Normal standard deviation (years).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Exponential rate (1/years).
    #[arg(long)]
    pub rate: Option<f64>,
    /// Uniform upper support bound (years).
    #[arg(long)]
    pub t0: Option<f64>,
}

impl ModelArgs {
    fn given(&self) -> Vec<&'static str> {
        let all = [
            ("--eta-exp", self.eta_exp),
            ("--eta", self.eta),
            ("--b", self.b),
            ("--mode", self.mode),
            ("--lambda", self.lambda),
            ("--mu", self.mu),
            ("--sigma", self.sigma),
            ("--rate", self.rate),
            ("--t0", self.t0),
        ];
        all.iter().filter(|(_, v)| v.is_some()).map(|(n, _)| *n).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.model.is_none() && self.given().is_empty()
    }

    /// The law described by the options; defaults to Gompertz.
    pub fn spec(&self) -> Result<DistributionSpec, CliError> {
        let law = self.model.unwrap_or(Law::Gompertz);
        let allowed: &[&str] = match law {
            Law::Gompertz => &["--eta-exp", "--eta", "--b", "--mode"],
            Law::Makeham => &["--eta-exp", "--eta", "--b", "--mode", "--lambda"],
            Law::Normal => &["--mu", "--sigma"],
            Law::Exponential => &["--rate"],
            Law::Uniform => &["--t0"],
        };
        let name = law.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
        if let Some(extra) = self.given().into_iter().find(|g| !allowed.contains(g)) {
            return Err(CliError::Usage(format!("{extra} does not apply to --model {name}")));
        }
        let need = |flag: &str, v: Option<f64>| v.ok_or_else(|| CliError::Usage(format!("--model {name} needs {flag}")));
        let spec = match law {
            Law::Gompertz => Ok(DistributionSpec::Gompertz(self.gompertz()?)),
            Law::Makeham => {
                let lambda = need("--lambda", self.lambda)?;
                let g = self.gompertz()?;
                DistributionSpec::makeham(lambda, g.eta(), g.b())
            }
            Law::Normal => DistributionSpec::normal(need("--mu", self.mu)?, need("--sigma", self.sigma)?),
            Law::Exponential => DistributionSpec::exponential(need("--rate", self.rate)?),
            Law::Uniform => DistributionSpec::uniform_bounded(need("--t0", self.t0)?),
        };
        spec.map_err(|e| CliError::Usage(e.to_string()))
    }

    fn gompertz(&self) -> Result<GompertzParams, CliError> {
        let eta = self.eta_exp.map(f64::exp).or(self.eta);
        let params = match (eta, self.b, self.mode) {
            (Some(eta), Some(b), None) => GompertzParams::new(eta, b),
            (None, Some(b), Some(mode)) => GompertzParams::with_mode(mode, b),
            (Some(eta), None, Some(mode)) => GompertzParams::with_mode_and_eta(mode, eta),
            _ => {
                return Err(CliError::Usage(
                    "Gompertz parameters: give exactly two of --eta/--eta-exp, --b, --mode".into(),
                ))
            }
        };
        params.map_err(|e| CliError::Usage(e.to_string()))
    }
}

/// A bet window such as `1d` or `0.5y`, with its length in years.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub label: String,
    pub years: f64,
}

impl std::str::FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let err = || {
            let units: Vec<&str> = WINDOW_UNITS.iter().map(|u| u.0).collect();
            format!(
                "invalid window {s:?}: expected a positive number with an optional unit ({}); a bare number is years",
                units.join(", ")
            )
        };
        // Longest suffixes first so "min" is not read as "…in".
        let mut units = WINDOW_UNITS;
        units.sort_by_key(|u| std::cmp::Reverse(u.0.len()));
        let (number, unit) = units
            .iter()
            .find_map(|u| s.strip_suffix(u.0).map(|n| (n, Some(*u))))
            .unwrap_or((s, None));
        let count: f64 = if number.is_empty() && unit.is_some() {
            1.0
        } else {
            number.parse().map_err(|_| err())?
        };
        let years = count * unit.map_or(1.0, |u| u.2);
        if !(count > 0.0 && years > 0.0 && years.is_finite()) {
            return Err(err());
        }
        let label = match unit {
            Some((_, word, _)) if count == 1.0 => format!("1 {word}"),
            Some((_, word, _)) => format!("{count} {word}s"),
            None if count == 1.0 => "1 year".into(),
            None => format!("{count} years"),
        };
        Ok(Self { label, years })
    }
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("points").required(true).multiple(true).args(["ages", "quantiles"])))]
pub struct SurvivalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Ages (years), comma-separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub ages: Vec<f64>,
    /// Probabilities in (0, 1) whose quantile ages are wanted, comma-separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub quantiles: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct BetArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Current age (years).
    #[arg(long, allow_negative_numbers = true)]
    pub age: f64,
    /// Bet window, e.g. 1y, 1mo, 1d, 1h, 1min, 1s or a number of years.
    #[arg(long)]
    pub window: Window,
}

#[derive(Args, Debug)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Bet window.
    #[arg(long)]
    pub window: Window,
    /// Target win probability [default: 0.5].
    #[arg(long, conflicts_with = "epsilon")]
    pub p: Option<f64>,
    /// Report the first age (to 0.01 years) where the win probability is below this.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Args, Debug)]
pub struct Table1Args {
    /// Divisors k; column k uses eta = e^(-mode/k), i.e. b = 1/k for mode 75.
    #[arg(long, value_delimiter = ',', default_value = "3,4,5,6,7,8")]
    pub divisors: Vec<f64>,
    /// Mode of every law in the grid (years).
    #[arg(long, default_value_t = 75.0)]
    pub mode: f64,
    /// Row windows.
    #[arg(long, value_delimiter = ',', default_value = "1y,1mo,1d,1h,1min,1s")]
    pub windows: Vec<Window>,
    /// Target win probability.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
}

#[derive(Args, Debug)]
pub struct Fig2Args {
    /// Divisors k; one curve per eta = e^(-mode/k).
    #[arg(long, value_delimiter = ',', default_value = "3,4,5,6,7,8")]
    pub divisors: Vec<f64>,
    /// Mode of every law (years).
    #[arg(long, default_value_t = 75.0)]
    pub mode: f64,
    /// Number of windows; window i is dt-max * i / points.
    #[arg(long, default_value_t = 1001)]
    pub points: usize,
    /// Largest window.
    #[arg(long, default_value = "1mo")]
    pub dt_max: Window,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Bet window.
    #[arg(long, default_value = "1y")]
    pub window: Window,
    /// Oldest age examined (years).
    #[arg(long, default_value_t = crate::betting::DEFAULT_HORIZON)]
    pub horizon: f64,
    /// Decision tolerance.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Also list every ratio examined.
    #[arg(long)]
    pub evidence: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitLaw {
    Gompertz,
    Makeham,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("input").required(true).args(["table", "sample", "simulate"])))]
pub struct FitArgs {
    /// Life table in `age,qx` CSV.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Ages at death, one per line.
    #[arg(long)]
    pub sample: Option<PathBuf>,
    /// Draw this many ages at death from the model options and fit them.
    #[arg(long, value_name = "N")]
    pub simulate: Option<usize>,
    /// Seed for --simulate.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Law fitted to a life table.
    #[arg(long, value_enum, default_value_t = FitLaw::Gompertz)]
    pub law: FitLaw,
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
    /// Convergence threshold on the per-observation gradient norm.
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Args, Debug)]
pub struct SynthTableArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// First age.
    #[arg(long, default_value_t = 20)]
    pub from: u32,
    /// Last age.
    #[arg(long, default_value_t = 100)]
    pub to: u32,
    /// Write the table here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("truncation").args(["max_flips", "cap_power", "cap"])))]
pub struct StPetersburgArgs {
    /// Game pays 0 if no heads within this many tosses.
    #[arg(long)]
    pub max_flips: Option<u32>,
    /// Casino bankroll of 2^M caps every payoff.
    #[arg(long, value_name = "M")]
    pub cap_power: Option<u32>,
    /// Casino bankroll capping every payoff.
    #[arg(long, value_parser = parse_biguint)]
    pub cap: Option<BigUint>,
    /// Exact expected gain (the default when nothing else is asked).
    #[arg(long)]
    pub exact: bool,
    /// Median payoff of a single unlimited game.
    #[arg(long)]
    pub median: bool,
    /// Simulate this many games.
    #[arg(long, value_name = "N")]
    pub games: Option<u64>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads for the simulation (part of its reproducibility key).
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

fn parse_biguint(s: &str) -> Result<BigUint, String> {
    s.parse().map_err(|_| format!("{s:?} is not a non-negative integer"))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Compute(_) => EXIT_COMPUTE,
        }
    }
}

/// Parses `args` (program name first), runs the command and writes its
/// output. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match commands::execute(&cli) {
        Ok(text) => match out.write_all(text.as_bytes()) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_COMPUTE
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn windows_parse_with_calendar_conventions() {
        let w = |s: &str| s.parse::<Window>().unwrap();
        assert_eq!(w("1y").years, 1.0);
        assert_eq!(w("1mo").years, 1.0 / 12.0);
        assert_eq!(w("1d"), Window { label: "1 day".into(), years: 1.0 / 365.0 });
        assert_eq!(w("1min").label, "1 minute");
        assert_eq!(w("s").years, 1.0 / 31_536_000.0);
        assert_eq!(w("0.5").label, "0.5 years");
        assert_eq!(w("3h").label, "3 hours");
        for bad in ["", "x", "-1d", "0y", "1w", "inf"] {
            assert!(bad.parse::<Window>().is_err(), "{bad}");
        }
    }

    #[test]
    fn model_options_are_checked() {
        let args = |m: ModelArgs| m.spec();
        let base = ModelArgs {
            eta_exp: Some(-25.0),
            b: Some(1.0 / 3.0),
            ..Default::default()
        };
        assert!(args(base.clone()).is_ok());
        let three = ModelArgs {
            mode: Some(75.0),
            ..base.clone()
        };
        assert!(matches!(args(three), Err(CliError::Usage(_))));
        let stray = ModelArgs {
            sigma: Some(1.0),
            ..base.clone()
        };
        assert_eq!(
            args(stray),
            Err(CliError::Usage("--sigma does not apply to --model gompertz".into()))
        );
        let normal = ModelArgs {
            model: Some(Law::Normal),
            mu: Some(75.0),
            ..Default::default()
        };
        assert_eq!(args(normal), Err(CliError::Usage("--model normal needs --sigma".into())));
        let by_mode = ModelArgs {
            mode: Some(75.0),
            b: Some(1.0 / 3.0),
            ..Default::default()
        };
        let spec = args(by_mode).unwrap();
        assert!((spec.mode() - 75.0).abs() < 1e-12);
    }
}
