use std::fs;
use std::path::Path;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::report::{Cell, Report, Table};
use super::*;
use crate::betting::{
    buffon_odds, classify_tail, conditional_survival, epsilon_age, threshold_age, threshold_age_bisect, BetError,
    BetQuery, ClassifyConfig, Odds, ThresholdQuery, BUFFON_DISREGARD_PROBABILITY, BUFFON_HISTORICAL_ODDS,
};
use crate::fitting::{
    fit_gompertz_from_lifetable, fit_gompertz_mle, fit_makeham_from_lifetable, loglik_gompertz, FitConfig, FitError, FitResult,
};
use crate::lifetable_io::{emit_lifetable, parse_lifetable, synthetic_lifetable, LifeTableError};
use crate::models::{sample, LifetimeSample, ModelError, SAMPLER_PRNG};
use crate::stpetersburg::{
    expected_gain, median_payoff_analysis, simulate, ExpectedGain, GameConfig, GameError,
};

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<BetError> for CliError {
    fn from(e: BetError) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<LifeTableError> for CliError {
    fn from(e: LifeTableError) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<GameError> for CliError {
    fn from(e: GameError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub(super) fn execute(cli: &Cli) -> Result<String, CliError> {
    let report = match &cli.command {
        Command::Survival(a) => cmd_survival(a)?,
        Command::Bet(a) => cmd_bet(a)?,
        Command::Threshold(a) => cmd_threshold(a)?,
        Command::Table1(a) => cmd_table1(a)?,
        Command::Fig2(a) => cmd_fig2(a)?,
        Command::Classify(a) => cmd_classify(a)?,
        Command::Fit(a) => cmd_fit(a)?,
        Command::SynthTable(a) => return cmd_synth_table(a, cli.format),
        Command::Stpetersburg(a) => cmd_stpetersburg(a)?,
    };
    Ok(report.render(cli.format))
}

fn check_age(age: f64) -> Result<(), CliError> {
    if age >= 0.0 && age.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("age must be a finite non-negative number, got {age}")))
    }
}

fn check_probability(name: &str, p: f64) -> Result<(), CliError> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("{name} must lie strictly between 0 and 1, got {p}")))
    }
}

fn cmd_survival(a: &SurvivalArgs) -> Result<Report, CliError> {
    let spec = a.model.spec()?;
    a.ages.iter().try_for_each(|&t| check_age(t))?;
    a.quantiles.iter().try_for_each(|&u| check_probability("quantile level", u))?;

    let mut r = Report::default();
    r.note("model", Cell::text(spec.to_string()));
    r.note("mode", Cell::Num(spec.mode()));
    if !a.ages.is_empty() {
        let mut t = Table::new("survival", &["age", "survival", "log_survival", "cdf", "pdf", "hazard"]);
        for &age in &a.ages {
            let hazard = match spec.hazard(age) {
                Ok(h) => Cell::Num(h),
                Err(ModelError::UndefinedHazard(_)) => Cell::text("undefined"),
                Err(e) => return Err(e.into()),
            };
            t.push(vec![
                Cell::Num(age),
                Cell::Num(spec.survival(age)?),
                Cell::Num(spec.log_survival(age)?),
                Cell::Num(spec.cdf(age)?),
                Cell::Num(spec.pdf(age)?),
                hazard,
            ]);
        }
        r.tables.push(t);
    }
    if !a.quantiles.is_empty() {
        let mut t = Table::new("quantile", &["level", "age"]);
        for &u in &a.quantiles {
            t.push(vec![Cell::Num(u), Cell::Num(spec.quantile(u)?)]);
        }
        r.tables.push(t);
    }
    Ok(r)
}

fn cmd_bet(a: &BetArgs) -> Result<Report, CliError> {
    let spec = a.model.spec()?;
    check_age(a.age)?;
    let q = BetQuery::new(a.age, a.window.years)?;
    let p = conditional_survival(&spec, q)?;
    let odds = buffon_odds(&spec, a.age, a.window.years)?;

    let mut r = Report::default();
    r.note("model", Cell::text(spec.to_string()));
    r.note("disregard_probability", Cell::Num(BUFFON_DISREGARD_PROBABILITY));
    r.note("historical_buffon_odds", Cell::Num(BUFFON_HISTORICAL_ODDS));
    let mut t = Table::new(
        "bet",
        &[
            "age",
            "window",
            "window_years",
            "win_probability",
            "death_probability",
            "odds_against",
            "disregardable",
        ],
    );
    let odds_cell = match odds.odds_against {
        Odds::Finite(v) => Cell::Num(v),
        Odds::Infinite => Cell::text("infinite"),
    };
    t.push(vec![
        Cell::Num(a.age),
        Cell::text(&a.window.label),
        Cell::Num(a.window.years),
        Cell::Num(p),
        Cell::Num(odds.death_probability),
        odds_cell,
        Cell::Bool(odds.disregardable),
    ]);
    r.tables.push(t);
    Ok(r)
}

fn cmd_threshold(a: &ThresholdArgs) -> Result<Report, CliError> {
    let spec = a.model.spec()?;
    let mut r = Report::default();
    r.note("model", Cell::text(spec.to_string()));

    if let Some(epsilon) = a.epsilon {
        check_probability("epsilon", epsilon)?;
        let age = epsilon_age(&spec, a.window.years, epsilon)?;
        let mut t = Table::new("epsilon_age", &["window", "window_years", "epsilon", "age"]);
        t.push(vec![
            Cell::text(&a.window.label),
            Cell::Num(a.window.years),
            Cell::Num(epsilon),
            Cell::Fixed(age, 2),
        ]);
        r.tables.push(t);
        return Ok(r);
    }

    let p = a.p.unwrap_or(0.5);
    check_probability("p", p)?;
    let q = ThresholdQuery::new(a.window.years, p)?;
    let (years, before_birth, method) = match &spec {
        crate::models::DistributionSpec::Gompertz(g) => {
            let th = threshold_age(g, q);
            (th.years, th.before_birth, "closed-form")
        }
        _ => match threshold_age_bisect(&spec, q) {
            Ok(t) => (t, false, "bisection"),
            Err(BetError::ThresholdBeforeBirth { .. }) => (f64::NAN, true, "bisection"),
            Err(e) => return Err(e.into()),
        },
    };
    let mut t = Table::new(
        "threshold",
        &["window", "window_years", "p", "threshold_age", "before_birth", "method"],
    );
    let age_cell = if years.is_nan() { Cell::Empty } else { Cell::Num(years) };
    t.push(vec![
        Cell::text(&a.window.label),
        Cell::Num(a.window.years),
        Cell::Num(p),
        age_cell,
        Cell::Bool(before_birth),
        Cell::text(method),
    ]);
    r.tables.push(t);
    Ok(r)
}

/// `e^(-mode/k)` as a column heading.
fn eta_label(mode: f64, k: f64) -> String {
    format!("e^(-{mode}/{k})")
}

fn grid_laws(divisors: &[f64], mode: f64) -> Result<Vec<GompertzParams>, CliError> {
    if divisors.is_empty() {
        return Err(usage("at least one divisor is required"));
    }
    if !(mode > 0.0 && mode.is_finite()) {
        return Err(usage(format!("mode must be a finite positive age, got {mode}")));
    }
    divisors
        .iter()
        .map(|&k| {
            if !(k > 0.0 && k.is_finite()) {
                return Err(usage(format!("divisor must be a finite positive number, got {k}")));
            }
            GompertzParams::with_mode_and_eta(mode, (-mode / k).exp()).map_err(|e| usage(e.to_string()))
        })
        .collect()
}

fn cmd_table1(a: &Table1Args) -> Result<Report, CliError> {
    let laws = grid_laws(&a.divisors, a.mode)?;
    check_probability("p", a.p)?;
    if a.windows.is_empty() {
        return Err(usage("at least one window is required"));
    }
    let mut columns = vec!["window".to_string()];
    columns.extend(a.divisors.iter().map(|&k| eta_label(a.mode, k)));
    let mut t = Table {
        name: "table1",
        columns,
        rows: Vec::new(),
    };
    for w in &a.windows {
        let q = ThresholdQuery::new(w.years, a.p)?;
        let mut row = vec![Cell::text(&w.label)];
        row.extend(laws.iter().map(|g| Cell::Fixed(threshold_age(g, q).years, 2)));
        t.push(row);
    }
    let mut r = Report::default();
    r.note("p", Cell::Num(a.p));
    r.note("mode", Cell::Num(a.mode));
    r.tables.push(t);
    Ok(r)
}

fn cmd_fig2(a: &Fig2Args) -> Result<Report, CliError> {
    let laws = grid_laws(&a.divisors, a.mode)?;
    if a.points == 0 {
        return Err(usage("the window range is empty: --points must be at least 1"));
    }
    let mut columns = vec!["delta_t".to_string()];
    columns.extend(a.divisors.iter().map(|&k| eta_label(a.mode, k)));
    let mut t = Table {
        name: "fig2",
        columns,
        rows: Vec::with_capacity(a.points),
    };
    for i in 1..=a.points {
        let dt = a.dt_max.years * i as f64 / a.points as f64;
        let q = ThresholdQuery::new(dt, 0.5)?;
        let mut row = vec![Cell::Num(dt)];
        row.extend(laws.iter().map(|g| Cell::Num(threshold_age(g, q).years)));
        t.push(row);
    }
    let mut r = Report::default();
    r.note("p", Cell::Num(0.5));
    r.note("mode", Cell::Num(a.mode));
    r.tables.push(t);
    Ok(r)
}

fn cmd_classify(a: &ClassifyArgs) -> Result<Report, CliError> {
    let spec = a.model.spec()?;
    if !(a.horizon > 0.0 && a.horizon.is_finite()) {
        return Err(usage(format!("horizon must be a finite positive age, got {}", a.horizon)));
    }
    if !(a.tol > 0.0 && a.tol < 0.1) {
        return Err(usage(format!("tol must lie in (0, 0.1), got {}", a.tol)));
    }
    let config = ClassifyConfig {
        horizon: a.horizon,
        tol: a.tol,
    };
    let class = classify_tail(&spec, a.window.years, config)?;
    let last = class.evidence.last().copied();

    let mut r = Report::default();
    r.note("model", Cell::text(spec.to_string()));
    let mut t = Table::new(
        "classification",
        &["window", "horizon", "tol", "case", "ratios_examined", "last_age", "last_ratio"],
    );
    t.push(vec![
        Cell::text(&a.window.label),
        Cell::Num(a.horizon),
        Cell::Num(a.tol),
        Cell::text(class.case.as_str()),
        Cell::Int(class.evidence.len() as i128),
        last.map_or(Cell::Empty, |s| Cell::Num(s.t)),
        last.map_or(Cell::Empty, |s| Cell::Num(s.ratio)),
    ]);
    r.tables.push(t);
    if a.evidence {
        let mut e = Table::new("evidence", &["age", "ratio", "log_ratio"]);
        for s in &class.evidence {
            e.push(vec![Cell::Num(s.t), Cell::Num(s.ratio), Cell::Num(s.log_ratio)]);
        }
        r.tables.push(e);
    }
    Ok(r)
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Compute(format!("cannot read {}: {e}", path.display())))
}

/// Ages at death, one per line; blank lines and `#` comments are skipped.
fn parse_sample(text: &str) -> Result<LifetimeSample, CliError> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| CliError::Compute(format!("line {}: {line:?} is not a number", i + 1)))?;
        values.push(v);
    }
    Ok(LifetimeSample::new(values)?)
}

fn cmd_fit(a: &FitArgs) -> Result<Report, CliError> {
    let config = FitConfig {
        max_iterations: a.max_iterations,
        gradient_tolerance: a.tolerance,
        initial_params: None,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    if a.simulate.is_none() && !a.model.is_empty() {
        return Err(usage("model options apply only with --simulate"));
    }
    if a.table.is_none() && a.law == FitLaw::Makeham {
        return Err(usage("--law makeham needs --table; samples are fitted by Gompertz maximum likelihood"));
    }

    let mut r = Report::default();
    let fit: FitResult = if let Some(path) = &a.table {
        let table = parse_lifetable(&read_file(path)?)?;
        r.note("input", Cell::text(format!("table {}", path.display())));
        r.note("method", Cell::text("weighted log-hazard least squares"));
        match a.law {
            FitLaw::Gompertz => fit_gompertz_from_lifetable(&table, &config)?,
            FitLaw::Makeham => fit_makeham_from_lifetable(&table, &config)?,
        }
    } else {
        let s = if let Some(path) = &a.sample {
            r.note("input", Cell::text(format!("sample {}", path.display())));
            parse_sample(&read_file(path)?)?
        } else {
            let n = a.simulate.unwrap_or(0);
            if n == 0 {
                return Err(usage("--simulate needs at least 1 draw"));
            }
            let spec = a.model.spec()?;
            r.note("input", Cell::text(format!("{n} draws from {spec}")));
            r.note("seed", Cell::Int(i128::from(a.seed)));
            r.note("generator", Cell::text(SAMPLER_PRNG));
            sample(&spec, n, a.seed)?
        };
        r.note("method", Cell::text("maximum likelihood"));
        let mut fit = fit_gompertz_mle(&s, &config)?;
        fit.loglik = loglik_gompertz(fit.params.gompertz(), &s)?;
        fit
    };
    for w in &fit.warnings {
        r.note("warning", Cell::text(w.to_string()));
    }

    let g = fit.params.gompertz();
    let mut t = Table::new(
        "fit",
        &[
            "law",
            "eta",
            "ln_eta",
            "b",
            "lambda",
            "mode",
            "loglik",
            "converged",
            "iterations",
            "gradient_norm",
            "residual_rms",
            "observations",
        ],
    );
    t.push(vec![
        Cell::text(fit.params.spec().name()),
        Cell::Num(g.eta()),
        Cell::Num(g.ln_eta()),
        Cell::Num(g.b()),
        Cell::Num(fit.params.lambda()),
        Cell::Num(fit.params.mode()),
        Cell::Num(fit.loglik),
        Cell::Bool(fit.converged),
        Cell::Int(fit.iterations as i128),
        Cell::Num(fit.gradient_norm),
        fit.residual_rms.map_or(Cell::Empty, Cell::Num),
        Cell::Int(fit.observations as i128),
    ]);
    r.tables.push(t);
    Ok(r)
}

fn cmd_synth_table(a: &SynthTableArgs, format: Format) -> Result<String, CliError> {
    let spec = a.model.spec()?;
    if a.from >= a.to {
        return Err(usage(format!("--from {} must be below --to {}", a.from, a.to)));
    }
    let table = synthetic_lifetable(&spec, a.from, a.to)?;
    let text = match format {
        Format::Human | Format::Csv => emit_lifetable(&table),
        Format::JsonLines => {
            let mut r = Report::default();
            for (k, v) in table.metadata() {
                r.note(k, Cell::text(v));
            }
            let mut t = Table::new("lifetable", &["age", "qx"]);
            for &(age, qx) in table.rows() {
                t.push(vec![Cell::Int(i128::from(age)), Cell::Num(qx)]);
            }
            r.tables.push(t);
            r.render(format)
        }
    };
    match &a.output {
        Some(path) => {
            fs::write(path, &text).map_err(|e| CliError::Compute(format!("cannot write {}: {e}", path.display())))?;
            Ok(format!("wrote {} rows to {}\n", table.len(), path.display()))
        }
        None => Ok(text),
    }
}

fn rational(v: &BigRational) -> Cell {
    Cell::text(v.to_string())
}

fn cmd_stpetersburg(a: &StPetersburgArgs) -> Result<Report, CliError> {
    let config = match (a.max_flips, a.cap_power, &a.cap) {
        (Some(n), _, _) => GameConfig::max_flips(n)?,
        (_, Some(m), _) => GameConfig::cap_power(m),
        (_, _, Some(c)) => GameConfig::bankroll_cap(c.clone())?,
        _ => GameConfig::Unlimited,
    };
    let game = match &config {
        GameConfig::Unlimited => "unlimited".to_string(),
        GameConfig::MaxFlips(n) => format!("max-flips={n}"),
        GameConfig::BankrollCap(c) => format!("cap={c}"),
    };
    if a.games == Some(0) {
        return Err(usage("--games must be at least 1"));
    }
    if a.workers == 0 {
        return Err(usage("--workers must be at least 1"));
    }
    let exact = a.exact || (a.games.is_none() && !a.median);

    let mut r = Report::default();
    r.note("game", Cell::text(&game));
    let gain = expected_gain(&config);
    if exact {
        let mut t = Table::new("expected_gain", &["expected_gain"]);
        t.push(vec![Cell::text(gain.to_string())]);
        r.tables.push(t);
    }
    if a.median {
        let m = median_payoff_analysis();
        let mut t = Table::new(
            "median",
            &["median_of", "lower_median", "upper_median", "p_payoff_at_least_32"],
        );
        t.push(vec![
            Cell::text("unlimited"),
            Cell::text(m.lower_median.to_string()),
            Cell::text(m.upper_median.to_string()),
            rational(&m.p_at_least_32),
        ]);
        r.tables.push(t);
    }
    if let Some(n) = a.games {
        let s = simulate(&config, n, a.seed, a.workers)?;
        r.note("seed", Cell::Int(i128::from(a.seed)));
        r.note("workers", Cell::Int(a.workers as i128));
        r.note("generator", Cell::text(s.generator()));
        let z = match (&gain, s.std_error) {
            (ExpectedGain::Finite(e), Some(se)) if se > 0.0 => {
                Cell::Num((s.mean - e.to_f64().unwrap_or(f64::NAN)) / se)
            }
            _ => Cell::Empty,
        };
        let mut t = Table::new(
            "simulation",
            &["games", "mean", "std_error", "z_score", "max_payoff", "busts"],
        );
        t.push(vec![
            Cell::Int(i128::from(s.n_games)),
            Cell::Num(s.mean),
            s.std_error.map_or(Cell::Empty, Cell::Num),
            z,
            Cell::text(s.max_payoff.to_string()),
            Cell::Int(i128::from(s.busts)),
        ]);
        r.tables.push(t);
        let mut h = Table::new("histogram", &["tails", "payoff", "count", "frequency", "probability"]);
        for (&tails, &count) in &s.histogram {
            let payoff: BigUint = config.payoff(tails);
            h.push(vec![
                Cell::Int(i128::from(tails)),
                Cell::text(payoff.to_string()),
                Cell::Int(i128::from(count)),
                Cell::Num(s.frequency(tails)),
                Cell::Num(0.5f64.powi(tails as i32 + 1)),
            ]);
        }
        // Games that ran out of flips pay nothing.
        if let GameConfig::MaxFlips(n) = config {
            h.push(vec![
                Cell::Int(i128::from(n)),
                Cell::text(BigUint::zero().to_string()),
                Cell::Int(i128::from(s.busts)),
                Cell::Num(s.busts as f64 / s.n_games as f64),
                Cell::Num(0.5f64.powi(n as i32)),
            ]);
        }
        r.tables.push(h);
    }
    Ok(r)
}
