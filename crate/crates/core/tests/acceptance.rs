//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::time::{Duration, Instant};

use lifebet::betting::{
    buffon_odds, classify_tail, conditional_survival, threshold_age, BetQuery, ClassifyConfig, Odds, TailCase,
    ThresholdQuery, BUFFON_DISREGARD_PROBABILITY,
};
use lifebet::cli::{run, EXIT_OK};
use lifebet::fitting::{fit_gompertz_from_lifetable, fit_gompertz_mle, loglik_gompertz, loglik_gradient, FitConfig};
use lifebet::lifetable_io::synthetic_lifetable;
use lifebet::models::{DistributionSpec, GompertzParams};
use lifebet::stpetersburg::{
    expected_gain, expected_gain_capped, expected_gain_truncated, median_payoff_analysis, simulate, ExpectedGain,
    GameConfig,
};
use lifebet_oracle::{central_gradient, integrate, integrate_to_infinity};
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

const TABLE1: [(&str, [f64; 6]); 6] = [
    ("1 year", [76.68, 78.57, 80.71, 83.04, 85.55, 88.20]),
    ("1 month", [84.61, 88.98, 93.60, 98.42, 103.41, 108.54]),
    ("1 day", [94.89, 102.68, 110.71, 118.95, 127.35, 135.90]),
    ("1 hour", [104.43, 115.39, 126.60, 138.02, 149.60, 161.33]),
    ("1 minute", [116.71, 131.77, 147.08, 162.59, 178.26, 194.08]),
    ("1 second", [129.00, 148.15, 167.55, 187.15, 206.92, 226.84]),
];

const SECOND: f64 = 1.0 / (365.0 * 24.0 * 3600.0);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed < budget, || format!("took {elapsed:.2?}, budget {budget:?}"))
}

fn table1_reproduction() -> Check {
    let start = Instant::now();
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(["lifebet", "--format", "csv", "table1"], &mut out, &mut err);
    let elapsed = start.elapsed();
    ensure(code == EXIT_OK, || String::from_utf8_lossy(&err).into_owned())?;
    let text = String::from_utf8(out).map_err(|e| e.to_string())?;
    let rows: Vec<Vec<&str>> = text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').collect()).collect();
    ensure(rows.len() == 6, || format!("{} rows", rows.len()))?;
    let mut worst: f64 = 0.0;
    for ((label, expected), row) in TABLE1.iter().zip(&rows) {
        ensure(row[0] == *label, || format!("row {} where {label} expected", row[0]))?;
        for (k, (&want, cell)) in expected.iter().zip(&row[1..]).enumerate() {
            let got: f64 = cell.parse().map_err(|_| format!("cell {cell:?}"))?;
            ensure((got - want).abs() <= 0.01 + 1e-9, || format!("{label}, e^(-75/{}): {got} vs {want}", k + 3))?;
            worst = worst.max((got - want).abs());
        }
    }
    within_budget(elapsed, Duration::from_secs(1))?;
    Ok(format!("36 cells, max deviation {worst:.3}, {elapsed:.2?}"))
}

fn one_second_footnote() -> Check {
    let g = GompertzParams::new((-25.0f64).exp(), 1.0 / 3.0).map_err(|e| e.to_string())?;
    let t = threshold_age(&g, ThresholdQuery::new(SECOND, 0.5).map_err(|e| e.to_string())?).years;
    ensure((t - 129.0).abs() <= 0.05, || format!("t = {t}"))?;
    Ok(format!("t = {t:.4}"))
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn closed_form_vs_quadrature() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let ln_eta = -30.0 + 27.0 * unit(&mut rng);
        let b = 0.03 + 0.47 * unit(&mut rng);
        let eta = ln_eta.exp();
        // Up to three e-folds of hazard past the mode, so the probability
        // stays representable over a two-year window.
        let mode = (-ln_eta / b).max(0.0);
        let t = (mode + 3.0 / b) * unit(&mut rng);
        // Windows from one second to two years, log-uniform.
        let dt = SECOND * (2.0 / SECOND).powf(unit(&mut rng));

        // Density divided by survival to t, written out directly.
        let scaled = |x: f64| (eta.ln() + b.ln() + b * x - eta * (b * t).exp() * (b * (x - t)).exp_m1()).exp();
        let survivors = integrate_to_infinity(scaled, t + dt, 0.5, 1e-14);
        let alive = integrate(scaled, t, t + dt, 1e-14, 0.0) + survivors;
        let oracle = survivors / alive;

        let spec = DistributionSpec::gompertz(eta, b).map_err(|e| e.to_string())?;
        let p = conditional_survival(&spec, BetQuery::new(t, dt).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let rel = ((p - oracle) / oracle).abs();
        ensure(rel <= 1e-9, || format!("tuple {i} (ln eta {ln_eta}, b {b}, t {t}, dt {dt}): {p} vs {oracle}"))?;
        worst = worst.max(rel);
    }
    let elapsed = start.elapsed();
    within_budget(elapsed, Duration::from_secs(10))?;
    Ok(format!("50 tuples, max relative error {worst:.1e}, {elapsed:.2?}"))
}

fn normal_tail_limit() -> Check {
    let spec = DistributionSpec::normal(75.0, 10.0).map_err(|e| e.to_string())?;
    let ratio = |t: f64| -> Result<f64, String> {
        conditional_survival(&spec, BetQuery::new(t, 1.0).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
    };
    let ratios = [ratio(100.0)?, ratio(150.0)?, ratio(200.0)?];
    let class = classify_tail(&spec, 1.0, ClassifyConfig::default()).map_err(|e| e.to_string())?;
    let shown = format!(
        "ratios at 100, 150, 200: {:.4e}, {:.4e}, {:.4e}; class {}",
        ratios[0], ratios[1], ratios[2], class.case
    );
    ensure(ratios[0] > ratios[1] && ratios[1] > ratios[2], || format!("not strictly decreasing; {shown}"))?;
    ensure(class.case == TailCase::FasterThanExponential, || shown.clone())?;
    ensure(ratios[2] < 1e-3, || format!("ratio at 200 is not below 1e-3; {shown}"))?;
    Ok(shown)
}

fn exponential_memorylessness() -> Check {
    let spec = DistributionSpec::exponential(0.05).map_err(|e| e.to_string())?;
    let mut spread: f64 = 0.0;
    for dt in [SECOND, 1.0 / 365.0, 1.0, 10.0] {
        let ps = [0.0, 10.0, 100.0, 1000.0]
            .iter()
            .map(|&t| conditional_survival(&spec, BetQuery::new(t, dt).map_err(|e| e.to_string())?).map_err(|e| e.to_string()))
            .collect::<Result<Vec<f64>, String>>()?;
        let d = ps.iter().map(|p| (p - ps[0]).abs()).fold(0.0, f64::max);
        ensure(d <= 1e-15, || format!("dt {dt}: {ps:?}"))?;
        spread = spread.max(d);
    }
    let class = classify_tail(&spec, 1.0, ClassifyConfig::default()).map_err(|e| e.to_string())?;
    ensure(class.case == TailCase::Exponential, || format!("class {}", class.case))?;
    Ok(format!("max spread over t {spread:.1e}; class {}", class.case))
}

fn fitting_recovery() -> Check {
    let start = Instant::now();
    let truth = GompertzParams::with_mode(75.0, 0.125).map_err(|e| e.to_string())?;
    let spec = DistributionSpec::Gompertz(truth);
    let sample = spec.sample(10_000, 42).map_err(|e| e.to_string())?;
    let fit = fit_gompertz_mle(&sample, &FitConfig::default()).map_err(|e| e.to_string())?;
    let g = fit.params.gompertz();
    let b_err = (g.b() / truth.b() - 1.0).abs();
    let mode_err = (g.mode() - truth.mode()).abs();
    ensure(fit.converged, || "MLE did not converge".into())?;
    ensure(b_err <= 0.05, || format!("b = {} vs {}", g.b(), truth.b()))?;
    ensure(mode_err <= 2.0, || format!("mode = {} vs {}", g.mode(), truth.mode()))?;

    let mut grad_err: f64 = 0.0;
    for (eta_scale, b_scale) in [(1.0, 1.0), (0.6, 1.1), (1.7, 0.9)] {
        let at = GompertzParams::new(truth.eta() * eta_scale, truth.b() * b_scale).map_err(|e| e.to_string())?;
        let analytic = loglik_gradient(&at, &sample).map_err(|e| e.to_string())?;
        // Richardson-extrapolated central differences: the gradient near the
        // optimum is small next to the log-likelihood itself.
        let f = |x: &[f64]| loglik_gompertz(&GompertzParams::new(x[0].exp(), x[1].exp()).unwrap(), &sample).unwrap();
        let x = [at.ln_eta(), at.b().ln()];
        let fine = central_gradient(f, &x, 1e-4);
        let coarse = central_gradient(f, &x, 2e-4);
        let numeric: Vec<f64> = fine.iter().zip(&coarse).map(|(h, h2)| (4.0 * h - h2) / 3.0).collect();
        for (a, f) in analytic.iter().zip(&numeric) {
            let rel = ((a - f) / f).abs();
            ensure(rel <= 1e-6, || format!("gradient {a} vs finite difference {f}"))?;
            grad_err = grad_err.max(rel);
        }
    }

    let table = synthetic_lifetable(&spec, 20, 100).map_err(|e| e.to_string())?;
    let tfit = fit_gompertz_from_lifetable(&table, &FitConfig::default()).map_err(|e| e.to_string())?;
    let tb = tfit.params.gompertz().b();
    ensure((tb - truth.b()).abs() <= 1e-3 * truth.b(), || format!("table b = {tb}"))?;

    let elapsed = start.elapsed();
    within_budget(elapsed, Duration::from_secs(30))?;
    Ok(format!(
        "b error {:.2}%, mode error {mode_err:.3} y, gradient rel error {grad_err:.1e}, table b error {:.1e}, {elapsed:.2?}",
        100.0 * b_err,
        (tb - truth.b()).abs()
    ))
}

fn st_petersburg() -> Check {
    let start = Instant::now();
    for n in 1..=30u32 {
        let e = expected_gain_truncated(n).map_err(|e| e.to_string())?;
        ensure(e == BigRational::from_integer(n.into()), || format!("truncated n = {n}: {e}"))?;
    }
    let mut previous = BigRational::from_integer(0.into());
    for m in 0..=200u32 {
        let e = expected_gain_capped(&(BigUint::one() << m)).map_err(|e| e.to_string())?;
        ensure(e == BigRational::from_integer((m + 1).into()), || format!("capped 2^{m}: {e}"))?;
        ensure(e > previous, || format!("no growth at m = {m}"))?;
        previous = e;
    }
    ensure(expected_gain(&GameConfig::Unlimited) == ExpectedGain::Diverges, || "unlimited game converges".into())?;

    let config = GameConfig::max_flips(20).map_err(|e| e.to_string())?;
    let exact = expected_gain_truncated(20).map_err(|e| e.to_string())?.to_f64().unwrap_or(f64::NAN);
    let s = simulate(&config, 100_000, 42, 4).map_err(|e| e.to_string())?;
    let se = s.std_error.ok_or("no standard error")?;
    let z = (s.mean - exact) / se;
    ensure(z.abs() <= 3.0, || format!("mean {} vs {exact}, z = {z}", s.mean))?;

    let median = median_payoff_analysis();
    ensure(median.lower_median == BigUint::from(2u32), || format!("median {}", median.lower_median))?;

    let elapsed = start.elapsed();
    within_budget(elapsed, Duration::from_secs(5))?;
    Ok(format!(
        "E[n flips] = n for n <= 30, E[cap 2^m] = m + 1 for m <= 200, simulated mean {:.3} (z = {z:.2}), median 2, {elapsed:.2?}",
        s.mean
    ))
}

fn buffon_substitute() -> Check {
    let Odds::Finite(o) = Odds::against(1.0 / 10_001.0) else { return Err("infinite odds".into()) };
    ensure((o - 10_000.0).abs() < 1e-8, || format!("odds {o}"))?;

    // Odds of dying within a day at 56 under the Table 1 law, against the
    // quadrature oracle.
    let eta = (-25.0f64).exp();
    let b = 1.0 / 3.0;
    let (age, window) = (56.0, 1.0 / 365.0);
    let spec = DistributionSpec::gompertz(eta, b).map_err(|e| e.to_string())?;
    let scaled = |x: f64| (eta.ln() + b.ln() + b * x - eta * (b * age).exp() * (b * (x - age)).exp_m1()).exp();
    let died = integrate(scaled, age, age + window, 1e-14, 0.0);
    let survivors = integrate_to_infinity(scaled, age + window, 0.5, 1e-14);
    let oracle = survivors / died;
    let odds = buffon_odds(&spec, age, window).map_err(|e| e.to_string())?;
    let Odds::Finite(got) = odds.odds_against else { return Err("infinite odds".into()) };
    ensure(((got - oracle) / oracle).abs() < 1e-8, || format!("odds {got} vs oracle {oracle}"))?;
    ensure(odds.disregardable == (odds.death_probability <= BUFFON_DISREGARD_PROBABILITY), || "flag".into())?;
    Ok(format!(
        "1/10001 -> {o}; one day at 56 -> {got:.0} to 1 (oracle {oracle:.0}); historical 10189 to 1 and SOA/CMI values not checked"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("table1 reproduction", table1_reproduction),
        ("one-second threshold near 129", one_second_footnote),
        ("closed form vs quadrature", closed_form_vs_quadrature),
        ("normal tail limit", normal_tail_limit),
        ("exponential memorylessness", exponential_memorylessness),
        ("fitting recovery", fitting_recovery),
        ("st petersburg", st_petersburg),
        ("buffon odds substitute", buffon_substitute),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
