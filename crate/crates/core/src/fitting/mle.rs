use std::f64::consts::LN_2;

use super::{FitConfig, FitError, FitResult, FittedParams, MIN_SAMPLE_SIZE};
use crate::models::{GompertzParams, LifetimeSample};
use crate::numeric::weighted_line;

/// Log-likelihood with its gradient and Hessian in `(ln η, ln b)`.
struct Derivs {
    value: f64,
    grad: [f64; 2],
    hess: [[f64; 2]; 2],
}

/// `None` when `η e^{bx}` overflows for some observation.
fn evaluate(ln_eta: f64, ln_b: f64, xs: &[f64]) -> Option<Derivs> {
    let (eta, b) = (ln_eta.exp(), ln_b.exp());
    if !(eta > 0.0 && eta.is_finite() && b > 0.0 && b.is_finite()) {
        return None;
    }
    let mut d = Derivs {
        value: 0.0,
        grad: [0.0; 2],
        hess: [[0.0; 2]; 2],
    };
    for &x in xs {
        let u = b * x;
        let e = (ln_eta + u).exp();
        if !e.is_finite() {
            return None;
        }
        d.value += ln_b + ln_eta + eta + u - e;
        d.grad[0] += 1.0 + eta - e;
        d.grad[1] += 1.0 + u - e * u;
        d.hess[0][0] += eta - e;
        d.hess[0][1] -= e * u;
        d.hess[1][1] += u - e * (u + u * u);
    }
    d.hess[1][0] = d.hess[0][1];
    d.value.is_finite().then_some(d)
}

/// `Σ ln f(xᵢ)` for the Gompertz density `b η exp(η + bx - η e^{bx})`.
pub fn loglik_gompertz(params: &GompertzParams, sample: &LifetimeSample) -> Result<f64, FitError> {
    evaluate(params.ln_eta(), params.b().ln(), sample.values())
        .map(|d| d.value)
        .ok_or(FitError::Overflow {
            eta: params.eta(),
            b: params.b(),
        })
}

/// Gradient of [`loglik_gompertz`] with respect to `(ln η, ln b)`.
pub fn loglik_gradient(params: &GompertzParams, sample: &LifetimeSample) -> Result<[f64; 2], FitError> {
    evaluate(params.ln_eta(), params.b().ln(), sample.values())
        .map(|d| d.grad)
        .ok_or(FitError::Overflow {
            eta: params.eta(),
            b: params.b(),
        })
}

/// Maximum-likelihood Gompertz fit by damped Newton iteration in
/// `(ln η, ln b)`, falling back to gradient ascent where the Hessian is not
/// negative definite.
pub fn fit_gompertz_mle(sample: &LifetimeSample, config: &FitConfig) -> Result<FitResult, FitError> {
    config.validate()?;
    let xs = sample.values();
    let n = xs.len();
    if n < MIN_SAMPLE_SIZE {
        return Err(FitError::InsufficientData {
            available: n,
            required: MIN_SAMPLE_SIZE,
        });
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(FitError::DegenerateSample(xs[0]));
    }
    let scale = n as f64;

    let starts = [
        config.initial_params.map(|g| (g.ln_eta(), g.b().ln())),
        hazard_histogram_start(xs),
        Some(median_start(xs)),
    ];
    let (mut theta, mut cur) = starts
        .into_iter()
        .flatten()
        .find_map(|(a, c)| evaluate(a, c, xs).map(|d| ((a, c), d)))
        .ok_or_else(|| {
            let (a, c) = median_start(xs);
            FitError::Overflow {
                eta: a.exp(),
                b: c.exp(),
            }
        })?;

    let mut iterations = 0;
    let mut gradient_norm = norm(cur.grad) / scale;
    while gradient_norm >= config.gradient_tolerance && iterations < config.max_iterations {
        iterations += 1;
        let Some((next, d)) = step(theta, &cur, xs) else {
            break;
        };
        theta = next;
        cur = d;
        gradient_norm = norm(cur.grad) / scale;
    }

    let params = GompertzParams::new(theta.0.exp(), theta.1.exp())?;
    Ok(FitResult {
        params: FittedParams::Gompertz(params),
        loglik: cur.value,
        converged: gradient_norm < config.gradient_tolerance,
        iterations,
        gradient_norm,
        residual_rms: None,
        observations: n,
        warnings: Vec::new(),
    })
}

/// One accepted move uphill, or `None` if neither direction makes progress.
fn step(theta: (f64, f64), cur: &Derivs, xs: &[f64]) -> Option<((f64, f64), Derivs)> {
    let [g0, g1] = cur.grad;
    let [[h00, h01], [_, h11]] = cur.hess;
    let det = h00 * h11 - h01 * h01;
    let newton = (h00 < 0.0 && det > 0.0).then(|| [-(h11 * g0 - h01 * g1) / det, -(h00 * g1 - h01 * g0) / det]);
    let ascent = {
        let g = norm(cur.grad);
        [0.1 * g0 / g, 0.1 * g1 / g]
    };
    for dir in newton.into_iter().chain([ascent]) {
        // At most one unit in log space per iteration.
        let len = norm(dir);
        let dir = if len > 1.0 { [dir[0] / len, dir[1] / len] } else { dir };
        let mut s = 1.0;
        for _ in 0..60 {
            let trial = (theta.0 + s * dir[0], theta.1 + s * dir[1]);
            if let Some(d) = evaluate(trial.0, trial.1, xs) {
                // Close to the optimum the likelihood gain drops below
                // rounding; a shrinking gradient then decides.
                let slack = 1e-13 * cur.value.abs();
                if d.value > cur.value || (d.value >= cur.value - slack && norm(d.grad) < norm(cur.grad)) {
                    return Some((trial, d));
                }
            }
            s *= 0.5;
        }
    }
    None
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Start from a regression of the log empirical hazard on age, using
/// equal-count age bins. `None` if the hazard does not rise with age.
fn hazard_histogram_start(xs: &[f64]) -> Option<(f64, f64)> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let bins = ((n as f64).sqrt() as usize).clamp(5, 50).min(n / 2);
    let edges: Vec<usize> = (0..=bins).map(|j| j * n / bins).collect();
    let (mut mids, mut logs, mut weights) = (Vec::new(), Vec::new(), Vec::new());
    // The last bin empties the cohort, so its hazard estimate is infinite.
    for w in edges.windows(2).take(bins - 1) {
        let (lo, hi) = (sorted[w[0]], sorted[w[1]]);
        let deaths = (w[1] - w[0]) as f64;
        let at_risk = (n - w[0]) as f64;
        if hi <= lo {
            continue;
        }
        let hazard = -(-deaths / at_risk).ln_1p() / (hi - lo);
        mids.push(0.5 * (lo + hi));
        logs.push(hazard.ln());
        weights.push(deaths);
    }
    if mids.len() < 2 || mids.iter().all(|&m| m == mids[0]) {
        return None;
    }
    let (slope, intercept) = weighted_line(&mids, &logs, &weights);
    // ln hazard = ln(bη) + bx.
    let ln_eta = intercept - slope.ln();
    (slope > 0.0 && slope.is_finite() && ln_eta.is_finite()).then(|| (ln_eta, slope.ln()))
}

/// `b = 1/sd`, with `η` placing the median at the sample median.
fn median_start(xs: &[f64]) -> (f64, f64) {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    let b = 1.0 / sd;
    let eta = LN_2 / (b * median).exp_m1();
    let eta = if eta > 0.0 && eta.is_finite() { eta } else { 1.0 };
    (eta.ln(), b.ln())
}
