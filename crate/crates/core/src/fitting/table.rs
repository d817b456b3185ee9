//! Life-table fits.
//!
//! A row's one-year integrated hazard is `μ = -ln(1 - qx)`, and under the
//! Gompertz–Makeham law `μ(x) = η e^{bx} (e^b - 1) + λ` exactly. Residuals are
//! `ln(model) - ln μ`, weighted by `((1 - qx) μ / qx)²`: the inverse variance of
//! `ln μ` when qx carries a fixed relative error. Rows with qx pressed against
//! 1 (where `ln μ` is poorly determined) thus count for little.

use super::{FitConfig, FitError, FitResult, FitWarning, FittedParams, MIN_TABLE_ROWS};
use crate::lifetable_io::LifeTable;
use crate::models::{GompertzParams, MakehamParams};
use crate::numeric::weighted_line;

/// Starting `b` when the data show no increase of hazard with age.
const FLAT_SLOPE: f64 = 1e-6;
const PROFILE_GRID: usize = 32;

struct Rows {
    x: Vec<f64>,
    /// `ln μ`
    y: Vec<f64>,
    mu: Vec<f64>,
    w: Vec<f64>,
    total_weight: f64,
}

impl Rows {
    fn usable(table: &LifeTable) -> Result<Self, FitError> {
        let mut rows = Rows {
            x: Vec::new(),
            y: Vec::new(),
            mu: Vec::new(),
            w: Vec::new(),
            total_weight: 0.0,
        };
        for &(age, qx) in table.rows() {
            if !(qx > 0.0 && qx < 1.0) {
                continue;
            }
            let mu = -(-qx).ln_1p();
            let w = ((1.0 - qx) * mu / qx).powi(2);
            rows.x.push(f64::from(age));
            rows.y.push(mu.ln());
            rows.mu.push(mu);
            rows.w.push(w);
            rows.total_weight += w;
        }
        if rows.x.len() < MIN_TABLE_ROWS {
            return Err(FitError::InsufficientData {
                available: rows.x.len(),
                required: MIN_TABLE_ROWS,
            });
        }
        Ok(rows)
    }

    fn len(&self) -> usize {
        self.x.len()
    }
}

/// `ln(e^b - 1)`, finite for every `b > 0`.
fn ln_expm1(b: f64) -> f64 {
    b + (-(-b).exp_m1()).ln()
}

/// `b e^b / (e^b - 1)`, the `ln b`-derivative of `ln(e^b - 1)`.
fn dln_expm1(b: f64) -> f64 {
    b / -(-b).exp_m1()
}

/// Parameters `(ln η, ln b, λ)`; λ is held at zero or fixed when not free.
type Theta = [f64; 3];

#[derive(Clone, Copy, PartialEq)]
enum Free {
    /// `(ln η, ln b)` with λ fixed.
    Gompertz,
    /// All three, with λ ≥ 0.
    Makeham,
}

impl Free {
    fn dim(self) -> usize {
        match self {
            Free::Gompertz => 2,
            Free::Makeham => 3,
        }
    }
}

struct Eval {
    /// `½ Σ w r² / Σ w`
    objective: f64,
    /// Gradient of `objective`.
    grad: [f64; 3],
    /// Gauss–Newton approximation `JᵀWJ / Σ w`.
    normal: [[f64; 3]; 3],
}

fn evaluate(theta: Theta, rows: &Rows) -> Option<Eval> {
    let [ln_eta, ln_b, lambda] = theta;
    let b = ln_b.exp();
    if !(b > 0.0 && b.is_finite() && ln_eta.is_finite() && lambda >= 0.0) {
        return None;
    }
    let (shift, slope_term) = (ln_expm1(b), dln_expm1(b));
    let mut e = Eval {
        objective: 0.0,
        grad: [0.0; 3],
        normal: [[0.0; 3]; 3],
    };
    for i in 0..rows.len() {
        let g = (ln_eta + b * rows.x[i] + shift).exp();
        let model = g + lambda;
        if !(model > 0.0 && model.is_finite()) {
            return None;
        }
        let r = model.ln() - rows.y[i];
        let share = g / model;
        let jac = [share, share * (b * rows.x[i] + slope_term), 1.0 / model];
        let w = rows.w[i] / rows.total_weight;
        e.objective += 0.5 * w * r * r;
        for p in 0..3 {
            e.grad[p] += w * r * jac[p];
            for q in 0..3 {
                e.normal[p][q] += w * jac[p] * jac[q];
            }
        }
    }
    e.objective.is_finite().then_some(e)
}

/// Gradient restricted to the free coordinates, with the λ component
/// dropped when λ sits on its bound and the objective wants it lower.
fn projected_grad(theta: Theta, e: &Eval, free: Free) -> Vec<f64> {
    let mut g = e.grad[..free.dim()].to_vec();
    if free == Free::Makeham && theta[2] == 0.0 && g[2] > 0.0 {
        g[2] = 0.0;
    }
    g
}

fn vnorm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gaussian elimination with partial pivoting on an `n × n` system.
fn solve(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col] == 0.0 || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (rhs[row] - tail) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

struct Solution {
    theta: Theta,
    eval: Eval,
    iterations: usize,
    gradient_norm: f64,
}

/// Levenberg–Marquardt on the free coordinates of `theta`.
fn levenberg_marquardt(start: Theta, rows: &Rows, free: Free, config: &FitConfig) -> Option<Solution> {
    let dim = free.dim();
    let mut theta = start;
    let mut cur = evaluate(theta, rows)?;
    let mut damping = 1e-3;
    let mut iterations = 0;
    let mut gnorm = vnorm(&projected_grad(theta, &cur, free));
    while gnorm >= config.gradient_tolerance && iterations < config.max_iterations {
        iterations += 1;
        let mut moved = false;
        while damping < 1e20 {
            let a: Vec<Vec<f64>> = (0..dim)
                .map(|p| {
                    (0..dim)
                        .map(|q| {
                            let base = cur.normal[p][q];
                            if p == q {
                                base + damping * base.max(1e-300)
                            } else {
                                base
                            }
                        })
                        .collect()
                })
                .collect();
            let rhs: Vec<f64> = cur.grad[..dim].iter().map(|g| -g).collect();
            let Some(delta) = solve(a, rhs) else {
                damping *= 10.0;
                continue;
            };
            let mut trial = theta;
            for p in 0..dim {
                trial[p] += delta[p];
            }
            if free == Free::Makeham {
                trial[2] = trial[2].max(0.0);
            }
            if let Some(e) = evaluate(trial, rows) {
                let slack = 1e-13 * cur.objective;
                let tg = vnorm(&projected_grad(trial, &e, free));
                if e.objective < cur.objective || (e.objective <= cur.objective + slack && tg < gnorm) {
                    theta = trial;
                    cur = e;
                    gnorm = tg;
                    damping = (damping / 10.0).max(1e-12);
                    moved = true;
                    break;
                }
            }
            damping *= 10.0;
        }
        if !moved {
            break;
        }
    }
    Some(Solution {
        theta,
        eval: cur,
        iterations,
        gradient_norm: gnorm,
    })
}

/// Starting `(ln η, ln b)` from a weighted regression of `ln(μ - λ)` on age:
/// the slope is `b` and the intercept `ln η + ln(e^b - 1)`.
fn regression_start(rows: &Rows, lambda: f64) -> (f64, f64) {
    let ys: Vec<f64> = rows.mu.iter().map(|m| (m - lambda).ln()).collect();
    let (slope, intercept) = weighted_line(&rows.x, &ys, &rows.w);
    let b = if slope > 0.0 && slope.is_finite() { slope } else { FLAT_SLOPE };
    let ln_eta = if intercept.is_finite() {
        intercept - ln_expm1(b)
    } else {
        rows.y.iter().sum::<f64>() / rows.len() as f64 - ln_expm1(b)
    };
    (ln_eta, b.ln())
}

/// Below this `b × (age span)` the fitted hazard is effectively constant.
const FLAT_HAZARD_SPREAD: f64 = 1e-3;

fn finish(sol: &Solution, rows: &Rows, params: FittedParams, config: &FitConfig) -> FitResult {
    let span = rows.x[rows.len() - 1] - rows.x[0];
    let mut warnings = Vec::new();
    if params.gompertz().b() * span < FLAT_HAZARD_SPREAD {
        warnings.push(FitWarning::FlatHazard);
    }
    let weighted_ssr = 2.0 * sol.eval.objective * rows.total_weight;
    FitResult {
        params,
        loglik: -0.5 * weighted_ssr,
        converged: sol.gradient_norm < config.gradient_tolerance,
        iterations: sol.iterations,
        gradient_norm: sol.gradient_norm,
        residual_rms: Some((2.0 * sol.eval.objective).sqrt()),
        observations: rows.len(),
        warnings,
    }
}

fn gompertz_solution(rows: &Rows, config: &FitConfig) -> Result<Solution, FitError> {
    let (ln_eta, ln_b) = match config.initial_params {
        Some(g) => (g.ln_eta(), g.b().ln()),
        None => regression_start(rows, 0.0),
    };
    levenberg_marquardt([ln_eta, ln_b, 0.0], rows, Free::Gompertz, config).ok_or(FitError::Overflow {
        eta: ln_eta.exp(),
        b: ln_b.exp(),
    })
}

/// Gompertz fit to the rows with `0 < qx < 1`.
pub fn fit_gompertz_from_lifetable(table: &LifeTable, config: &FitConfig) -> Result<FitResult, FitError> {
    config.validate()?;
    let rows = Rows::usable(table)?;
    let sol = gompertz_solution(&rows, config)?;
    let params = GompertzParams::new(sol.theta[0].exp(), sol.theta[1].exp())?;
    Ok(finish(&sol, &rows, FittedParams::Gompertz(params), config))
}

/// Gompertz–Makeham fit to the rows with `0 < qx < 1`.
///
/// λ is profiled over `[0, min μ)` (a grid, then golden-section search), each
/// profile point being a Gompertz fit to `μ - λ`; all three parameters are
/// then refined together. The Gompertz fit (λ = 0) is kept if it is at least
/// as good, so this residual never exceeds the Gompertz one.
pub fn fit_makeham_from_lifetable(table: &LifeTable, config: &FitConfig) -> Result<FitResult, FitError> {
    config.validate()?;
    let rows = Rows::usable(table)?;
    let gompertz = gompertz_solution(&rows, config)?;

    let lambda_max = rows.mu.iter().copied().fold(f64::INFINITY, f64::min);
    let profile = |lambda: f64| -> Option<Solution> {
        let (a, c) = regression_start(&rows, lambda);
        levenberg_marquardt([a, c, lambda], &rows, Free::Gompertz, config)
    };
    let score = |s: &Option<Solution>| s.as_ref().map_or(f64::INFINITY, |s| s.eval.objective);

    let grid: Vec<f64> = (0..PROFILE_GRID).map(|k| lambda_max * k as f64 / PROFILE_GRID as f64).collect();
    let scores: Vec<f64> = grid.iter().map(|&l| score(&profile(l))).collect();
    let best = (0..PROFILE_GRID).min_by(|&i, &j| scores[i].total_cmp(&scores[j])).unwrap_or(0);
    let (mut lo, mut hi) = (grid[best.saturating_sub(1)], grid.get(best + 1).copied().unwrap_or(lambda_max));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let (l1, l2) = (hi - ratio * (hi - lo), lo + ratio * (hi - lo));
        if score(&profile(l1)) <= score(&profile(l2)) {
            hi = l2;
        } else {
            lo = l1;
        }
    }
    let mut candidates = vec![grid[best], 0.5 * (lo + hi)];
    candidates.retain(|l| l.is_finite());
    let start = candidates
        .into_iter()
        .filter_map(profile)
        .min_by(|s, t| s.eval.objective.total_cmp(&t.eval.objective));

    let joint = start.and_then(|s| levenberg_marquardt(s.theta, &rows, Free::Makeham, config));

    let sol = match joint {
        Some(j) if j.eval.objective < gompertz.eval.objective => j,
        _ => {
            // Report the Gompertz optimum as a point of the three-parameter problem.
            let theta = [gompertz.theta[0], gompertz.theta[1], 0.0];
            let eval = evaluate(theta, &rows).ok_or(FitError::Overflow {
                eta: theta[0].exp(),
                b: theta[1].exp(),
            })?;
            let gradient_norm = vnorm(&projected_grad(theta, &eval, Free::Makeham));
            Solution {
                theta,
                eval,
                iterations: gompertz.iterations,
                gradient_norm,
            }
        }
    };
    let params = MakehamParams::new(sol.theta[2], GompertzParams::new(sol.theta[0].exp(), sol.theta[1].exp())?)?;
    Ok(finish(&sol, &rows, FittedParams::Makeham(params), config))
}
