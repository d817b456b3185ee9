//! Small numerical kernels shared across modules.

use std::f64::consts::PI;

/// Natural log of the complementary error function, finite far beyond the
/// point where `erfc` itself underflows.
pub(crate) fn ln_erfc(x: f64) -> f64 {
    if x < 25.0 {
        return libm::erfc(x).ln();
    }
    // Asymptotic expansion erfc(x) ~ e^{-x²}/(x√π) · Σ (-1)^k (2k-1)!! / (2x²)^k.
    // At x ≥ 25 the terms shrink by at least 1/50 per step.
    let inv = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut series = 1.0;
    for k in 1..12 {
        term *= -((2 * k - 1) as f64) * inv;
        series += term;
    }
    -x * x - (x * PI.sqrt()).ln() + series.ln()
}

/// Bisection on a predicate that is `false` on `[lo, root)` and `true` on
/// `[root, hi]`. Returns the final `(lo, hi)` bracket.
pub(crate) fn bisect_predicate<F: FnMut(f64) -> bool>(
    mut lo: f64,
    mut hi: f64,
    abs_tol: f64,
    mut is_past: F,
) -> (f64, f64) {
    for _ in 0..200 {
        if hi - lo <= abs_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if is_past(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Weighted least-squares line through `(x, y)` pairs: `(slope, intercept)`.
pub(crate) fn weighted_line(xs: &[f64], ys: &[f64], ws: &[f64]) -> (f64, f64) {
    let total: f64 = ws.iter().sum();
    let mx = xs.iter().zip(ws).map(|(x, w)| w * x).sum::<f64>() / total;
    let my = ys.iter().zip(ws).map(|(y, w)| w * y).sum::<f64>() / total;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for ((x, y), w) in xs.iter().zip(ys).zip(ws) {
        sxy += w * (x - mx) * (y - my);
        sxx += w * (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_erfc_matches_direct_where_representable() {
        for &x in &[-3.0, 0.0, 0.5, 2.0, 10.0, 20.0, 24.9] {
            assert!((ln_erfc(x) - libm::erfc(x).ln()).abs() < 1e-13 * ln_erfc(x).abs().max(1.0));
        }
    }

    #[test]
    fn ln_erfc_is_continuous_across_the_switch() {
        let below = ln_erfc(25.0 - 1e-9);
        let above = ln_erfc(25.0);
        // derivative is about -2x = -50
        assert!((below - above - 50.0 * 1e-9).abs() < 1e-10 * above.abs());
    }

    #[test]
    fn weighted_line_ignores_zero_weight_outlier() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 100.0];
        let (slope, intercept) = weighted_line(&xs, &ys, &[1.0, 2.0, 1.0, 0.0]);
        assert!((slope - 2.0).abs() < 1e-14 && (intercept - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ln_erfc_far_tail_is_finite() {
        let v = ln_erfc(100.0);
        assert!(v.is_finite());
        assert!((v + 10_000.0 + (100.0 * PI.sqrt()).ln()).abs() < 1e-4);
    }
}
