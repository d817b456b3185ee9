use super::ModelError;

/// Gompertz law: survival `exp(-η (e^{bt} - 1))`, hazard `b η e^{bt}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GompertzParams {
    eta: f64,
    b: f64,
}

impl GompertzParams {
    pub fn new(eta: f64, b: f64) -> Result<Self, ModelError> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "eta",
                value: eta,
                reason: "must be a finite positive number",
            });
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "b",
                value: b,
                reason: "must be a finite positive number",
            });
        }
        Ok(Self { eta, b })
    }

    /// Parameters with the given scale `b` whose density peaks at `mode`.
    pub fn with_mode(mode: f64, b: f64) -> Result<Self, ModelError> {
        Self::new(mode_to_eta(mode, b)?, b)
    }

    /// Parameters with the given shape `eta` whose density peaks at `mode`.
    pub fn with_mode_and_eta(mode: f64, eta: f64) -> Result<Self, ModelError> {
        Self::new(eta, eta_to_b(mode, eta)?)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn ln_eta(&self) -> f64 {
        self.eta.ln()
    }

    /// Age of peak density: `ln(1/η) / b` when `η < 1`, otherwise 0 (the
    /// density is then decreasing on `[0, ∞)`).
    pub fn mode(&self) -> f64 {
        if self.eta < 1.0 {
            -self.eta.ln() / self.b
        } else {
            0.0
        }
    }

    /// `η e^{bt}` evaluated in log space so that it saturates to +∞ instead of
    /// producing `0 * ∞`.
    fn eta_growth(&self, t: f64) -> f64 {
        (self.ln_eta() + self.b * t).exp()
    }

    pub(crate) fn log_survival(&self, t: f64) -> f64 {
        let bt = self.b * t;
        if bt < 1.0 {
            -self.eta * bt.exp_m1()
        } else {
            // η(e^{bt} - 1) = η e^{bt} (1 - e^{-bt})
            -self.eta_growth(t) * (-(-bt).exp_m1())
        }
    }

    pub(crate) fn log_conditional_survival(&self, t: f64, dt: f64) -> f64 {
        let window = (self.b * dt).exp_m1();
        -(self.ln_eta() + self.b * t + window.ln()).exp()
    }

    pub(crate) fn pdf(&self, t: f64) -> f64 {
        (self.b.ln() + self.ln_eta() + self.b * t + self.log_survival(t)).exp()
    }

    pub(crate) fn hazard(&self, t: f64) -> f64 {
        (self.b.ln() + self.ln_eta() + self.b * t).exp()
    }

    pub(crate) fn quantile(&self, u: f64) -> f64 {
        // t = (1/b) ln(1 - ln(1-u)/η)
        (-(-u).ln_1p() / self.eta).ln_1p() / self.b
    }
}

/// Gompertz–Makeham law: Gompertz hazard plus a constant `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MakehamParams {
    lambda: f64,
    gompertz: GompertzParams,
}

impl MakehamParams {
    pub fn new(lambda: f64, gompertz: GompertzParams) -> Result<Self, ModelError> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "lambda",
                value: lambda,
                reason: "must be a finite non-negative number",
            });
        }
        Ok(Self { lambda, gompertz })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gompertz(&self) -> &GompertzParams {
        &self.gompertz
    }

    /// Age of peak density.
    ///
    /// With `g(t) = b η e^{bt}` the density has a stationary point where
    /// `b g = (λ + g)²`; the larger root is the interior maximum. The
    /// density at age 0 is compared against it since `f` can also peak there.
    pub fn mode(&self) -> f64 {
        if self.lambda == 0.0 {
            return self.gompertz.mode();
        }
        let b = self.gompertz.b;
        let disc = b * (b - 4.0 * self.lambda);
        if disc < 0.0 {
            return 0.0;
        }
        let g = 0.5 * ((b - 2.0 * self.lambda) + disc.sqrt());
        let g0 = self.gompertz.hazard(0.0);
        if g <= g0 {
            return 0.0;
        }
        let interior = (g / g0).ln() / b;
        if self.pdf(interior) > self.pdf(0.0) {
            interior
        } else {
            0.0
        }
    }

    pub(crate) fn log_survival(&self, t: f64) -> f64 {
        if self.lambda == 0.0 {
            return self.gompertz.log_survival(t);
        }
        -self.lambda * t + self.gompertz.log_survival(t)
    }

    pub(crate) fn log_conditional_survival(&self, t: f64, dt: f64) -> f64 {
        if self.lambda == 0.0 {
            return self.gompertz.log_conditional_survival(t, dt);
        }
        -self.lambda * dt + self.gompertz.log_conditional_survival(t, dt)
    }

    pub(crate) fn hazard(&self, t: f64) -> f64 {
        if self.lambda == 0.0 {
            return self.gompertz.hazard(t);
        }
        self.lambda + self.gompertz.hazard(t)
    }

    pub(crate) fn pdf(&self, t: f64) -> f64 {
        if self.lambda == 0.0 {
            return self.gompertz.pdf(t);
        }
        self.hazard(t) * self.log_survival(t).exp()
    }

    pub(crate) fn quantile(&self, u: f64) -> f64 {
        if self.lambda == 0.0 {
            return self.gompertz.quantile(u);
        }
        let target = -(-u).ln_1p();
        // The cumulative hazard dominates each of its two terms, which bounds
        // the root from above.
        let hi = (target / self.lambda).min(self.gompertz.quantile(u));
        let (lo, hi) = crate::numeric::bisect_predicate(0.0, hi, 0.0, |t| {
            -self.log_survival(t) >= target
        });
        0.5 * (lo + hi)
    }
}

/// Shape `η = e^{-b·mode}` that puts the Gompertz density peak at `mode`.
pub fn mode_to_eta(mode: f64, b: f64) -> Result<f64, ModelError> {
    check_mode(mode)?;
    if !(b > 0.0 && b.is_finite()) {
        return Err(ModelError::InvalidParameter {
            name: "b",
            value: b,
            reason: "must be a finite positive number",
        });
    }
    Ok((-b * mode).exp())
}

/// Scale `b = -ln(η)/mode` that puts the Gompertz density peak at `mode`.
pub fn eta_to_b(mode: f64, eta: f64) -> Result<f64, ModelError> {
    check_mode(mode)?;
    if !(eta > 0.0 && eta < 1.0) {
        return Err(ModelError::NoPositiveMode { eta });
    }
    Ok(-eta.ln() / mode)
}

fn check_mode(mode: f64) -> Result<(), ModelError> {
    if mode > 0.0 && mode.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name: "mode",
            value: mode,
            reason: "must be a finite positive age",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive_parameters() {
        assert!(GompertzParams::new(0.0, 1.0).is_err());
        assert!(GompertzParams::new(1.0, -1.0).is_err());
        assert!(GompertzParams::new(f64::NAN, 1.0).is_err());
        let g = GompertzParams::new(1.0, 1.0).unwrap();
        assert!(MakehamParams::new(-1e-3, g).is_err());
        assert!(MakehamParams::new(0.0, g).is_ok());
    }

    #[test]
    fn mode_parameterization_matches_table_columns() {
        let b = eta_to_b(75.0, (-25.0f64).exp()).unwrap();
        assert!((b - 1.0 / 3.0).abs() < 1e-15);
        let b = eta_to_b(75.0, (-75.0f64 / 8.0).exp()).unwrap();
        assert!((b - 0.125).abs() < 1e-15);
        let eta = mode_to_eta(75.0, 1.0 / 3.0).unwrap();
        assert!((eta / (-25.0f64).exp() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eta_at_least_one_has_no_positive_mode() {
        assert!(matches!(
            eta_to_b(75.0, 1.0),
            Err(ModelError::NoPositiveMode { .. })
        ));
        assert_eq!(GompertzParams::new(2.0, 0.1).unwrap().mode(), 0.0);
    }

    #[test]
    fn mode_is_positive_below_unit_shape() {
        let g = GompertzParams::new((-25.0f64).exp(), 1.0 / 3.0).unwrap();
        assert!((g.mode() - 75.0).abs() < 1e-12);
    }

    #[test]
    fn makeham_mode_is_a_density_peak() {
        let g = GompertzParams::new((-25.0f64).exp(), 1.0 / 3.0).unwrap();
        let m = MakehamParams::new(0.002, g).unwrap();
        let mode = m.mode();
        assert!(mode > 70.0 && mode < 80.0);
        assert!(m.pdf(mode) >= m.pdf(mode - 0.01));
        assert!(m.pdf(mode) >= m.pdf(mode + 0.01));
    }

    #[test]
    fn makeham_quantile_inverts_survival() {
        let g = GompertzParams::new((-25.0f64).exp(), 1.0 / 3.0).unwrap();
        let m = MakehamParams::new(0.002, g).unwrap();
        for &u in &[0.01, 0.2, 0.5, 0.9, 0.999] {
            let t = m.quantile(u);
            let cdf = -m.log_survival(t).exp_m1();
            assert!((cdf - u).abs() < 1e-12, "u={u} cdf={cdf}");
        }
    }
}
