//! Model constants and run-policy knobs.

use serde::{Deserialize, Serialize};

use crate::error::ParamError;

/// Scalar model constants. Defaults are the reference calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    /// Target density of the reconstructed interbank network.
    pub d: f64,
    /// Loss given default.
    pub lambda: f64,
    /// Fraction of lost funding that must be replaced by asset sales.
    pub rho: f64,
    /// Size of the exogenous shock, in input currency.
    pub phi: f64,
    /// Initial interbank interest rate.
    pub r0: f64,
    /// Per-step rate drift factor.
    pub alpha: f64,
    /// Standard deviation of the additive rate noise.
    pub sigma: f64,
    /// Prefactor of the post-cascade rate jump.
    pub delta: f64,
    /// Freeze threshold on total relative equity.
    pub eps_c: f64,
    /// Upper bound on the fire-sale depricing factor.
    pub gamma_cap: f64,
    /// Lower bound on the interest rate.
    pub rate_floor: f64,
    /// Safety valve on the number of simulation steps.
    pub max_iterations: u64,
}

impl Default for Parameters {
    fn default() -> Self {
        Self {
            d: 0.1,
            lambda: 1.0,
            rho: 1.0,
            phi: 1e8,
            r0: 1.0,
            alpha: 1e-3,
            sigma: 1e-3,
            delta: 1e-2,
            eps_c: 0.37,
            gamma_cap: 1e3,
            rate_floor: 1e-6,
            max_iterations: 100_000,
        }
    }
}

impl Parameters {
    /// Names accepted by [`Parameters::set`].
    pub const NAMES: [&'static str; 12] = [
        "d",
        "lambda",
        "rho",
        "phi",
        "r0",
        "alpha",
        "sigma",
        "delta",
        "eps_c",
        "gamma_cap",
        "rate_floor",
        "max_iterations",
    ];

    /// Overrides one field by its symbol name, e.g. `set("alpha", "1e-3")`.
    pub fn set(&mut self, name: &str, value: &str) -> Result<(), ParamError> {
        let bad = || ParamError::BadValue {
            name: name.to_string(),
            value: value.to_string(),
        };
        if name == "max_iterations" {
            self.max_iterations = value.trim().parse().map_err(|_| bad())?;
            return Ok(());
        }
        let v: f64 = value.trim().parse().map_err(|_| bad())?;
        let slot = match name {
            "d" => &mut self.d,
            "lambda" => &mut self.lambda,
            "rho" => &mut self.rho,
            "phi" => &mut self.phi,
            "r0" => &mut self.r0,
            "alpha" => &mut self.alpha,
            "sigma" => &mut self.sigma,
            "delta" => &mut self.delta,
            "eps_c" => &mut self.eps_c,
            "gamma_cap" => &mut self.gamma_cap,
            "rate_floor" => &mut self.rate_floor,
            _ => return Err(ParamError::UnknownName(name.to_string())),
        };
        *slot = v;
        Ok(())
    }

    /// Parses and applies a `name=value` assignment.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<(), ParamError> {
        let (name, value) = assignment
            .split_once('=')
            .ok_or_else(|| ParamError::Malformed(assignment.to_string()))?;
        self.set(name.trim(), value)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let check = |ok: bool, name: &str, rule: &str| {
            if ok {
                Ok(())
            } else {
                Err(ParamError::OutOfRange {
                    name: name.to_string(),
                    rule: rule.to_string(),
                })
            }
        };
        let finite = [
            self.d,
            self.lambda,
            self.rho,
            self.phi,
            self.r0,
            self.alpha,
            self.sigma,
            self.delta,
            self.eps_c,
            self.gamma_cap,
            self.rate_floor,
        ];
        check(finite.iter().all(|v| v.is_finite()), "*", "finite")?;
        check(self.d > 0.0 && self.d <= 1.0, "d", "0 < d <= 1")?;
        check((0.0..=1.0).contains(&self.lambda), "lambda", "0 <= lambda <= 1")?;
        check((0.0..=1.0).contains(&self.rho), "rho", "0 <= rho <= 1")?;
        check(self.phi > 0.0, "phi", "phi > 0")?;
        check(self.r0 > 0.0, "r0", "r0 > 0")?;
        check(self.alpha >= 0.0, "alpha", "alpha >= 0")?;
        check(self.sigma >= 0.0, "sigma", "sigma >= 0")?;
        check(self.delta >= 0.0, "delta", "delta >= 0")?;
        // eps_c = 1 is accepted as the degenerate "freeze immediately" threshold.
        check(self.eps_c > 0.0 && self.eps_c <= 1.0, "eps_c", "0 < eps_c <= 1")?;
        check(self.gamma_cap > 0.0, "gamma_cap", "gamma_cap > 0")?;
        check(
            self.rate_floor > 0.0 && self.rate_floor < self.r0,
            "rate_floor",
            "0 < rate_floor < r0",
        )?;
        check(self.max_iterations > 0, "max_iterations", "max_iterations > 0")
    }

    /// Copy of `self` with every currency-denominated field divided by `unit`.
    pub(crate) fn in_units(&self, unit: f64) -> Self {
        Self {
            phi: self.phi / unit,
            ..*self
        }
    }
}
