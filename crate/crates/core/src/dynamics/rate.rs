//! Interbank interest-rate process.
//!
//! Ordinary step: `r' = (1 + alpha) r + eps`. After a cascade that destroyed
//! `|dE|` of equity the step gains a source term
//! `alpha * delta * log_{1+alpha}(|dE| / phi)`, floored at zero.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::params::Parameters;

/// One rate update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateStep {
    pub previous: f64,
    pub next: f64,
    pub noise: f64,
    pub source: f64,
    /// The raw update fell below the floor and was clamped.
    pub floored: bool,
}

impl RateStep {
    /// `r'/r - 1`, the relative revaluation of every interbank position.
    pub fn growth(&self) -> f64 {
        self.next / self.previous - 1.0
    }
}

/// `(1 + alpha) r + eps`.
pub fn small_step(rate: f64, alpha: f64, noise: f64) -> f64 {
    (1.0 + alpha) * rate + noise
}

/// `alpha * delta * log_{1+alpha}(ratio)`, zero when `ratio <= 1`.
///
/// For `alpha == 0` the limit `delta * ln(ratio)` is used.
pub fn jump_source(alpha: f64, delta: f64, ratio: f64) -> f64 {
    if !(ratio > 1.0) {
        return 0.0;
    }
    if alpha == 0.0 {
        return delta * ratio.ln();
    }
    alpha * delta * ratio.ln() / alpha.ln_1p()
}

/// `(1 + alpha) r + source + eps` with the source computed from `|dE| / phi`.
pub fn jump_step(rate: f64, alpha: f64, delta: f64, loss_ratio: f64, noise: f64) -> f64 {
    small_step(rate, alpha, noise) + jump_source(alpha, delta, loss_ratio)
}

/// Stateful rate process with its own noise stream.
#[derive(Debug, Clone)]
pub struct RateProcess {
    rate: f64,
    alpha: f64,
    delta: f64,
    floor: f64,
    noise: Option<Normal<f64>>,
    rng: ChaCha8Rng,
}

impl RateProcess {
    pub fn new(params: &Parameters, rate: f64, rng: ChaCha8Rng) -> Self {
        let noise = (params.sigma > 0.0).then(|| Normal::new(0.0, params.sigma).expect("sigma validated"));
        Self {
            rate,
            alpha: params.alpha,
            delta: params.delta,
            floor: params.rate_floor,
            noise,
            rng,
        }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    fn draw(&mut self) -> f64 {
        match &self.noise {
            Some(n) => n.sample(&mut self.rng),
            None => 0.0,
        }
    }

    fn commit(&mut self, raw: f64, noise: f64, source: f64) -> RateStep {
        let previous = self.rate;
        let floored = !(raw > self.floor);
        let next = if floored { self.floor } else { raw };
        if floored {
            log::debug!("rate update {raw} clamped to floor {}", self.floor);
        }
        self.rate = next;
        RateStep {
            previous,
            next,
            noise,
            source,
            floored,
        }
    }

    /// Ordinary drift step with a fresh noise draw.
    pub fn step_small(&mut self) -> RateStep {
        let eps = self.draw();
        let raw = small_step(self.rate, self.alpha, eps);
        self.commit(raw, eps, 0.0)
    }

    /// Post-cascade step. `delta_e` is the (non-positive) net equity change of
    /// the cascade and `phi` the exogenous shock size in the same unit.
    pub fn step_jump(&mut self, delta_e: f64, phi: f64) -> RateStep {
        if delta_e == 0.0 {
            return self.step_small();
        }
        let eps = self.draw();
        let source = jump_source(self.alpha, self.delta, delta_e.abs() / phi);
        let raw = small_step(self.rate, self.alpha, eps) + source;
        self.commit(raw, eps, source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn quiet(alpha: f64) -> Parameters {
        Parameters {
            alpha,
            sigma: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn small_step_substitution() {
        assert_eq!(small_step(1.0, 1e-3, 0.0), 1.001);
    }

    #[test]
    fn noiseless_process_compounds() {
        let p = quiet(1e-3);
        let mut proc = RateProcess::new(&p, 1.0, ChaCha8Rng::seed_from_u64(0));
        let mut expected = 1.0f64;
        for _ in 0..100 {
            proc.step_small();
            expected *= 1.001;
        }
        assert!((proc.rate() - expected).abs() <= 1e-12 * expected);
        assert!((proc.rate() - 1.001f64.powi(100)).abs() <= 1e-12 * expected);
    }

    #[test]
    fn unit_loss_ratio_reduces_to_small_step() {
        assert_eq!(jump_source(1e-3, 1e-2, 1.0), 0.0);
        assert_eq!(jump_step(1.3, 1e-3, 1e-2, 1.0, 0.01), small_step(1.3, 1e-3, 0.01));
        // below one the source is floored, not negative
        assert_eq!(jump_source(1e-3, 1e-2, 0.2), 0.0);
    }

    #[test]
    fn jump_grows_logarithmically() {
        let a = jump_source(1e-3, 1e-2, 10.0);
        let b = jump_source(1e-3, 1e-2, 100.0);
        let c = jump_source(1e-3, 1e-2, 1000.0);
        assert!(a < b && b < c);
        assert!(((c - b) - (b - a)).abs() < 1e-12);
    }

    #[test]
    fn change_of_base_at_e() {
        let (alpha, delta) = (1e-3, 1e-2);
        let inc = jump_step(1.0, alpha, delta, std::f64::consts::E, 0.0) - 1.0;
        let natural = alpha * (1.0 + delta / (1.0 + alpha).ln());
        let via_log_base = alpha * 1.0 + alpha * delta * std::f64::consts::E.log(1.0 + alpha);
        assert!((inc - natural).abs() < 1e-12 * natural);
        assert!((inc - via_log_base).abs() < 1e-12);
    }

    #[test]
    fn floor_clamps_large_negative_noise() {
        let mut p = quiet(0.0);
        p.rate_floor = 1e-6;
        let mut proc = RateProcess::new(&p, 1e-6, ChaCha8Rng::seed_from_u64(0));
        proc.rate = 1e-6;
        let step = proc.commit(-5.0, -5.0, 0.0);
        assert!(step.floored);
        assert_eq!(proc.rate(), 1e-6);
    }

    #[test]
    fn zero_loss_jump_is_small_step() {
        let p = quiet(1e-3);
        let mut a = RateProcess::new(&p, 1.0, ChaCha8Rng::seed_from_u64(0));
        let mut b = a.clone();
        assert_eq!(a.step_jump(0.0, 1.0).next, b.step_small().next);
    }
}
