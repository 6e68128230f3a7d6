//! Test martingale over probability-integral-transformed entropies.
//!
//! Each step multiplies the wealth by `b(u) = 1 + epsilon (u - 0.5)`. Under
//! the uniform null `E[b(u)] = 1`, so the wealth is a non-negative martingale
//! started at 1 and Ville's inequality bounds the chance it ever reaches
//! `1 / alpha` by `alpha`. Wealth is tracked in log space because shifted
//! streams push it far beyond `f64` range.

use crate::error::{Error, Result};

/// Largest admissible |epsilon| for `b(u)` to stay non-negative on [0, 1].
pub const MAX_BET: f64 = 2.0;

/// The per-step wealth multiplier.
pub fn bet(epsilon: f64, u: f64) -> Result<f64> {
    if !(epsilon.abs() <= MAX_BET) {
        return Err(Error::Contract(format!(
            "|epsilon| = {} exceeds 2",
            epsilon.abs()
        )));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Input(format!("u = {u} outside [0, 1]")));
    }
    Ok(1.0 + epsilon * (u - 0.5))
}

/// Keeps u away from the exact endpoints so a maximal bet can never zero the wealth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UClamp {
    lo: f64,
    hi: f64,
}

impl UClamp {
    /// `[1/(n+1), n/(n+1)]` for a calibration set of size n.
    pub fn for_calibration_size(n: usize) -> Self {
        let denom = (n + 1) as f64;
        Self {
            lo: 1.0 / denom,
            hi: n as f64 / denom,
        }
    }

    /// No clamping; used for raw uniform streams in tests and simulations.
    pub fn none() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn apply(&self, u: f64) -> f64 {
        u.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlarmConfig {
    alpha: f64,
}

impl AlarmConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn threshold(&self) -> f64 {
        1.0 / self.alpha
    }

    pub fn log_threshold(&self) -> f64 {
        -self.alpha.ln()
    }
}

impl Default for AlarmConfig {
    fn default() -> Self {
        Self { alpha: 0.01 }
    }
}

/// Mutable state of the wealth process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BettingState {
    epsilon: f64,
    log_wealth: f64,
    max_log_wealth: f64,
    step: u64,
}

impl Default for BettingState {
    fn default() -> Self {
        Self::new()
    }
}

impl BettingState {
    /// `S_0 = 1`, `epsilon = 0`.
    pub fn new() -> Self {
        Self {
            epsilon: 0.0,
            log_wealth: 0.0,
            max_log_wealth: 0.0,
            step: 0,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn log_wealth(&self) -> f64 {
        self.log_wealth
    }

    /// Running supremum of log-wealth, including `ln S_0 = 0`.
    pub fn max_log_wealth(&self) -> f64 {
        self.max_log_wealth
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    /// Installs the betting variable for the next round.
    pub fn set_epsilon(&mut self, epsilon: f64) -> Result<()> {
        if !(epsilon.abs() <= MAX_BET) {
            return Err(Error::Contract(format!(
                "|epsilon| = {} exceeds 2",
                epsilon.abs()
            )));
        }
        self.epsilon = epsilon;
        Ok(())
    }

    /// Places the bet on `u` (already clamped by the caller) and returns `b`.
    pub fn update_wealth(&mut self, u: f64) -> Result<f64> {
        let b = bet(self.epsilon, u)?;
        self.log_wealth += b.ln();
        self.max_log_wealth = self.max_log_wealth.max(self.log_wealth);
        self.step += 1;
        Ok(b)
    }

    /// Latched alarm: true once the running wealth has reached `1 / alpha`.
    pub fn alarm(&self, config: &AlarmConfig) -> bool {
        self.max_log_wealth >= config.log_threshold()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sfogd::{SfogdConfig, SfogdState};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bet_examples() {
        for u in [0.0, 0.3, 1.0] {
            assert_eq!(bet(0.0, u).unwrap(), 1.0);
        }
        assert_eq!(bet(2.0, 0.75).unwrap(), 1.5);
        for eps in [-2.0, -0.7, 1.3, 2.0] {
            assert_eq!(bet(eps, 0.5).unwrap(), 1.0);
        }
        assert!(matches!(bet(2.1, 0.5), Err(Error::Contract(_))));
        assert!(matches!(bet(f64::NAN, 0.5), Err(Error::Contract(_))));
    }

    #[test]
    fn bet_is_non_negative() {
        for i in 0..=40 {
            let eps = -2.0 + 0.1 * i as f64;
            for j in 0..=20 {
                let u = j as f64 / 20.0;
                let b = bet(eps.clamp(-2.0, 2.0), u).unwrap();
                assert!((0.0..=2.0 + 1e-15).contains(&b));
            }
        }
    }

    #[test]
    fn wealth_examples() {
        let mut s = BettingState::new();
        s.update_wealth(0.9).unwrap();
        assert_eq!(s.log_wealth(), 0.0);
        assert_eq!(s.step(), 1);

        let mut s = BettingState::new();
        s.set_epsilon(1.0).unwrap();
        s.update_wealth(1.0).unwrap();
        assert!((s.log_wealth() - 1.5f64.ln()).abs() < 1e-15);
        assert!((s.log_wealth() - 0.4055).abs() < 1e-4);
        assert_eq!(s.epsilon(), 1.0);
    }

    #[test]
    fn log_wealth_does_not_overflow() {
        let mut s = BettingState::new();
        s.set_epsilon(1.8).unwrap();
        for _ in 0..10_000 {
            s.update_wealth(0.95).unwrap();
        }
        // 10^200 in nats is about 460.5; this stream goes far beyond it
        assert!(s.log_wealth().is_finite());
        assert!(s.log_wealth() > 200.0 * 10f64.ln());
    }

    #[test]
    fn alarm_threshold() {
        let cfg = AlarmConfig::new(0.01).unwrap();
        assert!((cfg.threshold() - 100.0).abs() < 1e-9);
        let s = BettingState::new();
        assert!(!s.alarm(&AlarmConfig::new(0.05).unwrap()));
        assert!(AlarmConfig::new(1.0).is_err());
        assert!(AlarmConfig::new(0.0).is_err());
    }

    #[test]
    fn alarm_latches_on_running_max() {
        let cfg = AlarmConfig::new(0.5).unwrap();
        let mut s = BettingState::new();
        s.set_epsilon(2.0).unwrap();
        s.update_wealth(1.0).unwrap(); // S = 2
        assert!(s.alarm(&cfg));
        s.update_wealth(0.1).unwrap(); // S = 0.4
        assert!(s.log_wealth() < cfg.log_threshold());
        assert!(s.alarm(&cfg));
    }

    #[test]
    fn fair_at_zero_epsilon() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = BettingState::new();
        for _ in 0..1000 {
            s.update_wealth(rng.random::<f64>()).unwrap();
        }
        assert_eq!(s.log_wealth(), 0.0);
    }

    #[test]
    fn clamp_bounds() {
        let c = UClamp::for_calibration_size(4);
        assert_eq!(c.apply(0.0), 0.2);
        assert_eq!(c.apply(1.0), 0.8);
        assert_eq!(c.apply(0.5), 0.5);
        assert_eq!(UClamp::none().apply(1.0), 1.0);
    }

    /// Monte-Carlo alarm rate on null streams with the learned betting policy.
    #[test]
    fn null_alarm_rate_bounded() {
        let alarm = AlarmConfig::new(0.05).unwrap();
        let cfg = SfogdConfig::default();
        let runs = 300;
        let mut fired = 0;
        for seed in 0..runs {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = BettingState::new();
            let mut learner = SfogdState::new();
            for _ in 0..2_000 {
                let u: f64 = rng.random();
                s.update_wealth(u).unwrap();
                learner.step(u, &cfg);
                s.set_epsilon(learner.epsilon()).unwrap();
            }
            fired += s.alarm(&alarm) as u32;
        }
        let rate = fired as f64 / runs as f64;
        let se = (0.05f64 * 0.95 / runs as f64).sqrt();
        assert!(rate <= 0.05 + 2.0 * se, "alarm rate {rate}");
    }
}
