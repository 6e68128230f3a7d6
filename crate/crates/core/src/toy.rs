//! One-dimensional two-Gaussian binary classifier with a single boundary offset.
//!
//! Classes `y = +/-1` are equiprobable with `x | y ~ N(y + shift, 1)`. At
//! `shift = 0` the Bayes posterior is `P(y = +1 | x) = sigmoid(2 x)`; the
//! adapted model moves the boundary to `omega`, giving `sigmoid(2 (x - omega))`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::ecdf::EmpiricalCdf;
use crate::error::{Error, Result};
use crate::losses::{self, MatchConfig, ProbVector};

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Entropy of `(sigmoid(t), sigmoid(-t))` in nats, stable for large |t|.
pub fn binary_entropy_logit(t: f64) -> f64 {
    let a = t.abs();
    sigmoid(a) * softplus(-a) + sigmoid(-a) * softplus(a)
}

/// Which self-training loss drives the model update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelfTrainLoss {
    Match,
    #[default]
    MatchPp,
}

impl std::str::FromStr for SelfTrainLoss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "match" => Ok(Self::Match),
            "match++" | "match-pp" => Ok(Self::MatchPp),
            other => Err(Error::Config(format!("unknown loss {other:?}"))),
        }
    }
}

impl SelfTrainLoss {
    pub fn value(self, z: f64, z_tilde: f64, config: &MatchConfig) -> f64 {
        match self {
            Self::Match => losses::match_loss(z, z_tilde),
            Self::MatchPp => losses::match_pp_loss(z, z_tilde, config),
        }
    }

    fn dz(self, z: f64, z_tilde: f64, config: &MatchConfig) -> f64 {
        match self {
            Self::Match => losses::match_loss_dz(z, z_tilde),
            Self::MatchPp => losses::match_pp_loss_dz(z, z_tilde, config),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ToyModel {
    omega: f64,
}

impl ToyModel {
    pub fn new(omega: f64) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::Input(format!("omega must be finite, got {omega}")));
        }
        Ok(Self { omega })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    fn logit(&self, x: f64) -> f64 {
        2.0 * (x - self.omega)
    }

    /// `(P(y = -1 | x), P(y = +1 | x))`.
    pub fn predict_proba(&self, x: f64) -> ProbVector {
        let t = self.logit(x);
        ProbVector::new(vec![sigmoid(-t), sigmoid(t)]).expect("sigmoid output is a valid simplex")
    }

    pub fn entropy(&self, x: f64) -> f64 {
        binary_entropy_logit(self.logit(x))
    }

    /// `dz / d omega = 2 t p (1 - p)` with `t = 2 (x - omega)`.
    pub fn entropy_grad(&self, x: f64) -> f64 {
        let t = self.logit(x);
        2.0 * t * sigmoid(t) * sigmoid(-t)
    }

    /// Gradient in omega of the chosen self-training loss, `z_tilde` held constant.
    pub fn grad_loss(
        &self,
        x: f64,
        z_tilde: f64,
        loss: SelfTrainLoss,
        config: &MatchConfig,
    ) -> f64 {
        let z = self.entropy(x);
        let dz = loss.dz(z, z_tilde, config);
        if dz == 0.0 {
            0.0
        } else {
            dz * self.entropy_grad(x)
        }
    }

    pub fn grad_match_pp(&self, x: f64, z_tilde: f64, config: &MatchConfig) -> f64 {
        self.grad_loss(x, z_tilde, SelfTrainLoss::MatchPp, config)
    }

    /// `omega' = omega - eta * mean gradient` over the batch of `(x, z_tilde)` pairs.
    pub fn sgd_step(
        &self,
        batch: &[(f64, f64)],
        eta: f64,
        loss: SelfTrainLoss,
        config: &MatchConfig,
    ) -> Result<ToyModel> {
        if batch.is_empty() {
            return Err(Error::Input("SGD step needs a non-empty batch".into()));
        }
        let total: f64 = batch
            .iter()
            .map(|&(x, zt)| self.grad_loss(x, zt, loss, config))
            .sum();
        ToyModel::new(self.omega - eta * total / batch.len() as f64)
    }

    pub fn predict(&self, x: f64) -> i8 {
        if x > self.omega {
            1
        } else {
            -1
        }
    }
}

/// How scenario points are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Seeded i.i.d. draws, balanced classes, shuffled order.
    #[default]
    Random,
    /// Deterministic per-class normal quantiles `Phi^-1((i + 0.5) / n)`;
    /// a quadrature stand-in for the population distribution.
    Stratified,
}

impl std::str::FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "stratified" => Ok(Self::Stratified),
            other => Err(Error::Config(format!("unknown sampling {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianScenario {
    pub shift: f64,
    pub n_per_class: usize,
    pub seed: u64,
    pub sampling: Sampling,
}

/// Inputs and their (hidden) labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: Vec<i8>,
}

impl GaussianScenario {
    pub fn new(shift: f64, n_per_class: usize, seed: u64) -> Result<Self> {
        if n_per_class == 0 {
            return Err(Error::Input("n_per_class must be at least 1".into()));
        }
        if !shift.is_finite() {
            return Err(Error::Input(format!("shift must be finite, got {shift}")));
        }
        Ok(Self {
            shift,
            n_per_class,
            seed,
            sampling: Sampling::Random,
        })
    }

    pub fn stratified(mut self) -> Self {
        self.sampling = Sampling::Stratified;
        self
    }

    pub fn sample(&self) -> LabeledSample {
        let n = self.n_per_class;
        match self.sampling {
            Sampling::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let mut y: Vec<i8> = std::iter::repeat_n(-1, n)
                    .chain(std::iter::repeat_n(1, n))
                    .collect();
                y.shuffle(&mut rng);
                let x = y
                    .iter()
                    .map(|&c| {
                        let noise: f64 = StandardNormal.sample(&mut rng);
                        c as f64 + self.shift + noise
                    })
                    .collect();
                LabeledSample { x, y }
            }
            Sampling::Stratified => {
                let std = Normal::standard();
                let q: Vec<f64> = (0..n)
                    .map(|i| std.inverse_cdf((i as f64 + 0.5) / n as f64))
                    .collect();
                let mut x = Vec::with_capacity(2 * n);
                let mut y = Vec::with_capacity(2 * n);
                for c in [-1i8, 1] {
                    for &qi in &q {
                        x.push(c as f64 + self.shift + qi);
                        y.push(c);
                    }
                }
                LabeledSample { x, y }
            }
        }
    }
}

/// Classification accuracy of `sign(x - omega)` on a fresh scenario sample.
pub fn evaluate_accuracy(model: &ToyModel, scenario: &GaussianScenario) -> f64 {
    let s = scenario.sample();
    let hits =
        s.x.iter()
            .zip(&s.y)
            .filter(|(&x, &y)| model.predict(x) == y)
            .count();
    hits as f64 / s.x.len() as f64
}

/// Population accuracy `(Phi(omega - shift + 1) + Phi(1 + shift - omega)) / 2`.
pub fn population_accuracy(omega: f64, shift: f64) -> f64 {
    let std = Normal::standard();
    0.5 * (std.cdf(omega - shift + 1.0) + std.cdf(1.0 + shift - omega))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskPoint {
    pub omega: f64,
    pub entropy_risk: f64,
    pub match_risk: f64,
}

/// `count` evenly spaced values from `min` in steps of `step`.
pub fn omega_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && max >= min && min.is_finite() && max.is_finite()) {
        return Err(Error::Config(format!(
            "bad omega grid [{min}, {max}] step {step}"
        )));
    }
    let count = ((max - min) / step).round() as usize + 1;
    Ok((0..count).map(|k| min + step * k as f64).collect())
}

/// Entropy risk and oracle match risk of the adapted model across `omegas`.
///
/// The source CDF comes from the `omega = 0` model on an unshifted sample of
/// the same size. The target CDF is rebuilt at each omega because the target
/// entropy distribution moves with the model.
pub fn risk_curve(scenario: &GaussianScenario, omegas: &[f64]) -> Result<Vec<RiskPoint>> {
    if omegas.is_empty() {
        return Err(Error::Input("omega grid is empty".into()));
    }
    let source_scenario = GaussianScenario {
        shift: 0.0,
        seed: scenario.seed ^ 0x5eed_5eed_5eed_5eed,
        ..*scenario
    };
    let base = ToyModel::default();
    let source = EmpiricalCdf::new(source_scenario.sample().x.iter().map(|&x| base.entropy(x)))?;
    let target_x = scenario.sample().x;
    omegas
        .par_iter()
        .map(|&omega| {
            let model = ToyModel::new(omega)?;
            let z: Vec<f64> = target_x.iter().map(|&x| model.entropy(x)).collect();
            let target = EmpiricalCdf::new(z.iter().copied())?;
            let n = z.len() as f64;
            let entropy_risk = z.iter().sum::<f64>() / n;
            let match_risk = z
                .iter()
                .map(|&zi| {
                    let zt = source.inverse_unchecked(target.eval_unchecked(zi));
                    losses::match_loss(zi, zt)
                })
                .sum::<f64>()
                / n;
            Ok(RiskPoint {
                omega,
                entropy_risk,
                match_risk,
            })
        })
        .collect()
}

/// Exact law of the model entropy when `x - omega` follows an equal-weight
/// mixture of `N(offset_i, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyLaw {
    offsets: [f64; 2],
}

impl EntropyLaw {
    /// Law of `model.entropy(X)` for `X` drawn from `scenario`'s mixture.
    pub fn new(model: &ToyModel, shift: f64) -> Self {
        Self {
            offsets: [-1.0 + shift - model.omega, 1.0 + shift - model.omega],
        }
    }

    /// Distance `d >= 0` with `binary_entropy_logit(2 d) = z`.
    pub fn distance_for_entropy(z: f64) -> f64 {
        if z >= std::f64::consts::LN_2 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0f64, 40.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if binary_entropy_logit(2.0 * mid) > z {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `P(|X - omega| >= d)`.
    pub fn distance_survival(&self, d: f64) -> f64 {
        let std = Normal::standard();
        self.offsets
            .iter()
            .map(|&m| 0.5 * (std.sf(d - m) + std.cdf(-d - m)))
            .sum()
    }

    /// Density of `|X - omega|` at `d`.
    pub fn distance_density(&self, d: f64) -> f64 {
        let std = Normal::standard();
        self.offsets
            .iter()
            .map(|&m| 0.5 * (std.pdf(d - m) + std.pdf(-d - m)))
            .sum()
    }

    /// `P(Z <= z)`; entropy decreases in distance, so this is a distance survival.
    pub fn cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        self.distance_survival(Self::distance_for_entropy(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predict_examples() {
        let m = ToyModel::default();
        assert_eq!(m.predict_proba(0.0).probs(), &[0.5, 0.5]);
        assert!((m.predict_proba(40.0).probs()[1] - 1.0).abs() < 1e-15);
        let p = m.predict_proba(1.0).probs()[1];
        assert!((p - 1.0 / (1.0 + (-2f64).exp())).abs() < 1e-15);
        assert!((p - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn entropy_examples() {
        for omega in [-1.0, 0.0, 2.5] {
            let m = ToyModel::new(omega).unwrap();
            assert!((m.entropy(omega) - std::f64::consts::LN_2).abs() < 1e-15);
            assert!(m.entropy(omega + 30.0) < 1e-20);
        }
        let m = ToyModel::default();
        let direct = losses::entropy(&m.predict_proba(1.0));
        assert!((m.entropy(1.0) - direct).abs() < 1e-15);
        assert!((direct - 0.365_333_855_087_207_8).abs() < 1e-12);
    }

    #[test]
    fn entropy_symmetric_and_decreasing() {
        let m = ToyModel::new(0.25).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            // dyadic offsets keep 0.25 +- d exact
            let d = i as f64 / 32.0;
            let (a, b) = (m.entropy(0.25 + d), m.entropy(0.25 - d));
            assert!((a - b).abs() <= 1e-12 * a + 1e-300, "{a} {b}");
            assert!(a < prev || i == 0);
            prev = a;
        }
    }

    #[test]
    fn filtered_and_stationary_gradients() {
        let cfg = MatchConfig::default();
        let m = ToyModel::default();
        // z = ln 2 > lambda
        assert_eq!(m.grad_match_pp(0.0, 0.1, &cfg), 0.0);
        let x = 2.0;
        let z = m.entropy(x);
        assert!(z < cfg.lambda());
        assert_eq!(m.grad_match_pp(x, z, &cfg), 0.0);
    }

    #[test]
    fn sgd_examples() {
        let cfg = MatchConfig::default();
        let m = ToyModel::new(0.2).unwrap();
        assert!(m.sgd_step(&[], 1.0, SelfTrainLoss::MatchPp, &cfg).is_err());
        let same = m
            .sgd_step(&[(0.2, 0.5), (9.0, 0.0)], 5.0, SelfTrainLoss::MatchPp, &cfg)
            .unwrap();
        assert!((same.omega() - 0.2).abs() < 1e-9);
        let g = m.grad_match_pp(2.0, 0.01, &cfg);
        assert!(g != 0.0);
        let next = m
            .sgd_step(&[(2.0, 0.01)], 3.0, SelfTrainLoss::MatchPp, &cfg)
            .unwrap();
        assert!((next.omega() - (0.2 - 3.0 * g)).abs() < 1e-15);
    }

    #[test]
    fn scenario_sampling() {
        let s = GaussianScenario::new(0.0, 1000, 4).unwrap();
        let a = s.sample();
        assert_eq!(a, s.sample());
        assert_eq!(a.y.iter().filter(|&&y| y == 1).count(), 1000);
        assert!(GaussianScenario::new(0.0, 0, 1).is_err());
        let st = s.stratified().sample();
        assert_eq!(st.x.len(), 2000);
        let mean: f64 = st.x.iter().sum::<f64>() / 2000.0;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn accuracy_examples() {
        let acc = evaluate_accuracy(
            &ToyModel::default(),
            &GaussianScenario::new(0.0, 500_000, 1).unwrap(),
        );
        let phi1 = population_accuracy(0.0, 0.0);
        assert!((phi1 - 0.841_344_746).abs() < 1e-8);
        assert!((acc - phi1).abs() < 3.0 * (phi1 * (1.0 - phi1) / 1e6).sqrt());

        let far = evaluate_accuracy(
            &ToyModel::new(10.0).unwrap(),
            &GaussianScenario::new(0.0, 100_000, 1).unwrap(),
        );
        assert!((far - 0.5).abs() < 0.01);
    }

    #[test]
    fn accuracy_translation_invariant() {
        let c = 0.7;
        for omega in [-0.5, 0.0, 0.4] {
            let a = evaluate_accuracy(
                &ToyModel::new(omega).unwrap(),
                &GaussianScenario::new(0.2, 50_000, 8).unwrap(),
            );
            let b = evaluate_accuracy(
                &ToyModel::new(omega + c).unwrap(),
                &GaussianScenario::new(0.2 + c, 50_000, 8).unwrap(),
            );
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn entropy_law_matches_samples() {
        let model = ToyModel::new(0.25).unwrap();
        let law = EntropyLaw::new(&model, 1.0);
        let sample = GaussianScenario::new(1.0, 100_000, 6).unwrap().sample();
        let cdf = EmpiricalCdf::new(sample.x.iter().map(|&x| model.entropy(x))).unwrap();
        for z in [0.05, 0.2, 0.4, 0.6, 0.69] {
            assert!((law.cdf(z) - cdf.eval(z).unwrap()).abs() < 0.01, "z={z}");
        }
        assert!((EntropyLaw::distance_for_entropy(model.entropy(1.25)) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn grid_construction() {
        let g = omega_grid(-3.0, 4.0, 0.05).unwrap();
        assert_eq!(g.len(), 141);
        assert!((g[60]).abs() < 1e-12);
        assert!((g[80] - 1.0).abs() < 1e-12);
        assert!(omega_grid(1.0, 0.0, 0.1).is_err());
        assert!(risk_curve(&GaussianScenario::new(0.0, 10, 0).unwrap(), &[]).is_err());
    }
}
