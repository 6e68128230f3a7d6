//! The online loop: entropy, probability integral transform, bet, adapted
//! quantile, pseudo-entropy, model update, then the betting-variable update.
//!
//! The bet and the transport at step j both use the epsilon learned from
//! `u_1 .. u_{j-1}`; the learner only sees `u_j` after both are done.

use crate::betting::{AlarmConfig, BettingState, UClamp};
use crate::ecdf::EmpiricalCdf;
use crate::error::{ensure_finite, Error, Result};
use crate::losses::MatchConfig;
use crate::sfogd::{SfogdConfig, SfogdState};
use crate::toy::{SelfTrainLoss, ToyModel};
use crate::transport::adapt_u;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Inputs are toy x values; the model is self-trained.
    #[default]
    ToyModel,
    /// Inputs are entropies; records only.
    MonitorOnly,
    /// Inputs are entropies; the caller consumes the pseudo-entropies.
    TransportOnly,
}

impl Mode {
    pub fn is_model_free(self) -> bool {
        !matches!(self, Mode::ToyModel)
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toy-model" => Ok(Self::ToyModel),
            "monitor-only" => Ok(Self::MonitorOnly),
            "transport-only" => Ok(Self::TransportOnly),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

/// Where the self-training targets come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransportPolicy {
    /// `F_s^-1(Q_epsilon(u))` from the learned linear bet.
    #[default]
    Betting,
    /// `F_s^-1(F_t(z))` with `F_t` rebuilt from a reference target pool at
    /// the current model after every update. Toy mode only.
    Oracle,
}

impl std::str::FromStr for TransportPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "betting" => Ok(Self::Betting),
            "oracle" => Ok(Self::Oracle),
            other => Err(Error::Config(format!("unknown transport policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub sfogd: SfogdConfig,
    pub matching: MatchConfig,
    pub eta: f64,
    pub alarm: AlarmConfig,
    pub action_delay: u64,
    pub batch_size: usize,
    /// Cap on the number of model updates; `None` keeps updating.
    pub max_updates: Option<u64>,
    pub mode: Mode,
    pub loss: SelfTrainLoss,
    pub transport: TransportPolicy,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            sfogd: SfogdConfig::default(),
            matching: MatchConfig::default(),
            eta: 1.0,
            alarm: AlarmConfig::default(),
            action_delay: 100,
            batch_size: 1,
            max_updates: None,
            mode: Mode::ToyModel,
            loss: SelfTrainLoss::MatchPp,
            transport: TransportPolicy::Betting,
        }
    }
}

impl EngineConfig {
    pub fn monitor() -> Self {
        Self {
            mode: Mode::MonitorOnly,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::Config(format!(
                "eta must be non-negative, got {}",
                self.eta
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.transport == TransportPolicy::Oracle && self.mode.is_model_free() {
            return Err(Error::Config(
                "oracle transport needs toy-model mode".into(),
            ));
        }
        Ok(())
    }
}

/// Everything one pass of the loop computed.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub z: f64,
    pub u: f64,
    pub b: f64,
    pub log_wealth: f64,
    /// The bet placed at this step.
    pub epsilon: f64,
    pub u_tilde: f64,
    pub z_tilde: f64,
    pub alarm: bool,
    /// Model parameter that produced `z` (toy mode only).
    pub omega: Option<f64>,
    pub loss: Option<f64>,
}

#[derive(Debug, Clone)]
struct OracleTarget {
    pool: Vec<f64>,
    cdf: EmpiricalCdf,
}

impl OracleTarget {
    fn build(pool: Vec<f64>, model: &ToyModel) -> Result<Self> {
        let cdf = EmpiricalCdf::new(pool.iter().map(|&x| model.entropy(x)))?;
        Ok(Self { pool, cdf })
    }

    fn refresh(&mut self, model: &ToyModel) -> Result<()> {
        self.cdf = EmpiricalCdf::new(self.pool.iter().map(|&x| model.entropy(x)))?;
        Ok(())
    }
}

/// A calibrated single-stream state machine.
#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    source: EmpiricalCdf,
    clamp: UClamp,
    betting: BettingState,
    learner: SfogdState,
    model: Option<ToyModel>,
    batch: Vec<(f64, f64)>,
    updates: u64,
    oracle: Option<OracleTarget>,
    alarm_step: Option<u64>,
}

impl Engine {
    /// Freezes the source CDF and resets `epsilon = 0`, `S_0 = 1`, `omega = 0`.
    pub fn calibrate(
        config: EngineConfig,
        source_entropies: impl IntoIterator<Item = f64>,
    ) -> Result<Self> {
        let source = EmpiricalCdf::new(source_entropies)?;
        Self::from_cdf(config, source)
    }

    pub fn from_cdf(config: EngineConfig, source: EmpiricalCdf) -> Result<Self> {
        config.validate()?;
        let model = (!config.mode.is_model_free()).then(ToyModel::default);
        Ok(Self {
            clamp: UClamp::for_calibration_size(source.len()),
            batch: Vec::with_capacity(config.batch_size),
            config,
            source,
            betting: BettingState::new(),
            learner: SfogdState::new(),
            model,
            updates: 0,
            oracle: None,
            alarm_step: None,
        })
    }

    /// Reference target inputs for [`TransportPolicy::Oracle`].
    pub fn with_target_pool(mut self, pool: Vec<f64>) -> Result<Self> {
        let model = self
            .model
            .ok_or_else(|| Error::Config("a target pool needs toy-model mode".into()))?;
        self.oracle = Some(OracleTarget::build(pool, &model)?);
        Ok(self)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn source(&self) -> &EmpiricalCdf {
        &self.source
    }

    pub fn model(&self) -> Option<&ToyModel> {
        self.model.as_ref()
    }

    pub fn epsilon(&self) -> f64 {
        self.learner.epsilon()
    }

    pub fn betting(&self) -> &BettingState {
        &self.betting
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// First step at which the alarm fired, if any.
    pub fn alarm_step(&self) -> Option<u64> {
        self.alarm_step
    }

    /// `input` is x in toy mode and an entropy otherwise.
    pub fn step(&mut self, input: f64) -> Result<StepRecord> {
        ensure_finite("stream value", input)?;
        let omega = self.model.map(|m| m.omega());
        let z = match &self.model {
            Some(m) => m.entropy(input),
            None => {
                if input < 0.0 {
                    return Err(Error::Input(format!("entropy {input} is negative")));
                }
                input
            }
        };
        let step = self.betting.step() + 1;
        let epsilon = self.betting.epsilon();

        let u = self.source.eval_unchecked(z);
        let u_bet = self.clamp.apply(u);
        let b = self.betting.update_wealth(u_bet)?;

        let u_tilde = match (&self.config.transport, &self.oracle) {
            (TransportPolicy::Betting, _) => adapt_u(epsilon, u)?.value(),
            (TransportPolicy::Oracle, Some(target)) => target.cdf.eval_unchecked(z),
            (TransportPolicy::Oracle, None) => {
                return Err(Error::Config(
                    "oracle transport without a target pool".into(),
                ))
            }
        };
        let z_tilde = self.source.inverse_unchecked(u_tilde);

        let loss = self
            .model
            .map(|_| self.config.loss.value(z, z_tilde, &self.config.matching));
        self.maybe_update_model(step, input, z_tilde)?;

        self.learner.step(u_bet, &self.config.sfogd);
        self.betting.set_epsilon(self.learner.epsilon())?;

        let alarm = self.betting.alarm(&self.config.alarm);
        if alarm && self.alarm_step.is_none() {
            self.alarm_step = Some(step);
        }

        Ok(StepRecord {
            step,
            z,
            u,
            b,
            log_wealth: self.betting.log_wealth(),
            epsilon,
            u_tilde,
            z_tilde,
            alarm,
            omega,
            loss,
        })
    }

    fn maybe_update_model(&mut self, step: u64, x: f64, z_tilde: f64) -> Result<()> {
        let Some(model) = self.model else {
            return Ok(());
        };
        if step <= self.config.action_delay {
            return Ok(());
        }
        if self
            .config
            .max_updates
            .is_some_and(|cap| self.updates >= cap)
        {
            return Ok(());
        }
        self.batch.push((x, z_tilde));
        if self.batch.len() < self.config.batch_size {
            return Ok(());
        }
        let next = model.sgd_step(
            &self.batch,
            self.config.eta,
            self.config.loss,
            &self.config.matching,
        )?;
        self.batch.clear();
        self.updates += 1;
        if let Some(target) = &mut self.oracle {
            if next != model {
                target.refresh(&next)?;
            }
        }
        self.model = Some(next);
        Ok(())
    }

    pub fn run(&mut self, stream: impl IntoIterator<Item = f64>) -> Result<Vec<StepRecord>> {
        stream.into_iter().map(|v| self.step(v)).collect()
    }
}
