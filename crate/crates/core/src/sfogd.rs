//! Scale-free online gradient descent on the betting variable.
//!
//! The learner minimizes the clip-aware negative log-bet: when epsilon has
//! already overshot the hindsight-optimal magnitude `D` in the winning
//! direction the loss is flat, otherwise it is `-ln(1 + epsilon (u - 0.5))`.
//! Steps are normalized by the root of the running sum of squared gradients,
//! which keeps `|epsilon| <= D + gamma` whenever `gamma < 2 - D`.

use crate::error::{Error, Result};

/// Learner hyperparameters. `0 < D < 2` and `0 < gamma < 2 - D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfogdConfig {
    clip: f64,
    gamma: f64,
}

impl SfogdConfig {
    pub fn new(clip: f64, gamma: f64) -> Result<Self> {
        if !(clip > 0.0 && clip < 2.0) {
            return Err(Error::Config(format!("D must lie in (0, 2), got {clip}")));
        }
        if !(gamma > 0.0 && gamma < 2.0 - clip) {
            return Err(Error::Config(format!(
                "gamma must lie in (0, {}), got {gamma}",
                2.0 - clip
            )));
        }
        Ok(Self { clip, gamma })
    }

    pub fn clip(&self) -> f64 {
        self.clip
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `D + gamma`, the largest |epsilon| the learner can produce.
    pub fn epsilon_bound(&self) -> f64 {
        self.clip + self.gamma
    }

    /// `gamma + (2D + gamma)^2 / (2 gamma)`, the regret constant multiplying `sqrt(sum g^2)`.
    pub fn regret_constant(&self) -> f64 {
        let span = 2.0 * self.clip + self.gamma;
        self.gamma + span * span / (2.0 * self.gamma)
    }
}

impl Default for SfogdConfig {
    /// `D = 1.8`, `gamma = 1 / (8 sqrt 3)`.
    fn default() -> Self {
        Self {
            clip: 1.8,
            gamma: 1.0 / (8.0 * 3f64.sqrt()),
        }
    }
}

/// `E = D sign(u - 0.5)` with `sign(0) = +1`.
pub fn oracle_bet(u: f64, clip: f64) -> f64 {
    if u >= 0.5 {
        clip
    } else {
        -clip
    }
}

fn clipped(epsilon: f64, u: f64, clip: f64) -> bool {
    oracle_bet(u, clip) * epsilon > 0.0 && epsilon.abs() > clip
}

/// Clip-aware loss `L(E, epsilon)`.
pub fn clip_aware_loss(epsilon: f64, u: f64, clip: f64) -> f64 {
    let e = if clipped(epsilon, u, clip) {
        oracle_bet(u, clip)
    } else {
        epsilon
    };
    -(1.0 + e * (u - 0.5)).ln()
}

/// Subgradient of [`clip_aware_loss`] in epsilon.
pub fn clip_aware_grad(epsilon: f64, u: f64, clip: f64) -> Result<f64> {
    if clipped(epsilon, u, clip) {
        return Ok(0.0);
    }
    let denom = 1.0 + epsilon * (u - 0.5);
    if !(denom > 0.0) {
        return Err(Error::Contract(format!(
            "bet 1 + {epsilon} * ({u} - 0.5) is not positive"
        )));
    }
    Ok(-(u - 0.5) / denom)
}

/// Learner state: current epsilon plus the squared-gradient accumulator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SfogdState {
    epsilon: f64,
    grad_sq_sum: f64,
    grad_count: u64,
}

impl SfogdState {
    /// `epsilon_1 = 0` with an empty gradient history.
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn grad_sq_sum(&self) -> f64 {
        self.grad_sq_sum
    }

    /// Number of gradients folded into the accumulator.
    pub fn grad_history_len(&self) -> u64 {
        self.grad_count
    }

    /// One SF-OGD update after observing `u`; returns the gradient used.
    ///
    /// Zero gradients before the first nonzero one leave the state untouched,
    /// so the normalizer is never `0 / 0`.
    pub fn step(&mut self, u: f64, config: &SfogdConfig) -> f64 {
        let g = match clip_aware_grad(self.epsilon, u, config.clip) {
            Ok(g) => g,
            // unreachable while |epsilon| <= D + gamma and u is in [0, 1]
            Err(e) => panic!("{e}"),
        };
        let total = self.grad_sq_sum + g * g;
        if total == 0.0 {
            return g;
        }
        self.grad_sq_sum = total;
        self.grad_count += 1;
        self.epsilon -= config.gamma * g / total.sqrt();
        g
    }
}

/// Regret of an epsilon trace against the best fixed bet on a uniform grid
/// over `[-D, D]`, reported for every prefix.
pub fn hindsight_regret(
    u: &[f64],
    epsilon: &[f64],
    config: &SfogdConfig,
    grid_resolution: usize,
) -> Result<Vec<f64>> {
    if u.is_empty() {
        return Err(Error::Input("regret needs a non-empty sequence".into()));
    }
    if u.len() != epsilon.len() {
        return Err(Error::Input(format!(
            "trace lengths differ: {} u values, {} epsilon values",
            u.len(),
            epsilon.len()
        )));
    }
    if grid_resolution < 2 {
        return Err(Error::Input("grid resolution must be at least 2".into()));
    }
    let d = config.clip;
    let step = 2.0 * d / (grid_resolution - 1) as f64;
    let grid: Vec<f64> = (0..grid_resolution).map(|i| -d + step * i as f64).collect();
    let mut fixed = vec![0.0; grid_resolution];
    let mut learner = 0.0;
    let mut out = Vec::with_capacity(u.len());
    for (&ut, &et) in u.iter().zip(epsilon) {
        learner += clip_aware_loss(et, ut, d);
        let centered = ut - 0.5;
        let mut best = f64::INFINITY;
        for (acc, &g) in fixed.iter_mut().zip(&grid) {
            // |g| <= D never takes the clipped branch
            *acc -= (1.0 + g * centered).ln();
            best = best.min(*acc);
        }
        out.push(learner - best);
    }
    Ok(out)
}
