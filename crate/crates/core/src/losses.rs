//! Entropy, match, and filtered/weighted match losses (natural log units).

use crate::error::{Error, Result};

const SIMPLEX_TOL: f64 = 1e-9;

/// A K-class probability vector (K >= 2) summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::Input(format!(
                "probability vector needs at least 2 entries, got {}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Input(format!("probability {p} outside [0, 1]")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Input(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn classes(&self) -> usize {
        self.0.len()
    }
}

/// Shannon entropy in nats with `0 ln 0 = 0`.
pub fn entropy(p: &ProbVector) -> f64 {
    -p.0.iter()
        .filter(|&&q| q > 0.0)
        .map(|&q| q * q.ln())
        .sum::<f64>()
}

/// Threshold configuration for the filtered match loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    lambda: f64,
}

impl MatchConfig {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Config(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        Ok(Self { lambda })
    }

    /// `0.40 * ln(classes)`: the ImageNet rule `0.40 * ln 1000`, rescaled by class count.
    pub fn for_classes(classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {classes}"
            )));
        }
        Self::new(0.40 * (classes as f64).ln())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            lambda: 0.40 * std::f64::consts::LN_2,
        }
    }
}

/// `0.5 (z - z_tilde)^2`.
pub fn match_loss(z: f64, z_tilde: f64) -> f64 {
    0.5 * (z - z_tilde).powi(2)
}

/// Per-sample weight `1[z < lambda] * exp(2 (lambda - z))`.
pub fn match_pp_weight(z: f64, config: &MatchConfig) -> f64 {
    if z < config.lambda {
        (2.0 * (config.lambda - z)).exp()
    } else {
        0.0
    }
}

pub fn match_pp_loss(z: f64, z_tilde: f64, config: &MatchConfig) -> f64 {
    let w = match_pp_weight(z, config);
    if w == 0.0 {
        0.0
    } else {
        match_loss(z, z_tilde) * w
    }
}

/// d/dz of [`match_loss`] with `z_tilde` held fixed.
pub fn match_loss_dz(z: f64, z_tilde: f64) -> f64 {
    z - z_tilde
}

/// d/dz of [`match_pp_loss`] with `z_tilde` held fixed; the weight depends on z too.
pub fn match_pp_loss_dz(z: f64, z_tilde: f64, config: &MatchConfig) -> f64 {
    let w = match_pp_weight(z, config);
    if w == 0.0 {
        return 0.0;
    }
    let d = z - z_tilde;
    w * (d - d * d)
}
