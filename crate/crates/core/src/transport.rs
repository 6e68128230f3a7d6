//! Pseudo-entropy targets from the betting function.
//!
//! A valid bet is a likelihood ratio against the uniform null, so integrating
//! `b(v) = 1 + epsilon (v - 0.5)` over `[0, u]` gives the alternative CDF
//! `Q(u) = (epsilon / 2) u^2 + (1 - epsilon / 2) u`. Mapping `Q(u)` back
//! through the source pseudo-inverse yields the pseudo-entropy. With the true
//! likelihood ratio in place of the linear bet the same construction is the
//! 1D optimal-transport map `F_s^-1 o F_t`.

use crate::betting::MAX_BET;
use crate::ecdf::EmpiricalCdf;
use crate::error::{ensure_finite, Error, Result};

/// Adapted quantile `Q(u)` in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AdaptedQuantile(f64);

impl AdaptedQuantile {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Input(format!(
                "adapted quantile {value} outside [0, 1]"
            )));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn adapt_u(epsilon: f64, u: f64) -> Result<AdaptedQuantile> {
    if !(epsilon.abs() <= MAX_BET) {
        return Err(Error::Contract(format!(
            "|epsilon| = {} exceeds 2",
            epsilon.abs()
        )));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Input(format!("u = {u} outside [0, 1]")));
    }
    let q = 0.5 * epsilon * u * u + (1.0 - 0.5 * epsilon) * u;
    // rounding can leave q a hair outside the unit interval near the endpoints
    Ok(AdaptedQuantile(q.clamp(0.0, 1.0)))
}

pub fn pseudo_entropy(cdf: &EmpiricalCdf, u_tilde: AdaptedQuantile) -> f64 {
    cdf.inverse_unchecked(u_tilde.0)
}

/// `F_s^-1(F_t(z))`.
pub fn oracle_transport(source: &EmpiricalCdf, target: &EmpiricalCdf, z: f64) -> Result<f64> {
    ensure_finite("entropy", z)?;
    Ok(source.inverse_unchecked(target.eval_unchecked(z)))
}

/// A betting function integrated cell by cell on a uniform grid over [0, 1].
///
/// Cell masses come from 5-point Gauss-Legendre quadrature, which never
/// samples the cell edges, so a bet with an integrable spike at 0 or 1 is
/// still handled. Inside a cell the bet is treated as constant.
#[derive(Debug, Clone)]
pub struct TabulatedBet {
    cells: usize,
    cumulative: Vec<f64>,
}

/// Gauss-Legendre nodes on [-1, 1] and their weights.
const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

impl TabulatedBet {
    /// The integral is renormalized to 1 to absorb quadrature error.
    pub fn from_fn(cells: usize, mut density: impl FnMut(f64) -> f64) -> Result<Self> {
        if cells == 0 {
            return Err(Error::Input("need at least one grid cell".into()));
        }
        let h = 1.0 / cells as f64;
        let mut cumulative = Vec::with_capacity(cells + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for i in 0..cells {
            let mid = (i as f64 + 0.5) * h;
            let mut mass = 0.0;
            for (node, weight) in GL5 {
                let v = density(mid + 0.5 * h * node);
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::Input(format!(
                        "betting density value {v} is not a finite non-negative number"
                    )));
                }
                mass += 0.5 * h * weight * v;
            }
            acc += mass;
            cumulative.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::Input("betting density integrates to zero".into()));
        }
        for c in &mut cumulative {
            *c /= acc;
        }
        Ok(Self { cells, cumulative })
    }

    /// Tabulates the linear bet `1 + epsilon (v - 0.5)`.
    pub fn linear(epsilon: f64, cells: usize) -> Result<Self> {
        if !(epsilon.abs() <= MAX_BET) {
            return Err(Error::Contract(format!(
                "|epsilon| = {} exceeds 2",
                epsilon.abs()
            )));
        }
        Self::from_fn(cells, |v| 1.0 + epsilon * (v - 0.5))
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Alternative CDF `Q(u)`, exact at grid nodes and linear between them.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let pos = u * self.cells as f64;
        let i = (pos.floor() as usize).min(self.cells - 1);
        let frac = pos - i as f64;
        self.cumulative[i] + frac * (self.cumulative[i + 1] - self.cumulative[i])
    }

    pub fn pseudo_entropy(&self, cdf: &EmpiricalCdf, u: f64) -> f64 {
        cdf.inverse_unchecked(self.quantile(u))
    }
}
