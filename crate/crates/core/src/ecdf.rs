//! Empirical CDF of source entropies with piecewise-linear interpolation.
//!
//! The k-th sorted sample (1-based) carries ordinate `k / n`. Below the
//! smallest knot the CDF is 0, above the largest it is 1. Tied samples give
//! a vertical step in the CDF and a flat run in the pseudo-inverse, which
//! resolves to the leftmost consistent point.

use crate::error::{ensure_finite, Error, Result};

/// Frozen, calibrated CDF over a sorted knot sequence (n >= 2).
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    knots: Vec<f64>,
}

impl EmpiricalCdf {
    /// Sorts the samples and freezes them as interpolation knots.
    pub fn new(samples: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut knots: Vec<f64> = samples.into_iter().collect();
        if let Some(bad) = knots.iter().find(|z| !z.is_finite()) {
            return Err(Error::Input(format!("non-finite calibration sample {bad}")));
        }
        if knots.len() < 2 {
            return Err(Error::Calibration(format!(
                "need at least 2 samples, got {}",
                knots.len()
            )));
        }
        knots.sort_by(f64::total_cmp);
        Ok(Self { knots })
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn min(&self) -> f64 {
        self.knots[0]
    }

    pub fn max(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Forward evaluation F(z), clamped to [0, 1].
    pub fn eval(&self, z: f64) -> Result<f64> {
        ensure_finite("cdf argument", z)?;
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: f64) -> f64 {
        let n = self.knots.len();
        // number of knots <= z
        let count = self.knots.partition_point(|&k| k <= z);
        if count == 0 {
            return 0.0;
        }
        if count == n {
            return 1.0;
        }
        let lo = self.knots[count - 1];
        let nf = n as f64;
        if z == lo {
            return count as f64 / nf;
        }
        let hi = self.knots[count];
        (count as f64 + (z - lo) / (hi - lo)) / nf
    }

    /// Piecewise-linear pseudo-inverse: the smallest z with F(z) >= u.
    pub fn inverse(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Input(format!("quantile level {u} outside [0, 1]")));
        }
        Ok(self.inverse_unchecked(u))
    }

    pub(crate) fn inverse_unchecked(&self, u: f64) -> f64 {
        let n = self.knots.len();
        let pos = u * n as f64;
        if pos <= 1.0 {
            return self.knots[0];
        }
        if pos >= n as f64 {
            return self.knots[n - 1];
        }
        // (k-1)/n < u <= k/n with 1-based k
        let k = pos.ceil() as usize;
        let lo = self.knots[k - 2];
        let hi = self.knots[k - 1];
        let frac = pos - (k - 1) as f64;
        lo + frac * (hi - lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn four() -> EmpiricalCdf {
        EmpiricalCdf::new([3.0, 1.0, 4.0, 2.0]).unwrap()
    }

    #[test]
    fn sorts_input() {
        let cdf = EmpiricalCdf::new([0.1, 0.3, 0.2]).unwrap();
        assert_eq!(cdf.knots(), &[0.1, 0.2, 0.3]);
    }

    #[test]
    fn ties_are_valid() {
        let cdf = EmpiricalCdf::new([0.5, 0.5]).unwrap();
        assert_eq!(cdf.eval(0.5).unwrap(), 1.0);
        assert_eq!(cdf.inverse(0.3).unwrap(), 0.5);
        assert_eq!(cdf.inverse(1.0).unwrap(), 0.5);
    }

    #[test]
    fn rejects_short_or_non_finite() {
        assert!(matches!(
            EmpiricalCdf::new([1.0]),
            Err(Error::Calibration(_))
        ));
        assert!(matches!(EmpiricalCdf::new([]), Err(Error::Calibration(_))));
        assert!(matches!(
            EmpiricalCdf::new([1.0, f64::NAN]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn eval_examples() {
        let cdf = four();
        assert_eq!(cdf.eval(2.0).unwrap(), 0.5);
        assert_eq!(cdf.eval(0.0).unwrap(), 0.0);
        assert_eq!(cdf.eval(9.0).unwrap(), 1.0);
        assert!((cdf.eval(2.5).unwrap() - 0.625).abs() < 1e-15);
        assert!(cdf.eval(f64::INFINITY).is_err());
    }

    #[test]
    fn inverse_examples() {
        let cdf = four();
        assert_eq!(cdf.inverse(0.5).unwrap(), 2.0);
        assert_eq!(cdf.inverse(1.0).unwrap(), 4.0);
        assert_eq!(cdf.inverse(0.0).unwrap(), 1.0);
        assert!((cdf.inverse(0.625).unwrap() - 2.5).abs() < 1e-15);
        assert!(cdf.inverse(1.5).is_err());
        assert!(cdf.inverse(-0.1).is_err());
    }

    #[test]
    fn tied_run_resolves_left() {
        let cdf = EmpiricalCdf::new([1.0, 2.0, 2.0, 2.0, 3.0]).unwrap();
        assert_eq!(cdf.eval(2.0).unwrap(), 0.8);
        // every level on the jump maps back to the tied value
        for u in [0.41, 0.5, 0.6, 0.7, 0.8] {
            assert_eq!(cdf.inverse(u).unwrap(), 2.0);
        }
    }

    #[test]
    fn galois_pair_at_knots() {
        let samples: Vec<f64> = (0..500)
            .map(|i| ((i * 7919) % 1000) as f64 / 997.0)
            .collect();
        let cdf = EmpiricalCdf::new(samples).unwrap();
        for &z in cdf.knots() {
            let back = cdf.inverse(cdf.eval(z).unwrap()).unwrap();
            assert!((back - z).abs() <= 1e-12, "{z} -> {back}");
        }
    }

    #[test]
    fn round_trip_interior() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let cdf = EmpiricalCdf::new((0..200).map(|_| rng.random::<f64>())).unwrap();
        let lo = 1.0 / cdf.len() as f64;
        for _ in 0..1000 {
            let u = lo + (1.0 - lo) * rng.random::<f64>();
            let back = cdf.eval(cdf.inverse(u).unwrap()).unwrap();
            assert!((back - u).abs() <= 1e-12, "{u} -> {back}");
        }
    }

    /// Asymptotic Kolmogorov critical value at level 0.01.
    const KS_CRIT_01: f64 = 1.627_62;

    fn ks_uniform(values: &mut [f64]) -> f64 {
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let above = (i + 1) as f64 / n - v;
                let below = v - i as f64 / n;
                above.max(below)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn probability_integral_transform_is_uniform() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Gamma};
        let law = Gamma::new(2.0, 0.3).unwrap();
        let n = 10_000;
        let mut passes = 0;
        for seed in 0..100 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let cdf = EmpiricalCdf::new((0..n).map(|_| law.sample(&mut rng))).unwrap();
            let mut u: Vec<f64> = (0..n)
                .map(|_| cdf.eval(law.sample(&mut rng)).unwrap())
                .collect();
            // two-sample flavour: both the calibration set and the fresh draws are noisy
            let stat = ks_uniform(&mut u);
            let crit = KS_CRIT_01 * (2.0 / n as f64).sqrt();
            if stat <= crit {
                passes += 1;
            }
        }
        assert!(passes >= 95, "only {passes}/100 trials passed");
    }

    proptest! {
        #[test]
        fn monotone(mut xs in proptest::collection::vec(0.0f64..5.0, 2..60),
                    a in -1.0f64..6.0, b in -1.0f64..6.0,
                    p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
            xs.sort_by(f64::total_cmp);
            let cdf = EmpiricalCdf::new(xs).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(cdf.eval(lo).unwrap() <= cdf.eval(hi).unwrap());
            let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
            prop_assert!(cdf.inverse(lo).unwrap() <= cdf.inverse(hi).unwrap());
            let v = cdf.eval(a).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
