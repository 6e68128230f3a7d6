//! Browser bindings for the entropy-matching toy: risk curves, an online
//! adaptation trace, and the adapted-quantile map. Results come back as
//! flat `Float64Array`s so the page can plot them without a serializer.

use wasm_bindgen::prelude::*;

use entmatch::presets::{derive_seed, ToyRunConfig};
use entmatch::toy::{omega_grid, population_accuracy, risk_curve, GaussianScenario, ToyModel};
use entmatch::transport::adapt_u;
use entmatch::Engine;

fn js_err(e: entmatch::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `[omega, entropy_risk, match_risk]` triples over `[-3, 4]`.
pub fn risk_rows(shift: f64, step: f64, n_per_class: usize) -> entmatch::Result<Vec<f64>> {
    let grid = omega_grid(-3.0, 4.0, step)?;
    let scenario = GaussianScenario::new(shift, n_per_class, 0)?.stratified();
    Ok(risk_curve(&scenario, &grid)?
        .into_iter()
        .flat_map(|p| [p.omega, p.entropy_risk, p.match_risk])
        .collect())
}

#[wasm_bindgen(js_name = riskCurves)]
pub fn risk_curves(shift: f64, step: f64) -> Result<Vec<f64>, JsError> {
    risk_rows(shift, step, 4_000).map_err(js_err)
}

/// `[step, epsilon, log_wealth, omega]` every `every` steps of a run with the
/// two-Gaussian preset at the given shift and learning rate.
pub fn trace_rows(shift: f64, eta: f64, seed: u64, every: usize) -> entmatch::Result<Vec<f64>> {
    let mut run = ToyRunConfig::fig1(shift, seed);
    run.engine.eta = eta;
    let base = ToyModel::default();
    let source: Vec<f64> =
        GaussianScenario::new(0.0, run.calibration_per_class, derive_seed(seed, 0))?
            .sample()
            .x
            .iter()
            .map(|&x| base.entropy(x))
            .collect();
    let stream = GaussianScenario::new(shift, run.test_per_class, derive_seed(seed, 1))?
        .sample()
        .x;
    let mut engine = Engine::calibrate(run.engine, source)?.with_target_pool(stream.clone())?;
    let every = every.max(1);
    let mut out = Vec::new();
    for x in stream {
        let r = engine.step(x)?;
        if r.step % every as u64 == 0 {
            out.extend([
                r.step as f64,
                r.epsilon,
                r.log_wealth,
                r.omega.unwrap_or(0.0),
            ]);
        }
    }
    Ok(out)
}

#[wasm_bindgen(js_name = adaptTrace)]
pub fn adapt_trace(shift: f64, eta: f64, seed: u32, every: u32) -> Result<Vec<f64>, JsError> {
    trace_rows(shift, eta, u64::from(seed), every as usize).map_err(js_err)
}

/// `Q(u)` at `points` evenly spaced u in [0, 1].
pub fn quantile_rows(epsilon: f64, points: usize) -> entmatch::Result<Vec<f64>> {
    let last = points.max(2) - 1;
    (0..=last)
        .map(|i| adapt_u(epsilon, i as f64 / last as f64).map(|q| q.value()))
        .collect()
}

#[wasm_bindgen(js_name = adaptedQuantile)]
pub fn adapted_quantile(epsilon: f64, points: u32) -> Result<Vec<f64>, JsError> {
    quantile_rows(epsilon, points as usize).map_err(js_err)
}

#[wasm_bindgen(js_name = accuracy)]
pub fn accuracy(omega: f64, shift: f64) -> f64 {
    population_accuracy(omega, shift)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn risk_rows_are_triples() {
        let rows = risk_rows(1.0, 0.5, 500).unwrap();
        assert_eq!(rows.len(), 15 * 3);
        assert_eq!(rows[0], -3.0);
    }

    #[test]
    fn trace_moves_boundary() {
        let rows = trace_rows(1.0, 5.0, 3, 1_000).unwrap();
        assert_eq!(rows.len(), 20 * 4);
        assert!(rows[rows.len() - 1] > 0.3);
        let frozen = trace_rows(1.0, 0.0, 3, 1_000).unwrap();
        assert_eq!(frozen[frozen.len() - 1], 0.0);
    }

    #[test]
    fn quantile_map_endpoints() {
        let q = quantile_rows(1.5, 11).unwrap();
        assert_eq!((q[0], q[10]), (0.0, 1.0));
        assert!(quantile_rows(3.0, 11).is_err());
    }
}
