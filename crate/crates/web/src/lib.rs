//! Browser bindings. Each export takes plain strings and numbers and returns
//! a JSON document; errors surface as JavaScript exceptions carrying the
//! message.
//!
//! The `*_json` functions are the same operations without the JS boundary so
//! they can be exercised natively.

use amh_core::calibrate;
use amh_core::diagnostics::{rolling_acf, rolling_ljung_box};
use amh_core::ingest::{log_returns, mean_adjust, parse_prices};
use amh_core::models::{ModelInstance, ModelSpec, Theta};
use amh_core::simulate::simulate;
use amh_core::statespace::{rts_smooth, run_filter, StateSpaceModel};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn render(v: Value) -> String {
    v.to_string()
}

/// Simulates `model` at `theta`, then filters and smooths the path at the
/// true parameters. Returns the series, the true beta, and the filtered and
/// smoothed beta with a two-standard-deviation band.
pub fn simulate_json(model: &str, ar_order: usize, theta: &str, length: usize, seed: u32) -> Result<String, String> {
    let spec = ModelSpec::from_name(model, ar_order).map_err(|e| e.to_string())?;
    let theta = Theta::from_json_str(spec, theta).map_err(|e| e.to_string())?;
    let sim = simulate(&theta, length, u64::from(seed)).map_err(|e| e.to_string())?;
    let y = sim.returns.values();
    let instance = ModelInstance::new(&theta).map_err(|e| e.to_string())?;
    let prior = instance.initial_prior(y).map_err(|e| e.to_string())?;
    let filtered = run_filter(&instance, y, &prior).map_err(|e| e.to_string())?;
    let smoothed = rts_smooth(&filtered, instance.system()).map_err(|e| e.to_string())?;
    let k = spec.beta_index();
    let sd: Vec<f64> = smoothed.covs.iter().map(|c| c[(k, k)].max(0.0).sqrt()).collect();
    let beta = smoothed.component(k);
    Ok(render(json!({
        "first_step": filtered.first_step,
        "y": y,
        "true_beta": sim.true_beta,
        "filtered_beta": filtered.filtered_component(k),
        "smoothed_beta": beta,
        "lower": beta.iter().zip(&sd).map(|(b, s)| b - 2.0 * s).collect::<Vec<_>>(),
        "upper": beta.iter().zip(&sd).map(|(b, s)| b + 2.0 * s).collect::<Vec<_>>(),
        "log_lf": filtered.log_likelihood,
    })))
}

/// Rolling lag-`lag` autocorrelation with its band and rolling Ljung-Box
/// p-values for a `date,close` CSV.
pub fn rolling_json(prices_csv: &str, window: usize, lag: usize, alpha: f64) -> Result<String, String> {
    let returns = log_returns(&parse_prices(prices_csv).map_err(|e| e.to_string())?);
    let acf = rolling_acf(&returns, window, lag, alpha).map_err(|e| e.to_string())?;
    let lb = rolling_ljung_box(&returns, window, lag).map_err(|e| e.to_string())?;
    let (lower, upper) = acf.bounds.unwrap_or((f64::NAN, f64::NAN));
    let dates: Vec<String> = acf.end_dates.iter().map(|d| d.to_string()).collect();
    Ok(render(json!({
        "end_dates": dates,
        "acf": acf.values,
        "lower": lower,
        "upper": upper,
        "lb_p_value": lb.values,
        "alpha": alpha,
    })))
}

/// Mean-adjusts the returns of a `date,close` CSV and fits one model.
pub fn fit_json(prices_csv: &str, model: &str, ar_order: usize) -> Result<String, String> {
    let spec = ModelSpec::from_name(model, ar_order).map_err(|e| e.to_string())?;
    let returns = log_returns(&parse_prices(prices_csv).map_err(|e| e.to_string())?);
    let data = mean_adjust(&returns).map_err(|e| e.to_string())?;
    let result = calibrate::fit(spec, &data, None).map_err(|e| e.to_string())?;
    Ok(render(result.to_json()))
}

#[wasm_bindgen(js_name = simulateAndSmooth)]
pub fn simulate_and_smooth(model: &str, ar_order: usize, theta: &str, length: usize, seed: u32) -> Result<String, JsError> {
    simulate_json(model, ar_order, theta, length, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = rollingDiagnostics)]
pub fn rolling_diagnostics(prices_csv: &str, window: usize, lag: usize, alpha: f64) -> Result<String, JsError> {
    rolling_json(prices_csv, window, lag, alpha).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = fitModel)]
pub fn fit_model(prices_csv: &str, model: &str, ar_order: usize) -> Result<String, JsError> {
    fit_json(prices_csv, model, ar_order).map_err(|e| JsError::new(&e))
}
