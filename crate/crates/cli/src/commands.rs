use std::path::Path;

use amh_core::calibrate::{self, compare_models};
use amh_core::diagnostics::{ljung_box, rolling_acf, rolling_ljung_box, sample_acf};
use amh_core::ingest::{load_prices, log_returns, mean_adjust, month_ends, summary_stats, ReturnSeries};
use amh_core::models::{ModelInstance, ModelSpec, Theta};
use amh_core::simulate::{simulate_from, start_date};
use amh_core::statespace::{rts_smooth, run_filter, write_states_csv, StateSpaceModel};
use chrono::Months;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::{csv_io, sibling, write_atomic};
use crate::{Format, ModelArg};

const TABLE_LAGS: [usize; 4] = [1, 5, 10, 15];
const MAX_LB_LAG: usize = 20;

fn spec_of(model: ModelArg, ar_order: usize) -> Result<ModelSpec, CliError> {
    Ok(match model {
        ModelArg::Tvar => ModelSpec::tvar(ar_order)?,
        ModelArg::Garch => ModelSpec::Garch,
        ModelArg::Garchm => ModelSpec::GarchM,
        ModelArg::Tgarch => ModelSpec::TGarch,
        ModelArg::Agarch => ModelSpec::AGarch,
    })
}

fn load_returns(input: &Path) -> Result<ReturnSeries, CliError> {
    Ok(log_returns(&load_prices(input)?))
}

fn print_json(value: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    println!("{text}");
    Ok(())
}

pub fn stats(input: &Path, format: Format, alpha: f64) -> Result<(), CliError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::Usage(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let returns = load_returns(input)?;
    let y = returns.values();
    let s = summary_stats(y).map_err(|e| CliError::Data(format!("{} returns: too few for statistics", e.0)))?;
    let mut table = Vec::new();
    for lag in TABLE_LAGS.into_iter().filter(|&l| l < y.len()) {
        let rho = sample_acf(y, lag)?.rho;
        let lb = ljung_box(y, lag)?;
        table.push(json!({ "lag": lag, "rho": rho, "q": lb.q, "p_value": lb.p_value }));
    }
    let mut tests = Vec::new();
    for lag in (1..=MAX_LB_LAG).filter(|&l| l < y.len()) {
        tests.push(ljung_box(y, lag)?);
    }
    let rejected = tests.iter().any(|t| t.p_value < alpha);
    let first = returns.dates().first().map(|d| d.to_string());
    let last = returns.dates().last().map(|d| d.to_string());

    match format {
        Format::Json => print_json(&json!({
            "input": input.display().to_string(),
            "start": first,
            "end": last,
            "n": s.n,
            "mean": s.mean,
            "median": s.median,
            "std": s.std,
            "skewness": s.skewness,
            "kurtosis": s.kurtosis,
            "autocorrelation": table,
            "ljung_box": tests,
            "alpha": alpha,
            "rejected_up_to_lag_20": rejected,
        })),
        Format::Table => {
            let opt = |v: Option<f64>| v.map_or("undefined".to_string(), |v| format!("{v:.5}"));
            println!("{:<18}{}", "Sample size, N", s.n);
            println!("{:<18}{:.5}", "Mean", s.mean);
            println!("{:<18}{:.5}", "Median", s.median);
            println!("{:<18}{:.5}", "Std", s.std);
            println!("{:<18}{}", "Skewness", opt(s.skewness));
            println!("{:<18}{}", "Kurtosis", opt(s.kurtosis));
            for row in &table {
                println!("{:<18}{:.4}", format!("rho_{}", row["lag"]), row["rho"].as_f64().unwrap_or(f64::NAN));
            }
            for row in &table {
                println!("{:<18}{:.4}", format!("Q({})", row["lag"]), row["q"].as_f64().unwrap_or(f64::NAN));
                println!("{:<18}{:.4}", "p-value", row["p_value"].as_f64().unwrap_or(f64::NAN));
            }
            println!(
                "Ljung-Box Q-tests up to lag {}: H0 is {} at {alpha}",
                tests.len(),
                if rejected { "rejected for some l" } else { "not rejected" }
            );
            Ok(())
        }
    }
}

pub fn rolling(input: &Path, window: usize, lag: usize, alpha: f64, out_dir: &Path) -> Result<(), CliError> {
    if window == 0 {
        return Err(CliError::Usage("window must be positive".into()));
    }
    if lag == 0 {
        return Err(CliError::Usage("lag must be positive".into()));
    }
    let returns = load_returns(input)?;
    let acf = rolling_acf(&returns, window, lag, alpha)?;
    let lb = rolling_ljung_box(&returns, window, lag)?;
    let acf_path = sibling(out_dir, input, "_rolling_acf.csv");
    let lb_path = sibling(out_dir, input, "_rolling_lb.csv");
    write_atomic(&acf_path, |w| acf.write_csv(w).map_err(csv_io))?;
    write_atomic(&lb_path, |w| lb.write_csv(w).map_err(csv_io))?;
    eprintln!(
        "{} windows written to {} and {}",
        acf.len(),
        acf_path.display(),
        lb_path.display()
    );
    Ok(())
}

pub fn fit(input: &Path, model: ModelArg, ar_order: usize, out_dir: &Path, states: bool) -> Result<(), CliError> {
    let spec = spec_of(model, ar_order)?;
    let returns = mean_adjust(&load_returns(input)?)?;
    let result = calibrate::fit(spec, &returns, None)?;
    if !result.log_lf.is_finite() {
        return Err(CliError::Numerical(format!("{}: non-finite likelihood at optimum", spec.label())));
    }
    let beta_path = sibling(out_dir, input, "_beta.csv");
    write_atomic(&beta_path, |w| result.write_beta_csv(w).map_err(csv_io))?;
    if states {
        let y = returns.values();
        let instance = ModelInstance::new(&result.theta)?;
        let prior = instance.initial_prior(y)?;
        let filtered = run_filter(&instance, y, &prior).map_err(|e| CliError::Numerical(e.to_string()))?;
        let smoothed = rts_smooth(&filtered, instance.system()).map_err(|e| CliError::Numerical(e.to_string()))?;
        let path = sibling(out_dir, input, "_states.csv");
        write_atomic(&path, |w| {
            write_states_csv(w, returns.dates(), &filtered, Some(&smoothed)).map_err(csv_io)
        })?;
    }
    print_json(&result.to_json())
}

pub fn compare(input: &Path, ar_order: usize, out: Option<&Path>) -> Result<(), CliError> {
    let returns = mean_adjust(&load_returns(input)?)?;
    let ranking = compare_models(&returns, &ModelSpec::all(ar_order))?;
    match out {
        Some(path) => write_atomic(path, |w| ranking.write_csv(w).map_err(csv_io))?,
        None => {
            let stdout = std::io::stdout();
            ranking
                .write_csv(stdout.lock())
                .map_err(|e| CliError::Data(format!("cannot write ranking: {e}")))?;
        }
    }
    if ranking.succeeded() == 0 {
        return Err(CliError::Numerical("every model failed to fit".into()));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    model: ModelArg,
    theta: &str,
    ar_order: usize,
    length: usize,
    seed: u64,
    beta0: f64,
    out: &Path,
    prices_out: Option<&Path>,
) -> Result<(), CliError> {
    let spec = spec_of(model, ar_order)?;
    let theta = Theta::from_json_str(spec, theta)?;
    let sim = simulate_from(&theta, length, seed, beta0)?;
    write_atomic(out, |w| sim.write_csv(w).map_err(csv_io))?;
    if let Some(path) = prices_out {
        let first = start_date() - Months::new(1);
        let dates = month_ends(first, length + 1);
        write_atomic(path, |w| {
            writeln!(w, "date,close")?;
            let mut log_price = 100f64.ln();
            writeln!(w, "{},{:?}", dates[0], 100.0)?;
            for (d, y) in dates[1..].iter().zip(sim.returns.values()) {
                log_price += y;
                writeln!(w, "{d},{:?}", log_price.exp())?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_names_map_to_specs() {
        assert_eq!(spec_of(ModelArg::Tvar, 2).unwrap(), ModelSpec::Tvar { order: 2 });
        assert_eq!(spec_of(ModelArg::Garchm, 1).unwrap(), ModelSpec::GarchM);
        assert_eq!(spec_of(ModelArg::Tvar, 0).unwrap_err().code(), 1);
    }
}
