//! Maximum-likelihood estimation, AIC ranking and standard errors.

mod hessian;
mod simplex;

use std::io::Write;

use chrono::NaiveDate;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::diagnostics::fmt_full;
use crate::ingest::{sample_variance, ReturnSeries};
use crate::models::{from_unconstrained, named_values, to_unconstrained, ModelError, ModelInstance, ModelSpec, Theta};
use crate::statespace::{filter_log_likelihood, rts_smooth, run_filter, StateSpaceError, StateSpaceModel};

pub use hessian::{hessian_step, negative_hessian, standard_errors_with};
use simplex::{minimize, SimplexOptions};

/// Objective value assigned to parameter vectors at which the filter fails.
pub const FAILED_PROBE_LOG_LF: f64 = -1e12;

/// Shortest series accepted by [`fit`].
pub const MIN_OBSERVATIONS: usize = 30;

#[derive(Debug, Error, PartialEq)]
pub enum CalibrateError {
    #[error("returns must be mean-adjusted before fitting")]
    NotMeanAdjusted,
    #[error("at least {needed} observations are required, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("initial parameters do not match model {expected}")]
    SpecMismatch { expected: String },
    #[error("the filter failed at every parameter vector tried for {0}")]
    FitFailed(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Simplex size in natural parameter units at which the search stops.
    pub tolerance: f64,
    pub max_restarts: usize,
    /// Initial state covariance scale, `P_0 = p0 I`.
    pub p0: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 2000,
            tolerance: 1e-6,
            max_restarts: 3,
            p0: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub theta: Theta,
    pub log_lf: f64,
    pub aic: f64,
    /// `None` where the standard error is undefined.
    pub std_errors: Vec<Option<f64>>,
    pub smoothed_beta: Vec<(NaiveDate, f64)>,
    pub iterations: usize,
    pub converged: bool,
    pub floor_hits: usize,
}

impl FitResult {
    pub fn to_json(&self) -> Value {
        json!({
            "spec": self.spec,
            "theta": self.theta,
            "log_lf": self.log_lf,
            "aic": self.aic,
            "std_errors": named_values(self.spec, &self.std_errors),
            "converged": self.converged,
            "iterations": self.iterations,
            "floor_hits": self.floor_hits,
            "smoothed_beta": self
                .smoothed_beta
                .iter()
                .map(|(d, v)| json!({ "date": d.to_string(), "value": v }))
                .collect::<Vec<_>>(),
        })
    }

    /// Writes `end_date,beta`.
    pub fn write_beta_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["end_date", "beta"])?;
        for (d, v) in &self.smoothed_beta {
            w.write_record([d.to_string(), fmt_full(*v)])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl Serialize for FitResult {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

/// `2k - 2 ln L`.
pub fn aic(k: usize, log_lf: f64) -> f64 {
    2.0 * k as f64 - 2.0 * log_lf
}

/// Log-likelihood of `theta` on `y` and the number of floored variance
/// predictions, with the default prior scale.
pub fn log_likelihood_at(theta: &Theta, y: &[f64]) -> Result<(f64, usize), CalibrateError> {
    log_likelihood_scaled(theta, y, 1.0)
}

fn log_likelihood_scaled(theta: &Theta, y: &[f64], p0: f64) -> Result<(f64, usize), CalibrateError> {
    let model = ModelInstance::new(theta)?;
    let prior = model.initial_prior_scaled(y, p0)?;
    Ok(filter_log_likelihood(&model, y, &prior)?)
}

fn check_data(data: &ReturnSeries) -> Result<(), CalibrateError> {
    if !data.is_mean_adjusted() {
        return Err(CalibrateError::NotMeanAdjusted);
    }
    if data.len() < MIN_OBSERVATIONS {
        return Err(CalibrateError::TooShort {
            needed: MIN_OBSERVATIONS,
            got: data.len(),
        });
    }
    Ok(())
}

/// Fits `spec` from `init` or the default starting point.
pub fn fit(spec: ModelSpec, data: &ReturnSeries, init: Option<&Theta>) -> Result<FitResult, CalibrateError> {
    fit_with(spec, data, init, &FitOptions::default())
}

pub fn fit_with(
    spec: ModelSpec,
    data: &ReturnSeries,
    init: Option<&Theta>,
    options: &FitOptions,
) -> Result<FitResult, CalibrateError> {
    check_data(data)?;
    let y = data.values();
    let start = match init {
        Some(theta) if theta.spec() != spec => {
            return Err(CalibrateError::SpecMismatch {
                expected: spec.label(),
            })
        }
        Some(theta) => theta.clone(),
        None => Theta::default_for(spec, sample_variance(y)),
    };
    let x0 = to_unconstrained(&start)?;

    let objective = |x: &[f64]| -> f64 {
        let ll = from_unconstrained(spec, x)
            .ok()
            .and_then(|theta| log_likelihood_scaled(&theta, y, options.p0).ok())
            .map(|(ll, _)| ll)
            .filter(|ll| ll.is_finite())
            .unwrap_or(FAILED_PROBE_LOG_LF);
        -ll
    };
    let natural = |x: &[f64]| -> Vec<f64> {
        from_unconstrained(spec, x)
            .map(|t| t.to_vec())
            .unwrap_or_else(|_| vec![f64::NAN; x.len()])
    };
    let opts = SimplexOptions {
        max_iterations: options.max_iterations,
        tolerance: options.tolerance,
        initial_step: 0.05,
        max_restarts: options.max_restarts,
    };
    let result = minimize(objective, &x0, natural, &opts);
    if -result.value <= FAILED_PROBE_LOG_LF {
        return Err(CalibrateError::FitFailed(spec.label()));
    }
    if !result.converged {
        log::warn!("{}: iteration budget exhausted", spec.label());
    }
    let theta = from_unconstrained(spec, &result.x)?;

    let model = ModelInstance::new(&theta)?;
    let prior = model.initial_prior_scaled(y, options.p0)?;
    let filtered = run_filter(&model, y, &prior)?;
    let smoothed = rts_smooth(&filtered, model.system())?;
    let first = model.first_step();
    let smoothed_beta = smoothed
        .component(spec.beta_index())
        .into_iter()
        .enumerate()
        .map(|(i, b)| (data.dates()[first + i], b))
        .collect();
    let log_lf = filtered.log_likelihood;
    let std_errors = standard_errors_scaled(&theta, y, options.p0);

    Ok(FitResult {
        spec,
        aic: aic(spec.param_count(), log_lf),
        theta,
        log_lf,
        std_errors,
        smoothed_beta,
        iterations: result.iterations,
        converged: result.converged,
        floor_hits: filtered.floor_hits,
    })
}

/// Hessian-based standard errors at `theta`, in natural units and in the
/// order of [`ModelSpec::param_names`].
pub fn standard_errors(theta: &Theta, y: &[f64]) -> Vec<Option<f64>> {
    standard_errors_scaled(theta, y, 1.0)
}

fn standard_errors_scaled(theta: &Theta, y: &[f64], p0: f64) -> Vec<Option<f64>> {
    let spec = theta.spec();
    let f = |v: &[f64]| -> Option<f64> {
        let t = Theta::from_vec(spec, v).ok()?;
        t.validate().ok()?;
        log_likelihood_scaled(&t, y, p0).ok().map(|(ll, _)| ll)
    };
    standard_errors_with(f, &theta.to_vec())
}

/// One row of an AIC ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingRow {
    pub spec: ModelSpec,
    pub k: usize,
    pub fit: Result<FitResult, String>,
    pub preferred: bool,
}

impl RankingRow {
    pub fn aic(&self) -> Option<f64> {
        self.fit.as_ref().ok().map(|f| f.aic)
    }

    pub fn log_lf(&self) -> Option<f64> {
        self.fit.as_ref().ok().map(|f| f.log_lf)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    /// Sorted by ascending AIC; failed fits last, in input order.
    pub rows: Vec<RankingRow>,
}

impl Ranking {
    pub fn preferred(&self) -> Option<&RankingRow> {
        self.rows.iter().find(|r| r.preferred)
    }

    pub fn succeeded(&self) -> usize {
        self.rows.iter().filter(|r| r.fit.is_ok()).count()
    }

    /// Writes `model,k,log_lf,aic,preferred,error`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["model", "k", "log_lf", "aic", "preferred", "error"])?;
        for row in &self.rows {
            let opt = |v: Option<f64>| v.map(fmt_full).unwrap_or_default();
            w.write_record([
                row.spec.name().to_string(),
                row.k.to_string(),
                opt(row.log_lf()),
                opt(row.aic()),
                row.preferred.to_string(),
                row.fit.as_ref().err().cloned().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fits every spec from the default start and ranks them by AIC. A failed
/// fit is recorded in its row.
pub fn compare_models(data: &ReturnSeries, specs: &[ModelSpec]) -> Result<Ranking, CalibrateError> {
    check_data(data)?;
    let mut rows: Vec<RankingRow> = specs
        .iter()
        .map(|&spec| RankingRow {
            spec,
            k: spec.param_count(),
            fit: fit(spec, data, None).map_err(|e| e.to_string()),
            preferred: false,
        })
        .collect();
    rows.sort_by(|a, b| match (a.aic(), b.aic()) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    if let Some(first) = rows.first_mut() {
        first.preferred = first.fit.is_ok();
    }
    Ok(Ranking { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::mean_adjust;
    use crate::simulate::simulate;

    fn garch_data(n: usize, seed: u64) -> ReturnSeries {
        let theta = Theta::Garch {
            omega: 0.0005,
            a1: 0.25,
            b1: 0.7,
            sigma2_w: 1e-5,
        };
        mean_adjust(&simulate(&theta, n, seed).unwrap().returns).unwrap()
    }

    #[test]
    fn aic_arithmetic() {
        assert!((aic(5, 622.1077) - -1234.2154).abs() < 1e-9);
        assert!((aic(4, 522.9770) - -1037.954).abs() < 1e-9);
        assert_eq!(aic(0, 0.0), 0.0);
    }

    #[test]
    fn rejects_raw_or_short_data() {
        let raw = simulate(
            &Theta::Garch {
                omega: 0.0005,
                a1: 0.25,
                b1: 0.7,
                sigma2_w: 1e-5,
            },
            100,
            1,
        )
        .unwrap()
        .returns;
        assert_eq!(fit(ModelSpec::Garch, &raw, None), Err(CalibrateError::NotMeanAdjusted));
        let short = garch_data(20, 1);
        assert!(matches!(fit(ModelSpec::Garch, &short, None), Err(CalibrateError::TooShort { .. })));
        let tv = Theta::default_for(ModelSpec::tvar(1).unwrap(), 0.01);
        assert!(matches!(
            fit(ModelSpec::Garch, &garch_data(100, 1), Some(&tv)),
            Err(CalibrateError::SpecMismatch { .. })
        ));
    }

    #[test]
    fn fit_improves_on_start_and_is_consistent() {
        let data = garch_data(300, 4);
        let start = Theta::default_for(ModelSpec::Garch, sample_variance(data.values()));
        let (start_ll, _) = log_likelihood_at(&start, data.values()).unwrap();
        let r = fit(ModelSpec::Garch, &data, None).unwrap();
        assert!(r.log_lf >= start_ll);
        assert_eq!(r.aic, aic(4, r.log_lf));
        assert!(r.theta.validate().is_ok());
        assert_eq!(r.smoothed_beta.len(), 299);
        assert_eq!(r.smoothed_beta[0].0, data.dates()[1]);
        let json = r.to_json();
        for key in ["spec", "theta", "log_lf", "aic", "std_errors", "converged", "iterations", "floor_hits"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert_eq!(json["smoothed_beta"][0]["date"], data.dates()[1].to_string());
    }

    #[test]
    fn ranking_marks_single_preferred_model() {
        let data = garch_data(150, 8);
        let ranking = compare_models(&data, &[ModelSpec::Garch, ModelSpec::tvar(1).unwrap(), ModelSpec::Garch]).unwrap();
        assert_eq!(ranking.rows.len(), 3);
        assert_eq!(ranking.rows.iter().filter(|r| r.preferred).count(), 1);
        assert!(ranking.rows[0].preferred);
        let garch: Vec<f64> = ranking
            .rows
            .iter()
            .filter(|r| r.spec == ModelSpec::Garch)
            .map(|r| r.aic().unwrap())
            .collect();
        assert_eq!(garch[0], garch[1]);
        let mut buf = Vec::new();
        ranking.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("model,k,log_lf,aic,preferred,error\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
