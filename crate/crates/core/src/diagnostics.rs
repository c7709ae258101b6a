//! Sample autocorrelation, Ljung-Box portmanteau tests and their rolling
//! window versions.
//!
//! Each rolling window is treated as an independent sub-sample: the window
//! mean is re-estimated and the lag-`l` autocorrelation uses the full-window
//! centred sum of squares as denominator.

use std::io::Write;

use chrono::NaiveDate;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use thiserror::Error;

use crate::ingest::ReturnSeries;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("degenerate window: the series has zero variance")]
    DegenerateWindow,
    #[error("lag {lag} is out of range for {n} observations")]
    LagOutOfRange { lag: usize, n: usize },
    #[error("window {window} is invalid for {n} observations")]
    InvalidWindow { window: usize, n: usize },
    #[error("significance level must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AcfResult {
    pub lag: usize,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LjungBoxResult {
    pub lag: usize,
    pub q: f64,
    pub p_value: f64,
}

/// Centred values and their sum of squares, or an error for constant data.
fn centred(values: &[f64]) -> Result<(Vec<f64>, f64), DiagnosticsError> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let dev: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let ss: f64 = dev.iter().map(|d| d * d).sum();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must land here too
    if !(ss > (f64::EPSILON * scale).powi(2) * n) {
        return Err(DiagnosticsError::DegenerateWindow);
    }
    Ok((dev, ss))
}

fn acf_from_centred(dev: &[f64], ss: f64, lag: usize) -> f64 {
    let num: f64 = dev[lag..].iter().zip(dev).map(|(a, b)| a * b).sum();
    num / ss
}

/// Sample autocorrelation at `lag`.
pub fn sample_acf(values: &[f64], lag: usize) -> Result<AcfResult, DiagnosticsError> {
    if lag >= values.len() {
        return Err(DiagnosticsError::LagOutOfRange {
            lag,
            n: values.len(),
        });
    }
    let (dev, ss) = centred(values)?;
    Ok(AcfResult {
        lag,
        rho: acf_from_centred(&dev, ss, lag),
    })
}

/// Ljung-Box `Q(l) = n(n+2) sum_{k<=l} rho_k^2 / (n-k)` with its chi-square(l) p-value.
pub fn ljung_box(values: &[f64], lag: usize) -> Result<LjungBoxResult, DiagnosticsError> {
    let n = values.len();
    if lag == 0 || lag >= n {
        return Err(DiagnosticsError::LagOutOfRange { lag, n });
    }
    let (dev, ss) = centred(values)?;
    let nf = n as f64;
    let sum: f64 = (1..=lag)
        .map(|k| {
            let r = acf_from_centred(&dev, ss, k);
            r * r / (nf - k as f64)
        })
        .sum();
    let q = nf * (nf + 2.0) * sum;
    Ok(LjungBoxResult {
        lag,
        q,
        p_value: chi_square_sf(q, lag as u32),
    })
}

/// Upper tail probability of a chi-square law, floored at the smallest
/// positive double so the result stays in `(0, 1]`.
pub fn chi_square_sf(x: f64, df: u32) -> f64 {
    assert!(df >= 1, "chi-square needs at least one degree of freedom");
    if x <= 0.0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("df >= 1 is a valid parameter");
    dist.sf(x).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Half-width `z_{1-alpha/2} / sqrt(w)` of the two-sided band for a sample
/// autocorrelation under the white-noise null.
pub fn acf_confidence_bound(window: usize, alpha: f64) -> Result<f64, DiagnosticsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(DiagnosticsError::InvalidAlpha(alpha));
    }
    if window < 2 {
        return Err(DiagnosticsError::InvalidWindow { window, n: 0 });
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(1.0 - alpha / 2.0) / (window as f64).sqrt())
}

/// One statistic per window end date. `None` marks a degenerate window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RollingSeries {
    pub window: usize,
    pub lag: usize,
    pub end_dates: Vec<NaiveDate>,
    pub values: Vec<Option<f64>>,
    /// Symmetric `(lower, upper)` band; only present for autocorrelation series.
    pub bounds: Option<(f64, f64)>,
}

impl RollingSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Writes `end_date,stat,lower,upper`; undefined cells are left empty.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["end_date", "stat", "lower", "upper"])?;
        let (lower, upper) = match self.bounds {
            Some((l, u)) => (fmt_full(l), fmt_full(u)),
            None => (String::new(), String::new()),
        };
        for (date, value) in self.end_dates.iter().zip(&self.values) {
            let stat = value.map(fmt_full).unwrap_or_default();
            w.write_record([date.to_string(), stat, lower.clone(), upper.clone()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest representation that round-trips exactly (17 significant digits
/// at most).
pub(crate) fn fmt_full(x: f64) -> String {
    format!("{x:?}")
}

fn check_window(n: usize, window: usize, lag: usize) -> Result<(), DiagnosticsError> {
    if window == 0 || window > n {
        return Err(DiagnosticsError::InvalidWindow { window, n });
    }
    if lag >= window {
        return Err(DiagnosticsError::LagOutOfRange { lag, n: window });
    }
    Ok(())
}

fn rolling<F>(returns: &ReturnSeries, window: usize, stat: F) -> (Vec<NaiveDate>, Vec<Option<f64>>)
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let values = returns.values();
    let dates = returns.dates()[window - 1..].to_vec();
    let stats = values.windows(window).map(stat).collect();
    (dates, stats)
}

/// Lag-`lag` autocorrelation over the `N - w + 1` windows `{y_{t-w+1}..y_t}`.
pub fn rolling_acf(
    returns: &ReturnSeries,
    window: usize,
    lag: usize,
    alpha: f64,
) -> Result<RollingSeries, DiagnosticsError> {
    check_window(returns.len(), window, lag)?;
    let bound = acf_confidence_bound(window, alpha)?;
    let (end_dates, values) = rolling(returns, window, |w| sample_acf(w, lag).ok().map(|a| a.rho));
    Ok(RollingSeries {
        window,
        lag,
        end_dates,
        values,
        bounds: Some((-bound, bound)),
    })
}

/// Ljung-Box p-values over the `N - w + 1` windows.
pub fn rolling_ljung_box(
    returns: &ReturnSeries,
    window: usize,
    lag: usize,
) -> Result<RollingSeries, DiagnosticsError> {
    check_window(returns.len(), window, lag)?;
    if lag == 0 {
        return Err(DiagnosticsError::LagOutOfRange { lag, n: window });
    }
    let (end_dates, values) =
        rolling(returns, window, |w| ljung_box(w, lag).ok().map(|r| r.p_value));
    Ok(RollingSeries {
        window,
        lag,
        end_dates,
        values,
        bounds: None,
    })
}
