//! Price loading, log returns, mean adjustment and summary statistics.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("expected header `date,close`, found `{0}`")]
    Header(String),
    #[error("parse failure at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("non-positive price at row {row}")]
    NonPositivePrice { row: usize },
    #[error("non-monotone dates at row {row}")]
    NonMonotoneDates { row: usize },
    #[error("a price series needs at least 2 rows, got {0}")]
    TooShort(usize),
    #[error("returns are already mean-adjusted")]
    AlreadyAdjusted,
    #[error("dates and values differ in length ({dates} vs {values})")]
    LengthMismatch { dates: usize, values: usize },
}

/// Monthly closing prices with strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    closes: Vec<f64>,
}

impl PriceSeries {
    /// Validates ordering and positivity. Row numbers in errors are 1-based
    /// data rows (the header is not counted).
    pub fn new(dates: Vec<NaiveDate>, closes: Vec<f64>) -> Result<Self, IngestError> {
        if dates.len() != closes.len() {
            return Err(IngestError::LengthMismatch {
                dates: dates.len(),
                values: closes.len(),
            });
        }
        for (i, &c) in closes.iter().enumerate() {
            if !(c > 0.0 && c.is_finite()) {
                return Err(IngestError::NonPositivePrice { row: i + 1 });
            }
        }
        for i in 1..dates.len() {
            if dates[i] <= dates[i - 1] {
                return Err(IngestError::NonMonotoneDates { row: i + 1 });
            }
            let gap = (dates[i] - dates[i - 1]).num_days();
            if !(27..=35).contains(&gap) {
                log::warn!(
                    "irregular spacing of {gap} days between {} and {}",
                    dates[i - 1],
                    dates[i]
                );
            }
        }
        if closes.len() < 2 {
            return Err(IngestError::TooShort(closes.len()));
        }
        Ok(Self { dates, closes })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn closes(&self) -> &[f64] {
        &self.closes
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }
}

/// Reads a `date,close` CSV file.
pub fn load_prices(path: impl AsRef<Path>) -> Result<PriceSeries, IngestError> {
    let path = path.as_ref();
    let io_err = |source| IngestError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(io_err)?;
    parse_prices(&text)
}

/// Parses the `date,close` CSV format from an in-memory string.
pub fn parse_prices(text: &str) -> Result<PriceSeries, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| IngestError::Parse {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    if headers.len() != 2 || &headers[0] != "date" || &headers[1] != "close" {
        return Err(IngestError::Header(headers.iter().collect::<Vec<_>>().join(",")));
    }

    let mut dates = Vec::new();
    let mut closes = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| IngestError::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.len() != 2 {
            return Err(IngestError::Parse {
                row,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d").map_err(|e| {
            IngestError::Parse {
                row,
                message: format!("bad date `{}`: {e}", &record[0]),
            }
        })?;
        let close: f64 = record[1].parse().map_err(|e| IngestError::Parse {
            row,
            message: format!("bad close `{}`: {e}", &record[1]),
        })?;
        if !(close > 0.0 && close.is_finite()) {
            return Err(IngestError::NonPositivePrice { row });
        }
        if let Some(&prev) = dates.last() {
            if date <= prev {
                return Err(IngestError::NonMonotoneDates { row });
            }
        }
        dates.push(date);
        closes.push(close);
    }
    PriceSeries::new(dates, closes)
}

/// Log returns indexed by the date of the later price.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
    mean_adjusted: bool,
}

impl ReturnSeries {
    /// Wraps raw (not mean-adjusted) returns.
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self, IngestError> {
        if dates.len() != values.len() {
            return Err(IngestError::LengthMismatch {
                dates: dates.len(),
                values: values.len(),
            });
        }
        Ok(Self {
            dates,
            values,
            mean_adjusted: false,
        })
    }

    /// Returns with consecutive month-end dates starting at `start`.
    pub fn with_monthly_dates(start: NaiveDate, values: Vec<f64>) -> Self {
        let dates = month_ends(start, values.len());
        Self {
            dates,
            values,
            mean_adjusted: false,
        }
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_mean_adjusted(&self) -> bool {
        self.mean_adjusted
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `n` consecutive month-end dates, the first being the month end of `start`.
pub fn month_ends(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    use chrono::{Datelike, Months};
    let first_of_month = start.with_day(1).expect("day 1 always exists");
    (0..n)
        .map(|i| {
            let next = first_of_month + Months::new(i as u32 + 1);
            next.pred_opt().expect("date in range")
        })
        .collect()
}

/// `y_t = ln S_t - ln S_{t-1}`.
pub fn log_returns(prices: &PriceSeries) -> ReturnSeries {
    let values = prices
        .closes
        .windows(2)
        .map(|w| w[1].ln() - w[0].ln())
        .collect();
    ReturnSeries {
        dates: prices.dates[1..].to_vec(),
        values,
        mean_adjusted: false,
    }
}

/// Subtracts the sample mean. A second pass removes the rounding residue so
/// the output mean is zero to machine precision.
pub fn mean_adjust(returns: &ReturnSeries) -> Result<ReturnSeries, IngestError> {
    if returns.mean_adjusted {
        return Err(IngestError::AlreadyAdjusted);
    }
    let mut values = returns.values.clone();
    for _ in 0..2 {
        let m = mean(&values);
        values.iter_mut().for_each(|v| *v -= m);
    }
    Ok(ReturnSeries {
        dates: returns.dates.clone(),
        values,
        mean_adjusted: true,
    })
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with divisor `n - 1`.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (divisor `n - 1`).
    pub std: f64,
    /// `m3 / m2^1.5`; `None` when the series has zero variance.
    pub skewness: Option<f64>,
    /// Raw kurtosis `m4 / m2^2` (3 for a normal law); `None` on zero variance.
    pub kurtosis: Option<f64>,
}

#[derive(Debug, Error, PartialEq)]
#[error("summary statistics need at least 2 observations, got {0}")]
pub struct TooFewObservations(pub usize);

pub fn summary_stats(values: &[f64]) -> Result<SummaryStats, TooFewObservations> {
    let n = values.len();
    if n < 2 {
        return Err(TooFewObservations(n));
    }
    let nf = n as f64;
    let m = mean(values);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let std = (m2 / (nf - 1.0)).sqrt();
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let degenerate = m2 <= f64::EPSILON * f64::EPSILON * m.abs().max(1.0).powi(2);
    let (skewness, kurtosis) = if degenerate {
        (None, None)
    } else {
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2)))
    };

    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };

    Ok(SummaryStats {
        n,
        mean: m,
        median,
        std,
        skewness,
        kurtosis,
    })
}
