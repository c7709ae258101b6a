//! Forward simulation of the five models.
//!
//! Variates come from ChaCha20 (`rand_chacha`, seeded with `seed_from_u64`)
//! and the Ziggurat standard normal of `rand_distr`. Every step after the
//! first draws the random-walk shocks before the observation shock, also when
//! `sigma2_w = 0`, so paths with the same seed stay aligned across models.
//!
//! The variance recursion is driven by the true shocks `sqrt(h_t) z_t`, not
//! filter residuals.

use std::io::Write;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::diagnostics::fmt_full;
use crate::ingest::ReturnSeries;
use crate::models::{ModelError, Theta};

#[derive(Debug, Error, PartialEq)]
pub enum SimulateError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("simulation length must be at least 2, got {0}")]
    TooShort(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub returns: ReturnSeries,
    pub true_beta: Vec<f64>,
    /// Conditional variance; constant `sigma2_eps` for TV-AR.
    pub true_h: Vec<f64>,
    pub seed: u64,
}

impl SimOutput {
    /// Writes `t,y,true_beta,true_h` with `t` the zero-based index.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "y", "true_beta", "true_h"])?;
        for (t, ((y, b), h)) in self
            .returns
            .values()
            .iter()
            .zip(&self.true_beta)
            .zip(&self.true_h)
            .enumerate()
        {
            w.write_record([t.to_string(), fmt_full(*y), fmt_full(*b), fmt_full(*h)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// First synthetic date.
pub fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(1995, 1, 31).expect("valid date")
}

/// Simulates with `beta_1` starting at zero.
pub fn simulate(theta: &Theta, length: usize, seed: u64) -> Result<SimOutput, SimulateError> {
    simulate_from(theta, length, seed, 0.0)
}

/// Simulates with `beta_1` starting at `beta0`; further TV-AR coefficients
/// start at zero.
pub fn simulate_from(theta: &Theta, length: usize, seed: u64, beta0: f64) -> Result<SimOutput, SimulateError> {
    theta.validate()?;
    if length < 2 {
        return Err(SimulateError::TooShort(length));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (y, true_beta, true_h) = match theta {
        Theta::Tvar { sigma2_w, sigma2_eps } => tvar_path(&mut rng, sigma2_w, *sigma2_eps, length, beta0),
        _ => garch_path(&mut rng, theta, length, beta0),
    };
    Ok(SimOutput {
        returns: ReturnSeries::with_monthly_dates(start_date(), y),
        true_beta,
        true_h,
        seed,
    })
}

fn normal(rng: &mut ChaCha20Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn tvar_path(
    rng: &mut ChaCha20Rng,
    sigma2_w: &[f64],
    sigma2_eps: f64,
    length: usize,
    beta0: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let order = sigma2_w.len();
    let sd_w: Vec<f64> = sigma2_w.iter().map(|v| v.sqrt()).collect();
    let sd_eps = sigma2_eps.sqrt();
    let mut beta = vec![0.0; order];
    beta[0] = beta0;
    let mut y = Vec::with_capacity(length);
    let mut path = Vec::with_capacity(length);
    for t in 0..length {
        if t >= order {
            for (b, sd) in beta.iter_mut().zip(&sd_w) {
                *b += sd * normal(rng);
            }
        }
        let z = normal(rng);
        let ar: f64 = if t >= order {
            beta.iter().enumerate().map(|(i, b)| b * y[t - 1 - i]).sum()
        } else {
            0.0
        };
        y.push(ar + sd_eps * z);
        path.push(beta[0]);
    }
    (y, path, vec![sigma2_eps; length])
}

fn garch_path(rng: &mut ChaCha20Rng, theta: &Theta, length: usize, beta0: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (omega, b1, persistence) = theta.variance_recursion().expect("GARCH kind");
    let sd_w = match *theta {
        Theta::Garch { sigma2_w, .. }
        | Theta::GarchM { sigma2_w, .. }
        | Theta::TGarch { sigma2_w, .. }
        | Theta::AGarch { sigma2_w, .. } => sigma2_w.sqrt(),
        Theta::Tvar { .. } => unreachable!(),
    };
    let delta = match *theta {
        Theta::GarchM { delta, .. } => delta,
        _ => 0.0,
    };
    let impact = |e: f64| -> f64 {
        let e2 = e * e;
        match *theta {
            Theta::Garch { a1, .. } | Theta::GarchM { a1, .. } => a1 * e2,
            Theta::TGarch { a1_plus, a1_minus, .. } => {
                if e > 0.0 {
                    a1_plus * e2
                } else if e < 0.0 {
                    a1_minus * e2
                } else {
                    0.0
                }
            }
            Theta::AGarch { a1, a1_plus, .. } => a1 * e2 + a1_plus * e.max(0.0).powi(2),
            Theta::Tvar { .. } => unreachable!(),
        }
    };

    let mut y = Vec::with_capacity(length);
    let mut betas = Vec::with_capacity(length);
    let mut hs = Vec::with_capacity(length);
    let mut h = omega / (1.0 - persistence);
    let mut beta = beta0;
    let mut shock = h.sqrt() * normal(rng);
    y.push(delta * h + shock);
    betas.push(beta);
    hs.push(h);
    for t in 1..length {
        h = omega + impact(shock) + b1 * h;
        beta += sd_w * normal(rng);
        shock = h.sqrt() * normal(rng);
        y.push(beta * y[t - 1] + delta * h + shock);
        betas.push(beta);
        hs.push(h);
    }
    (y, betas, hs)
}
