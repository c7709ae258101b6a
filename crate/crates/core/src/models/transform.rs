//! Bijection between the interior of each parameter set and `R^p`.
//!
//! Positive parameters go through `ln`/`exp`. The coefficients entering a
//! stationarity sum are mapped as shares `s_i` of a simplex with slack,
//! `s_i = e^{c_i} / (1 + sum_j e^{c_j})`, so their weighted sum stays below
//! one. `delta` is left as is.

use super::{ModelError, ModelSpec, Theta};

/// Unconstrained coordinates are clamped here before exponentiation so
/// extreme inputs still produce valid parameters.
const LOG_LIMIT: f64 = 700.0;
const SHARE_LIMIT: f64 = 25.0;

fn log_forward(name: &str, v: f64) -> Result<f64, ModelError> {
    if v > 0.0 {
        Ok(v.ln())
    } else {
        Err(ModelError::Boundary { field: name.into() })
    }
}

fn log_inverse(c: f64) -> f64 {
    c.clamp(-LOG_LIMIT, LOG_LIMIT).exp()
}

fn shares_forward(names: &[&str], shares: &[f64]) -> Result<Vec<f64>, ModelError> {
    let slack = 1.0 - shares.iter().sum::<f64>();
    if slack <= 0.0 {
        return Err(ModelError::Boundary {
            field: names.last().copied().unwrap_or("b1").into(),
        });
    }
    shares
        .iter()
        .zip(names)
        .map(|(&s, name)| {
            if s > 0.0 {
                Ok((s / slack).ln())
            } else {
                Err(ModelError::Boundary {
                    field: (*name).into(),
                })
            }
        })
        .collect()
}

fn shares_inverse(c: &[f64]) -> Vec<f64> {
    let clamped: Vec<f64> = c.iter().map(|v| v.clamp(-SHARE_LIMIT, SHARE_LIMIT)).collect();
    let top = clamped.iter().fold(0.0f64, |m, &v| m.max(v));
    let slack = (-top).exp();
    let exps: Vec<f64> = clamped.iter().map(|v| (v - top).exp()).collect();
    let denom = slack + exps.iter().sum::<f64>();
    exps.iter().map(|e| e / denom).collect()
}

/// Maps an interior parameter vector to unconstrained coordinates.
/// Parameters on the boundary (a zero coefficient, a unit persistence) are
/// rejected.
pub fn to_unconstrained(theta: &Theta) -> Result<Vec<f64>, ModelError> {
    theta.validate()?;
    Ok(match theta {
        Theta::Tvar { sigma2_w, sigma2_eps } => {
            let mut v = sigma2_w
                .iter()
                .enumerate()
                .map(|(i, s)| log_forward(&format!("sigma2_w_{}", i + 1), *s))
                .collect::<Result<Vec<_>, _>>()?;
            v.push(log_forward("sigma2_eps", *sigma2_eps)?);
            v
        }
        Theta::Garch { omega, a1, b1, sigma2_w } => {
            let c = shares_forward(&["a1", "b1"], &[*a1, *b1])?;
            vec![log_forward("omega", *omega)?, c[0], c[1], log_forward("sigma2_w", *sigma2_w)?]
        }
        Theta::GarchM {
            omega,
            a1,
            b1,
            sigma2_w,
            delta,
        } => {
            let c = shares_forward(&["a1", "b1"], &[*a1, *b1])?;
            vec![
                log_forward("omega", *omega)?,
                c[0],
                c[1],
                log_forward("sigma2_w", *sigma2_w)?,
                *delta,
            ]
        }
        Theta::TGarch {
            omega,
            a1_plus,
            a1_minus,
            b1,
            sigma2_w,
        } => {
            let c = shares_forward(&["a1_plus", "a1_minus", "b1"], &[a1_plus / 2.0, a1_minus / 2.0, *b1])?;
            vec![
                log_forward("omega", *omega)?,
                c[0],
                c[1],
                c[2],
                log_forward("sigma2_w", *sigma2_w)?,
            ]
        }
        Theta::AGarch {
            omega,
            a1,
            a1_plus,
            b1,
            sigma2_w,
        } => {
            let c = shares_forward(&["a1", "a1_plus", "b1"], &[*a1, a1_plus / 2.0, *b1])?;
            vec![
                log_forward("omega", *omega)?,
                c[0],
                c[1],
                c[2],
                log_forward("sigma2_w", *sigma2_w)?,
            ]
        }
    })
}

/// Inverse map. Always yields a parameter vector satisfying the constraints.
pub fn from_unconstrained(spec: ModelSpec, v: &[f64]) -> Result<Theta, ModelError> {
    if v.len() != spec.param_count() {
        return Err(ModelError::Arity {
            spec: spec.label(),
            expected: spec.param_count(),
            got: v.len(),
        });
    }
    Ok(match spec {
        ModelSpec::Tvar { order } => Theta::Tvar {
            sigma2_w: v[..order].iter().map(|&c| log_inverse(c)).collect(),
            sigma2_eps: log_inverse(v[order]),
        },
        ModelSpec::Garch => {
            let s = shares_inverse(&v[1..3]);
            Theta::Garch {
                omega: log_inverse(v[0]),
                a1: s[0],
                b1: s[1],
                sigma2_w: log_inverse(v[3]),
            }
        }
        ModelSpec::GarchM => {
            let s = shares_inverse(&v[1..3]);
            Theta::GarchM {
                omega: log_inverse(v[0]),
                a1: s[0],
                b1: s[1],
                sigma2_w: log_inverse(v[3]),
                delta: v[4],
            }
        }
        ModelSpec::TGarch => {
            let s = shares_inverse(&v[1..4]);
            Theta::TGarch {
                omega: log_inverse(v[0]),
                a1_plus: 2.0 * s[0],
                a1_minus: 2.0 * s[1],
                b1: s[2],
                sigma2_w: log_inverse(v[4]),
            }
        }
        ModelSpec::AGarch => {
            let s = shares_inverse(&v[1..4]);
            Theta::AGarch {
                omega: log_inverse(v[0]),
                a1: s[0],
                a1_plus: 2.0 * s[1],
                b1: s[2],
                sigma2_w: log_inverse(v[4]),
            }
        }
    })
}
