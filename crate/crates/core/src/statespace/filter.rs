use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{Prior, StateSpaceError, StateSpaceModel};

/// Everything the filter knows at one observation index `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterStep {
    pub t: usize,
    /// `e_t = y_t - H_t x_{t|t-1}`
    pub innovation: f64,
    /// `R_{e,t} = H_t P_{t|t-1} H_t^T + R_t`
    pub innovation_var: f64,
    pub observation_var: f64,
    pub gain: DVector<f64>,
    pub prior_mean: DVector<f64>,
    pub prior_cov: DMatrix<f64>,
    pub filtered_mean: DVector<f64>,
    pub filtered_cov: DMatrix<f64>,
    /// `x_{t+1|t}`
    pub predicted_mean: DVector<f64>,
    /// `P_{t+1|t}`
    pub predicted_cov: DMatrix<f64>,
}

impl FilterStep {
    /// Contribution of this step to the log-likelihood, including its share
    /// of the `ln 2 pi` constant.
    pub fn log_likelihood(&self) -> f64 {
        -0.5 * ((2.0 * PI).ln() + self.innovation_var.ln() + self.innovation.powi(2) / self.innovation_var)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub first_step: usize,
    pub steps: Vec<FilterStep>,
    pub log_likelihood: f64,
    /// Number of steps at which the model floored its observation variance.
    pub floor_hits: usize,
}

impl FilterOutput {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `e_t / sqrt(R_{e,t})` for every filtered step.
    pub fn standardized_innovations(&self) -> Vec<f64> {
        self.steps
            .iter()
            .map(|s| s.innovation / s.innovation_var.sqrt())
            .collect()
    }

    /// Filtered trajectory of one state component.
    pub fn filtered_component(&self, i: usize) -> Vec<f64> {
        self.steps.iter().map(|s| s.filtered_mean[i]).collect()
    }
}

/// Prediction error decomposition of the Gaussian log-likelihood,
/// `-(T/2) ln 2pi - 1/2 sum (ln R_{e,t} + e_t^2 / R_{e,t})`, over the
/// filtered steps only.
pub fn log_likelihood(output: &FilterOutput) -> f64 {
    let t_eff = output.steps.len() as f64;
    let sum: f64 = output
        .steps
        .iter()
        .map(|s| s.innovation_var.ln() + s.innovation * s.innovation / s.innovation_var)
        .sum();
    -0.5 * t_eff * (2.0 * PI).ln() - 0.5 * sum
}

/// Receives the quantities of each step; lets the likelihood-only path skip
/// allocations.
trait StepSink {
    const RECORDS: bool;
    fn record(&mut self, _step: FilterStep) {}
}

struct Discard;
impl StepSink for Discard {
    const RECORDS: bool = false;
}

impl StepSink for Vec<FilterStep> {
    const RECORDS: bool = true;
    fn record(&mut self, step: FilterStep) {
        self.push(step);
    }
}

struct Summary {
    log_likelihood: f64,
    floor_hits: usize,
}

fn to_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn from_row_major(n: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, data)
}

fn filter_core<M, S>(model: &M, y: &[f64], prior: &Prior, sink: &mut S) -> Result<Summary, StateSpaceError>
where
    M: StateSpaceModel + ?Sized,
    S: StepSink,
{
    let sys = model.system();
    let n = sys.state_dim();
    let d = sys.control_dim();
    if prior.mean.len() != n || prior.cov.shape() != (n, n) {
        return Err(StateSpaceError::Dimension(format!(
            "prior is {}-dimensional with a {}x{} covariance for a {n}-state",
            prior.mean.len(),
            prior.cov.nrows(),
            prior.cov.ncols()
        )));
    }
    let first = model.first_step();
    if first >= y.len() {
        return Err(StateSpaceError::NoObservations {
            first,
            len: y.len(),
        });
    }

    let f = to_row_major(sys.f());
    let b = to_row_major(sys.b());
    let gqg = to_row_major(sys.process_covariance());

    let mut x: Vec<f64> = prior.mean.iter().copied().collect();
    let mut p = to_row_major(&prior.cov);
    let mut h = vec![0.0; n];
    let mut ph = vec![0.0; n];
    let mut k = vec![0.0; n];
    let mut u = vec![0.0; d];
    let mut xf = vec![0.0; n];
    let mut pf = vec![0.0; n * n];
    let mut fp = vec![0.0; n * n];

    let mut sum = 0.0;
    let mut floor_hits = 0;

    for t in first..y.len() {
        let obs = model.observe(t, y, &x, &mut h);
        if obs.floored {
            floor_hits += 1;
        }

        // P H^T and R_e
        for i in 0..n {
            ph[i] = (0..n).map(|j| p[i * n + j] * h[j]).sum();
        }
        let re = h.iter().zip(&ph).map(|(a, b)| a * b).sum::<f64>() + obs.variance;
        if !(re > 0.0 && re.is_finite()) {
            return Err(StateSpaceError::Numerical {
                step: t,
                reason: "innovation variance is not positive",
            });
        }
        let e = y[t] - h.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();

        // measurement update; (I - K H) P = P - K (H P)
        for i in 0..n {
            k[i] = ph[i] / re;
            xf[i] = x[i] + k[i] * e;
        }
        for i in 0..n {
            for j in 0..n {
                let hp_j: f64 = (0..n).map(|l| h[l] * p[l * n + j]).sum();
                pf[i * n + j] = p[i * n + j] - k[i] * hp_j;
            }
        }
        symmetrize_flat(&mut pf, n);

        let term = re.ln() + e * e / re;
        if !term.is_finite() || xf.iter().any(|v| !v.is_finite()) {
            return Err(StateSpaceError::Numerical {
                step: t,
                reason: "non-finite filtered state",
            });
        }
        sum += term;

        model.control(t, y, e, &mut u);

        // time update into the buffers holding x_{t+1|t}, P_{t+1|t}
        let prior_mean = S::RECORDS.then(|| DVector::from_column_slice(&x));
        let prior_cov = S::RECORDS.then(|| from_row_major(n, &p));
        for i in 0..n {
            let fx: f64 = (0..n).map(|j| f[i * n + j] * xf[j]).sum();
            let bu: f64 = (0..d).map(|j| b[i * d + j] * u[j]).sum();
            x[i] = fx + bu;
        }
        for i in 0..n {
            for j in 0..n {
                fp[i * n + j] = (0..n).map(|l| f[i * n + l] * pf[l * n + j]).sum();
            }
        }
        for i in 0..n {
            for j in 0..n {
                p[i * n + j] = (0..n).map(|l| fp[i * n + l] * f[j * n + l]).sum::<f64>() + gqg[i * n + j];
            }
        }
        symmetrize_flat(&mut p, n);
        if x.iter().chain(&p).any(|v| !v.is_finite()) {
            return Err(StateSpaceError::Numerical {
                step: t,
                reason: "non-finite predicted state",
            });
        }

        if S::RECORDS {
            sink.record(FilterStep {
                t,
                innovation: e,
                innovation_var: re,
                observation_var: obs.variance,
                gain: DVector::from_column_slice(&k),
                prior_mean: prior_mean.expect("recorded"),
                prior_cov: prior_cov.expect("recorded"),
                filtered_mean: DVector::from_column_slice(&xf),
                filtered_cov: from_row_major(n, &pf),
                predicted_mean: DVector::from_column_slice(&x),
                predicted_cov: from_row_major(n, &p),
            });
        }
    }

    let t_eff = (y.len() - first) as f64;
    Ok(Summary {
        log_likelihood: -0.5 * t_eff * (2.0 * PI).ln() - 0.5 * sum,
        floor_hits,
    })
}

fn symmetrize_flat(m: &mut [f64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = avg;
            m[j * n + i] = avg;
        }
    }
}

/// Runs the Kalman filter over `y[model.first_step()..]`, keeping every
/// intermediate quantity.
pub fn run_filter<M>(model: &M, y: &[f64], prior: &Prior) -> Result<FilterOutput, StateSpaceError>
where
    M: StateSpaceModel + ?Sized,
{
    let mut steps = Vec::with_capacity(y.len().saturating_sub(model.first_step()));
    let summary = filter_core(model, y, prior, &mut steps)?;
    Ok(FilterOutput {
        first_step: model.first_step(),
        steps,
        log_likelihood: summary.log_likelihood,
        floor_hits: summary.floor_hits,
    })
}

/// Log-likelihood and floor-hit count without storing the trajectory.
pub fn filter_log_likelihood<M>(model: &M, y: &[f64], prior: &Prior) -> Result<(f64, usize), StateSpaceError>
where
    M: StateSpaceModel + ?Sized,
{
    let summary = filter_core(model, y, prior, &mut Discard)?;
    Ok((summary.log_likelihood, summary.floor_hits))
}
