//! Linear Gaussian state-space machinery with a scalar observation.
//!
//! The transition is `x_t = F x_{t-1} + B u_{t-1} + G w_t`, `w_t ~ N(0, Q)`,
//! and the observation `y_t = H_t x_t + eps_t`, `eps_t ~ N(0, R_t)`. Both the
//! observation row `H_t` and variance `R_t` may depend on the data and on the
//! filter's own predicted state, and the control `u_t` may depend on the
//! innovation at `t`. That feedback is what the GARCH embeddings need.

mod filter;
mod smoother;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use filter::{filter_log_likelihood, log_likelihood, run_filter, FilterOutput, FilterStep};
pub use smoother::{rts_smooth, write_states_csv, SmoothedOutput};

#[derive(Debug, Error, PartialEq)]
pub enum StateSpaceError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("process noise covariance must be symmetric positive semidefinite")]
    NotPositiveSemidefinite,
    #[error("numerical failure at step {step}: {reason}")]
    Numerical { step: usize, reason: &'static str },
    #[error("no observations to filter (first step {first}, {len} observations)")]
    NoObservations { first: usize, len: usize },
}

/// Time-invariant system matrices `F`, `B`, `G` and `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    f: DMatrix<f64>,
    b: DMatrix<f64>,
    g: DMatrix<f64>,
    q: DMatrix<f64>,
    gqg: DMatrix<f64>,
}

impl SystemMatrices {
    pub fn new(
        f: DMatrix<f64>,
        b: DMatrix<f64>,
        g: DMatrix<f64>,
        q: DMatrix<f64>,
    ) -> Result<Self, StateSpaceError> {
        let n = f.nrows();
        if f.ncols() != n {
            return Err(StateSpaceError::Dimension(format!(
                "F is {}x{}, expected square",
                f.nrows(),
                f.ncols()
            )));
        }
        if b.nrows() != n {
            return Err(StateSpaceError::Dimension(format!(
                "B has {} rows, state has {n}",
                b.nrows()
            )));
        }
        if g.nrows() != n || q.nrows() != g.ncols() || q.ncols() != g.ncols() {
            return Err(StateSpaceError::Dimension(format!(
                "G is {}x{} and Q is {}x{} for a {n}-state",
                g.nrows(),
                g.ncols(),
                q.nrows(),
                q.ncols()
            )));
        }
        let scale = q.amax().max(1.0);
        if (&q - q.transpose()).amax() > 1e-12 * scale {
            return Err(StateSpaceError::NotPositiveSemidefinite);
        }
        if q.nrows() > 0 {
            let eig = q.clone().symmetric_eigenvalues();
            if eig.min() < -1e-12 * scale {
                return Err(StateSpaceError::NotPositiveSemidefinite);
            }
        }
        let gqg = &g * &q * g.transpose();
        Ok(Self { f, b, g, q, gqg })
    }

    pub fn state_dim(&self) -> usize {
        self.f.nrows()
    }

    pub fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// `G Q G^T`.
    pub fn process_covariance(&self) -> &DMatrix<f64> {
        &self.gqg
    }
}

/// Observation variance `R_t` for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub variance: f64,
    /// Set when the model had to floor a non-positive variance.
    pub floored: bool,
}

/// A state-space model whose observation row, observation variance and
/// control input are produced step by step.
pub trait StateSpaceModel {
    fn system(&self) -> &SystemMatrices;

    /// Index of the first observation that is filtered. Earlier observations
    /// only serve as regressors.
    fn first_step(&self) -> usize {
        0
    }

    /// Writes `H_t` into `h` and returns `R_t`. `predicted` is `x_{t|t-1}`.
    fn observe(&self, t: usize, y: &[f64], predicted: &[f64], h: &mut [f64]) -> Observation;

    /// Writes the control `u_t` that drives the transition from `t` to
    /// `t + 1`, given the innovation `e_t`.
    fn control(&self, _t: usize, _y: &[f64], _innovation: f64, u: &mut [f64]) {
        u.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Gaussian prior `x_{s|s-1} ~ N(mean, cov)` for the first filtered step `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl Prior {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self { mean, cov }
    }

    /// One time update of a prior: `(F m + B u, F P F^T + G Q G^T)`.
    pub fn propagate(&self, sys: &SystemMatrices, control: &DVector<f64>) -> Prior {
        let mean = sys.f() * &self.mean + sys.b() * control;
        let mut cov = sys.f() * &self.cov * sys.f().transpose() + sys.process_covariance();
        symmetrize(&mut cov);
        Prior { mean, cov }
    }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Fixed observation row and variance with a constant control input.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianModel {
    system: SystemMatrices,
    h: Vec<f64>,
    r: f64,
    control: Vec<f64>,
}

impl LinearGaussianModel {
    pub fn new(
        system: SystemMatrices,
        h: Vec<f64>,
        r: f64,
        control: Vec<f64>,
    ) -> Result<Self, StateSpaceError> {
        if h.len() != system.state_dim() {
            return Err(StateSpaceError::Dimension(format!(
                "H has {} entries for a {}-state",
                h.len(),
                system.state_dim()
            )));
        }
        if control.len() != system.control_dim() {
            return Err(StateSpaceError::Dimension(format!(
                "control has {} entries, B has {} columns",
                control.len(),
                system.control_dim()
            )));
        }
        Ok(Self {
            system,
            h,
            r,
            control,
        })
    }
}

impl StateSpaceModel for LinearGaussianModel {
    fn system(&self) -> &SystemMatrices {
        &self.system
    }

    fn observe(&self, _t: usize, _y: &[f64], _predicted: &[f64], h: &mut [f64]) -> Observation {
        h.copy_from_slice(&self.h);
        Observation {
            variance: self.r,
            floored: false,
        }
    }

    fn control(&self, _t: usize, _y: &[f64], _innovation: f64, u: &mut [f64]) {
        u.copy_from_slice(&self.control);
    }
}
