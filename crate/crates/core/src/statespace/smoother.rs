use std::io::Write;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{symmetrize, FilterOutput, StateSpaceError, SystemMatrices};
use crate::diagnostics::fmt_full;

/// Fixed-interval (Rauch-Tung-Striebel) estimates `x_{t|T}`, `P_{t|T}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedOutput {
    pub first_step: usize,
    pub means: Vec<DVector<f64>>,
    pub covs: Vec<DMatrix<f64>>,
}

impl SmoothedOutput {
    pub fn component(&self, i: usize) -> Vec<f64> {
        self.means.iter().map(|m| m[i]).collect()
    }
}

/// Moore-Penrose inverse of a symmetric PSD matrix; eigenvalues below a
/// relative threshold are treated as zero.
fn psd_pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let largest = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let tol = largest * 1e-12 * m.nrows() as f64;
    let inv = eig
        .eigenvalues
        .map(|l| if l > tol && l > 0.0 { 1.0 / l } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

/// Backward pass with gain `C_t = P_{t|t} F^T P_{t+1|t}^+`.
pub fn rts_smooth(output: &FilterOutput, sys: &SystemMatrices) -> Result<SmoothedOutput, StateSpaceError> {
    let n = sys.state_dim();
    if let Some(bad) = output
        .steps
        .iter()
        .find(|s| s.filtered_mean.len() != n || s.predicted_cov.shape() != (n, n))
    {
        return Err(StateSpaceError::Dimension(format!(
            "filter step {} has a {}-state, system has {n}",
            bad.t,
            bad.filtered_mean.len()
        )));
    }
    let len = output.steps.len();
    let mut means = vec![DVector::zeros(n); len];
    let mut covs = vec![DMatrix::zeros(n, n); len];
    if len == 0 {
        return Ok(SmoothedOutput {
            first_step: output.first_step,
            means,
            covs,
        });
    }

    let last = &output.steps[len - 1];
    means[len - 1] = last.filtered_mean.clone();
    covs[len - 1] = last.filtered_cov.clone();

    let ft = sys.f().transpose();
    for i in (0..len - 1).rev() {
        let step = &output.steps[i];
        let gain = &step.filtered_cov * &ft * psd_pinv(&step.predicted_cov);
        let mean = &step.filtered_mean + &gain * (&means[i + 1] - &step.predicted_mean);
        let mut cov = &step.filtered_cov + &gain * (&covs[i + 1] - &step.predicted_cov) * gain.transpose();
        symmetrize(&mut cov);
        means[i] = mean;
        covs[i] = cov;
    }
    Ok(SmoothedOutput {
        first_step: output.first_step,
        means,
        covs,
    })
}

/// Writes `t,end_date,state_0,state_1,p00,p11,e,r_e`. State columns come from
/// the smoother when given, otherwise from the filter; components beyond the
/// state dimension are left empty.
pub fn write_states_csv<W: Write>(
    out: W,
    dates: &[NaiveDate],
    filtered: &FilterOutput,
    smoothed: Option<&SmoothedOutput>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "end_date", "state_0", "state_1", "p00", "p11", "e", "r_e"])?;
    for (i, step) in filtered.steps.iter().enumerate() {
        let (mean, cov) = match smoothed {
            Some(s) => (&s.means[i], &s.covs[i]),
            None => (&step.filtered_mean, &step.filtered_cov),
        };
        let comp = |j: usize| mean.get(j).map(|v| fmt_full(*v)).unwrap_or_default();
        let var = |j: usize| {
            if j < cov.nrows() {
                fmt_full(cov[(j, j)])
            } else {
                String::new()
            }
        };
        let date = dates.get(step.t).map(|d| d.to_string()).unwrap_or_default();
        w.write_record([
            step.t.to_string(),
            date,
            comp(0),
            comp(1),
            var(0),
            var(1),
            fmt_full(step.innovation),
            fmt_full(step.innovation_var),
        ])?;
    }
    w.flush()?;
    Ok(())
}
