use nalgebra::{DMatrix, DVector};

use super::{ModelError, ModelSpec, Theta};
use crate::ingest::sample_variance;
use crate::statespace::{Observation, Prior, StateSpaceModel, SystemMatrices};

/// Lower bound applied to the predicted variance `h_{t|t-1}` before it is
/// used as the observation variance.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// A parameterised model in state-space form.
///
/// TV-AR(n): state `[beta_1..beta_n]`, `F = I`, `Q = diag(sigma2_w)`,
/// `H_t = [y_{t-1}..y_{t-n}]`, `R = sigma2_eps`.
///
/// GARCH kinds: state `[h_t, beta_1]`, `F = diag(b1, 1)`, `G = [0, 1]^T`,
/// `Q = [sigma2_w]`, `H_t = [0, y_{t-1}]` (`[delta, y_{t-1}]` in mean) and
/// `R_t = h_{t|t-1}`. The variance recursion runs through the control input
/// built from the filter residual `e_t`:
///
/// | kind    | `B` first row          | `u_t`                                   |
/// |---------|------------------------|-----------------------------------------|
/// | GARCH   | `[omega, a1]`          | `[1, e^2]`                              |
/// | GARCH-M | `[omega, a1]`          | `[1, e^2]`                              |
/// | T-GARCH | `[omega, a1+, a1-]`    | `[1, e^2 1{e>0}, e^2 1{e<0}]`           |
/// | A-GARCH | `[omega, a1, a1+]`     | `[1, e^2, max(e, 0)^2]`                 |
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInstance {
    theta: Theta,
    system: SystemMatrices,
    /// Coefficient of `h_t` in the observation row (GARCH-M `delta`).
    mean_loading: f64,
}

impl ModelInstance {
    pub fn new(theta: &Theta) -> Result<Self, ModelError> {
        theta.validate()?;
        let spec = theta.spec();
        let n = spec.state_dim();
        let (f, b, g, q) = match theta {
            Theta::Tvar { sigma2_w, .. } => (
                DMatrix::identity(n, n),
                DMatrix::zeros(n, 0),
                DMatrix::identity(n, n),
                DMatrix::from_diagonal(&DVector::from_column_slice(sigma2_w)),
            ),
            _ => {
                let (omega, b1, _) = theta.variance_recursion().expect("GARCH kind");
                let b_row: Vec<f64> = match *theta {
                    Theta::Garch { a1, .. } | Theta::GarchM { a1, .. } => vec![omega, a1],
                    Theta::TGarch {
                        a1_plus, a1_minus, ..
                    } => vec![omega, a1_plus, a1_minus],
                    Theta::AGarch { a1, a1_plus, .. } => vec![omega, a1, a1_plus],
                    Theta::Tvar { .. } => unreachable!(),
                };
                let d = b_row.len();
                let mut b = DMatrix::zeros(2, d);
                for (j, v) in b_row.into_iter().enumerate() {
                    b[(0, j)] = v;
                }
                let sigma2_w = theta.to_vec()[spec.param_names().iter().position(|s| s == "sigma2_w").expect("sigma2_w")];
                (
                    DMatrix::from_diagonal(&DVector::from_vec(vec![b1, 1.0])),
                    b,
                    DMatrix::from_column_slice(2, 1, &[0.0, 1.0]),
                    DMatrix::from_element(1, 1, sigma2_w),
                )
            }
        };
        let system = SystemMatrices::new(f, b, g, q).expect("model matrices are consistent");
        let mean_loading = match theta {
            Theta::GarchM { delta, .. } => *delta,
            _ => 0.0,
        };
        Ok(Self {
            theta: theta.clone(),
            system,
            mean_loading,
        })
    }

    pub fn spec(&self) -> ModelSpec {
        self.theta.spec()
    }

    pub fn theta(&self) -> &Theta {
        &self.theta
    }

    /// Prior for the first filtered step with `P_0 = I`.
    pub fn initial_prior(&self, y: &[f64]) -> Result<Prior, ModelError> {
        self.initial_prior_scaled(y, 1.0)
    }

    /// The state at index `s - 1` (one before the first filtered step `s`) is
    /// taken as `N(x0, p0 I)` with `x0 = 0` for TV-AR and `x0 = [h0, 0]` for
    /// GARCH kinds, `h0` being the sample variance of `y`. One time update
    /// then gives `x_{s|s-1}`; the residual feeding that update is seeded
    /// with `y_{s-1}`, i.e. a zero AR coefficient.
    pub fn initial_prior_scaled(&self, y: &[f64], p0: f64) -> Result<Prior, ModelError> {
        let spec = self.spec();
        let first = self.first_step();
        if y.len() <= first || y.len() < 2 {
            return Err(ModelError::TooShort {
                needed: (first + 1).max(2),
                got: y.len(),
            });
        }
        let n = spec.state_dim();
        let mut mean = DVector::zeros(n);
        if spec.is_garch() {
            mean[0] = sample_variance(y);
        }
        let start = Prior::new(mean, DMatrix::identity(n, n) * p0);
        let mut u = vec![0.0; self.system.control_dim()];
        self.control(first - 1, y, y[first - 1], &mut u);
        Ok(start.propagate(&self.system, &DVector::from_vec(u)))
    }
}

impl StateSpaceModel for ModelInstance {
    fn system(&self) -> &SystemMatrices {
        &self.system
    }

    fn first_step(&self) -> usize {
        self.spec().lags()
    }

    fn observe(&self, t: usize, y: &[f64], predicted: &[f64], h: &mut [f64]) -> Observation {
        match &self.theta {
            Theta::Tvar { sigma2_eps, .. } => {
                for (i, hi) in h.iter_mut().enumerate() {
                    *hi = y[t - 1 - i];
                }
                Observation {
                    variance: *sigma2_eps,
                    floored: false,
                }
            }
            _ => {
                h[0] = self.mean_loading;
                h[1] = y[t - 1];
                let predicted_h = predicted[0];
                if predicted_h >= VARIANCE_FLOOR {
                    Observation {
                        variance: predicted_h,
                        floored: false,
                    }
                } else {
                    Observation {
                        variance: VARIANCE_FLOOR,
                        floored: true,
                    }
                }
            }
        }
    }

    fn control(&self, _t: usize, _y: &[f64], e: f64, u: &mut [f64]) {
        let e2 = e * e;
        match self.theta {
            Theta::Tvar { .. } => {}
            Theta::Garch { .. } | Theta::GarchM { .. } => {
                u[0] = 1.0;
                u[1] = e2;
            }
            Theta::TGarch { .. } => {
                u[0] = 1.0;
                u[1] = if e > 0.0 { e2 } else { 0.0 };
                u[2] = if e < 0.0 { e2 } else { 0.0 };
            }
            Theta::AGarch { .. } => {
                u[0] = 1.0;
                u[1] = e2;
                u[2] = if e > 0.0 { e2 } else { 0.0 };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::run_filter;

    fn garch(omega: f64, a1: f64, b1: f64) -> Theta {
        Theta::Garch {
            omega,
            a1,
            b1,
            sigma2_w: 1e-5,
        }
    }

    #[test]
    fn garch_variance_step() {
        // h_{t|t} = 1, e^2 = 1, (0.2, 0.3, 0.5) -> 0.2 + 0.3 + 0.5 = 1.0
        let m = ModelInstance::new(&garch(0.2, 0.3, 0.5)).unwrap();
        let prior = Prior::new(DVector::from_vec(vec![1.0, 0.0]), DMatrix::identity(2, 2) * 0.0);
        let next = prior.propagate(m.system(), &DVector::from_vec(vec![1.0, 1.0]));
        assert!((next.mean[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pure_omega_without_arch_and_garch_terms() {
        let m = ModelInstance::new(&garch(0.3, 0.0, 0.0)).unwrap();
        let y = [0.1, -0.4, 0.25, 0.9, -0.3];
        let prior = m.initial_prior(&y).unwrap();
        let out = run_filter(&m, &y, &prior).unwrap();
        for s in &out.steps {
            assert!((s.observation_var - 0.3).abs() < 1e-15);
            assert!((s.predicted_mean[0] - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn matrices_follow_embedding() {
        let theta = Theta::TGarch {
            omega: 0.01,
            a1_plus: 0.2,
            a1_minus: 0.1,
            b1: 0.7,
            sigma2_w: 3e-5,
        };
        let m = ModelInstance::new(&theta).unwrap();
        let sys = m.system();
        assert_eq!(sys.f(), &DMatrix::from_row_slice(2, 2, &[0.7, 0.0, 0.0, 1.0]));
        assert_eq!(sys.b(), &DMatrix::from_row_slice(2, 3, &[0.01, 0.2, 0.1, 0.0, 0.0, 0.0]));
        assert_eq!(sys.process_covariance(), &DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 3e-5]));

        let tv = ModelInstance::new(&Theta::Tvar {
            sigma2_w: vec![1e-4, 2e-4],
            sigma2_eps: 0.01,
        })
        .unwrap();
        assert_eq!(tv.first_step(), 2);
        let mut h = [0.0; 2];
        let obs = tv.observe(3, &[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0], &mut h);
        assert_eq!(h, [3.0, 2.0]);
        assert_eq!(obs.variance, 0.01);
    }

    #[test]
    fn asymmetric_controls_at_zero_residual() {
        let t = ModelInstance::new(&Theta::TGarch {
            omega: 0.01,
            a1_plus: 0.2,
            a1_minus: 0.1,
            b1: 0.7,
            sigma2_w: 0.0,
        })
        .unwrap();
        let mut u = [9.0; 3];
        t.control(0, &[], 0.0, &mut u);
        assert_eq!(u, [1.0, 0.0, 0.0]);
        t.control(0, &[], -2.0, &mut u);
        assert_eq!(u, [1.0, 0.0, 4.0]);

        let a = ModelInstance::new(&Theta::AGarch {
            omega: 0.01,
            a1: 0.2,
            a1_plus: 0.1,
            b1: 0.7,
            sigma2_w: 0.0,
        })
        .unwrap();
        a.control(0, &[], 0.0, &mut u);
        assert_eq!(u, [1.0, 0.0, 0.0]);
        a.control(0, &[], 3.0, &mut u);
        assert_eq!(u, [1.0, 9.0, 9.0]);
    }

    #[test]
    fn initial_prior_seeds_residual_with_first_return() {
        let m = ModelInstance::new(&garch(0.2, 0.3, 0.5)).unwrap();
        let y = [0.5, 1.5];
        let prior = m.initial_prior(&y).unwrap();
        // h0 = var([0.5, 1.5]) = 0.5 -> 0.2 + 0.3 * 0.25 + 0.5 * 0.5
        assert!((prior.mean[0] - 0.525).abs() < 1e-15);
        assert_eq!(prior.mean[1], 0.0);
        assert!((prior.cov[(0, 0)] - 0.25).abs() < 1e-15);
        assert!((prior.cov[(1, 1)] - (1.0 + 1e-5)).abs() < 1e-15);
        assert!(matches!(m.initial_prior(&[0.1]), Err(ModelError::TooShort { .. })));
    }

    #[test]
    fn invalid_theta_is_rejected() {
        assert!(ModelInstance::new(&garch(0.1, 0.5, 0.5)).is_err());
    }
}
