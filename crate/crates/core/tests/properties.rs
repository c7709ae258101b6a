mod common;

use amh_core::calibrate::{aic, fit, hessian_step, log_likelihood_at, negative_hessian};
use amh_core::diagnostics::{ljung_box, rolling_acf, rolling_ljung_box, sample_acf};
use amh_core::ingest::{mean_adjust, IngestError, ReturnSeries};
use amh_core::models::{ModelInstance, ModelSpec, Theta};
use amh_core::simulate::{simulate, start_date};
use amh_core::statespace::{rts_smooth, run_filter, StateSpaceModel};
use proptest::prelude::*;

fn garch_params() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (1e-5f64..1e-3, 0.01f64..0.4, 0.3f64..0.58, 0.0f64..1e-4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rolling_outputs_have_one_entry_per_window(
        values in proptest::collection::vec(-0.2f64..0.2, 10..200),
        w_frac in 0.05f64..1.0,
    ) {
        let n = values.len();
        let w = ((n as f64 * w_frac) as usize).max(3);
        let r = ReturnSeries::with_monthly_dates(start_date(), values);
        let acf = rolling_acf(&r, w, 1, 0.01).unwrap();
        let lb = rolling_ljung_box(&r, w, 1).unwrap();
        prop_assert_eq!(acf.len(), n - w + 1);
        prop_assert_eq!(lb.len(), n - w + 1);
        for v in acf.values.iter().flatten() {
            prop_assert!(v.abs() <= 1.0 + 1e-12);
        }
        for p in lb.values.iter().flatten() {
            prop_assert!((0.0..=1.0).contains(p));
        }
    }

    #[test]
    fn acf_bounded_and_ljung_box_nonnegative(
        values in proptest::collection::vec(-1.0f64..1.0, 4..100),
        lag in 1usize..3,
    ) {
        prop_assume!(values.len() > lag + 1);
        if let Ok(a) = sample_acf(&values, lag) {
            prop_assert!(a.rho.abs() <= 1.0 + 1e-12);
            let lb = ljung_box(&values, lag).unwrap();
            prop_assert!(lb.q >= 0.0);
            prop_assert!((0.0..=1.0).contains(&lb.p_value));
        }
    }

    #[test]
    fn mean_adjusted_returns_have_zero_mean(values in proptest::collection::vec(-1.0f64..1.0, 2..300)) {
        let r = ReturnSeries::with_monthly_dates(start_date(), values);
        let a = mean_adjust(&r).unwrap();
        let m = a.values().iter().sum::<f64>() / a.len() as f64;
        prop_assert!(m.abs() <= 1e-15);
        prop_assert!(matches!(mean_adjust(&a), Err(IngestError::AlreadyAdjusted)));
    }

    #[test]
    fn symmetric_threshold_simulation_is_garch(p in garch_params(), seed in 0u64..1000) {
        let (omega, a, b, s) = p;
        let g = simulate(&Theta::Garch { omega, a1: a, b1: b, sigma2_w: s }, 120, seed).unwrap();
        let t = simulate(&Theta::TGarch { omega, a1_plus: a, a1_minus: a, b1: b, sigma2_w: s }, 120, seed).unwrap();
        prop_assert_eq!(g.returns.values(), t.returns.values());
        prop_assert_eq!(&g.true_beta, &t.true_beta);
        prop_assert!(g.true_h.iter().all(|&h| h > 0.0));
    }

    #[test]
    fn simulation_is_reproducible(p in garch_params(), seed in 0u64..1000) {
        let (omega, a, b, s) = p;
        let theta = Theta::AGarch { omega, a1: a, a1_plus: 0.02, b1: b, sigma2_w: s };
        prop_assert_eq!(simulate(&theta, 80, seed).unwrap(), simulate(&theta, 80, seed).unwrap());
    }

    #[test]
    fn filtered_covariances_stay_symmetric_psd(p in garch_params(), seed in 0u64..500) {
        let (omega, a, b, s) = p;
        let theta = Theta::TGarch { omega, a1_plus: a, a1_minus: a / 2.0, b1: b, sigma2_w: s };
        let y = mean_adjust(&simulate(&theta, 150, seed).unwrap().returns).unwrap();
        let model = ModelInstance::new(&theta).unwrap();
        let out = run_filter(&model, y.values(), &model.initial_prior(y.values()).unwrap()).unwrap();
        let smoothed = rts_smooth(&out, model.system()).unwrap();
        let total: f64 = out.steps.iter().map(|s| s.log_likelihood()).sum();
        prop_assert!((total - out.log_likelihood).abs() <= 1e-9 * out.log_likelihood.abs().max(1.0));
        for (step, sc) in out.steps.iter().zip(&smoothed.covs) {
            prop_assert!(step.innovation_var > 0.0);
            for m in [&step.filtered_cov, &step.predicted_cov, sc] {
                prop_assert_eq!(m, &m.transpose());
                let min = m.clone().symmetric_eigen().eigenvalues.min();
                prop_assert!(min >= -1e-12 * m.amax().max(1.0));
            }
            for i in 0..sc.nrows() {
                prop_assert!(sc[(i, i)] <= step.filtered_cov[(i, i)] + 1e-10);
            }
        }
    }

    #[test]
    fn theta_json_round_trip(p in garch_params(), delta in -5.0f64..5.0) {
        let (omega, a, b, s) = p;
        let theta = Theta::GarchM { omega, a1: a, b1: b, sigma2_w: s, delta };
        let text = theta.to_json().to_string();
        prop_assert_eq!(Theta::from_json_str(ModelSpec::GarchM, &text).unwrap(), theta);
    }
}

fn fitted() -> (ReturnSeries, amh_core::calibrate::FitResult) {
    let theta = Theta::Garch {
        omega: 0.0005,
        a1: 0.25,
        b1: 0.7,
        sigma2_w: 1e-5,
    };
    let data = mean_adjust(&simulate(&theta, 600, 31).unwrap().returns).unwrap();
    let r = fit(ModelSpec::Garch, &data, None).unwrap();
    (data, r)
}

#[test]
fn fit_is_deterministic_and_aic_consistent() {
    let (data, a) = fitted();
    let b = fit(ModelSpec::Garch, &data, None).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.aic, aic(a.spec.param_count(), a.log_lf));
    assert_eq!(a.log_lf, log_likelihood_at(&a.theta, data.values()).unwrap().0);
}

#[test]
fn no_coordinate_step_improves_the_optimum() {
    let (data, r) = fitted();
    let x = r.theta.to_vec();
    for i in 0..x.len() {
        for sign in [-1.0, 1.0] {
            let mut p = x.clone();
            p[i] += sign * 1e-5 * x[i].abs().max(1e-5);
            let Ok(theta) = Theta::from_vec(ModelSpec::Garch, &p) else { continue };
            if theta.validate().is_err() {
                continue;
            }
            let (ll, _) = log_likelihood_at(&theta, data.values()).unwrap();
            assert!(ll - r.log_lf <= 1e-4, "coordinate {i}: {ll} vs {}", r.log_lf);
        }
    }
}

#[test]
fn hessian_is_symmetric_at_a_fit() {
    let (data, r) = fitted();
    let x = r.theta.to_vec();
    let f = |v: &[f64]| {
        let t = Theta::from_vec(ModelSpec::Garch, v).ok()?;
        t.validate().ok()?;
        log_likelihood_at(&t, data.values()).ok().map(|(ll, _)| ll)
    };
    let steps: Vec<f64> = x.iter().map(|&v| hessian_step(v)).collect();
    let active: Vec<usize> = (0..x.len()).collect();
    let h = negative_hessian(&f, &x, &steps, &active).unwrap();
    let asym = (&h - h.transpose()).amax();
    assert!(asym / h.amax() <= 1e-4, "{asym} vs {}", h.amax());
}
