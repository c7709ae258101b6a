//! Seeded Monte Carlo checks of the estimator and simulator.

mod common;

use amh_core::calibrate::{compare_models, fit, log_likelihood_at};
use amh_core::ingest::{mean_adjust, sample_variance, summary_stats, ReturnSeries};
use amh_core::models::{ModelSpec, Theta};
use amh_core::simulate::simulate;

fn garch(a1: f64, b1: f64) -> Theta {
    Theta::Garch {
        omega: 0.0005,
        a1,
        b1,
        sigma2_w: 1e-5,
    }
}

fn adjusted(theta: &Theta, n: usize, seed: u64) -> ReturnSeries {
    mean_adjust(&simulate(theta, n, seed).unwrap().returns).unwrap()
}

#[test]
fn long_garch_sample_variance_matches_unconditional_variance() {
    // a1 = 0.25, b1 = 0.70 has no finite fourth moment, so a single path's
    // sample variance is too dispersed for a 5% check; pool 50 paths instead.
    let heavy = Theta::Garch {
        omega: 0.0005,
        a1: 0.25,
        b1: 0.70,
        sigma2_w: 0.0,
    };
    let pooled = (0..50)
        .map(|seed| sample_variance(simulate(&heavy, 50_000, seed).unwrap().returns.values()))
        .sum::<f64>()
        / 50.0;
    assert!((pooled - 0.01).abs() <= 0.05 * 0.01, "{pooled}");

    let light = Theta::Garch {
        omega: 0.0005,
        a1: 0.10,
        b1: 0.85,
        sigma2_w: 0.0,
    };
    let v = sample_variance(simulate(&light, 50_000, 1).unwrap().returns.values());
    assert!((v - 0.01).abs() <= 0.05 * 0.01, "{v}");
}

#[test]
fn persistent_garch_returns_are_leptokurtic() {
    for seed in [1, 2, 3] {
        let theta = Theta::Garch {
            omega: 0.0005,
            a1: 0.15,
            b1: 0.80,
            sigma2_w: 0.0,
        };
        let sim = simulate(&theta, 50_000, seed).unwrap();
        let k = summary_stats(sim.returns.values()).unwrap().kurtosis.unwrap();
        assert!(k > 3.0, "seed {seed}: {k}");
    }
}

#[test]
fn garch_fit_recovers_simulated_parameters() {
    let truth = garch(0.25, 0.70);
    let data = adjusted(&truth, 2000, 7);
    let r = fit(ModelSpec::Garch, &data, None).unwrap();
    let (ll_true, _) = log_likelihood_at(&truth, data.values()).unwrap();
    assert!(r.converged);
    assert!(r.log_lf >= ll_true - 0.5);
    let Theta::Garch { omega, a1, b1, .. } = r.theta else { unreachable!() };
    for (est, t) in [(omega, 0.0005), (a1, 0.25), (b1, 0.70)] {
        assert!((est - t).abs() <= 0.5 * t, "{est} vs {t}");
    }
}

#[test]
fn garch_usually_beats_symmetric_threshold_garch_on_aic() {
    let truth = garch(0.25, 0.65);
    let mut wins = 0;
    for seed in 0..100 {
        let data = adjusted(&truth, 500, 100 + seed);
        let g = fit(ModelSpec::Garch, &data, None).unwrap();
        let t = fit(ModelSpec::TGarch, &data, None).unwrap();
        if g.aic < t.aic {
            wins += 1;
        }
    }
    assert!(wins >= 60, "{wins}/100");
}

#[test]
fn garch_beats_homoscedastic_tvar_under_persistent_volatility() {
    let truth = garch(0.25, 0.70);
    let mut wins = 0;
    for seed in 0..100 {
        let data = adjusted(&truth, 2000, 300 + seed);
        let g = fit(ModelSpec::Garch, &data, None).unwrap();
        let t = fit(ModelSpec::tvar(1).unwrap(), &data, None).unwrap();
        if g.aic < t.aic {
            wins += 1;
        }
    }
    assert!(wins >= 90, "{wins}/100");
}

#[test]
fn tvar_is_not_dominated_on_homoscedastic_data() {
    let truth = Theta::Tvar {
        sigma2_w: vec![1e-4],
        sigma2_eps: 0.005,
    };
    let mut ok = 0;
    for seed in 0..100 {
        let data = adjusted(&truth, 300, 600 + seed);
        let ranking = compare_models(&data, &ModelSpec::all(1)).unwrap();
        let aic_of = |pred: fn(&ModelSpec) -> bool| {
            ranking
                .rows
                .iter()
                .filter(|r| pred(&r.spec))
                .filter_map(|r| r.aic())
                .fold(f64::INFINITY, f64::min)
        };
        let tvar = aic_of(|s| !s.is_garch());
        let best_garch = aic_of(|s| s.is_garch());
        if best_garch >= tvar - 10.0 {
            ok += 1;
        }
    }
    assert!(ok >= 50, "{ok}/100");
}

#[test]
fn recovery_error_shrinks_with_sample_size() {
    let truth = garch(0.25, 0.70);
    let mut errs = Vec::new();
    for n in [300, 3000] {
        let mut e: Vec<f64> = (0..10)
            .map(|seed| {
                let r = fit(ModelSpec::Garch, &adjusted(&truth, n, 900 + seed), None).unwrap();
                let Theta::Garch { b1, .. } = r.theta else { unreachable!() };
                (b1 - 0.70).abs()
            })
            .collect();
        errs.push(common::median(&mut e));
    }
    assert!(errs[1] < errs[0], "{errs:?}");
}
