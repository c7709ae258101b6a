//! Independent reference computations used by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use amh_core::statespace::{Observation, Prior, StateSpaceModel, SystemMatrices};

/// `erfc(z)` for `z >= 0` as `1 - (2/sqrt(pi)) int_0^z e^{-t^2} dt`, composite
/// Simpson with 20000 panels.
pub fn erfc(z: f64) -> f64 {
    assert!(z >= 0.0);
    let n = 20_000;
    let h = z / n as f64;
    let f = |t: f64| (-t * t).exp();
    let mut s = f(0.0) + f(z);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    1.0 - 2.0 / PI.sqrt() * s * h / 3.0
}

fn gamma_half_integer(k: u32) -> f64 {
    // Gamma(k + 1/2) = (2k)! / (4^k k!) sqrt(pi)
    let mut g = PI.sqrt();
    for j in 0..k {
        g *= j as f64 + 0.5;
    }
    g
}

/// Chi-square survival function from the closed forms for integer degrees
/// of freedom.
pub fn chi_square_sf(x: f64, df: u32) -> f64 {
    let half = x / 2.0;
    if df.is_multiple_of(2) {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..df / 2 {
            term *= half / k as f64;
            sum += term;
        }
        (-half).exp() * sum
    } else {
        let mut sum = erfc(half.sqrt());
        for k in 1..=(df - 1) / 2 {
            sum += (-half).exp() * half.powf(k as f64 - 0.5) / gamma_half_integer(k);
        }
        sum
    }
}

pub fn normal_cdf(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 - 0.5 * erfc(z / 2f64.sqrt())
    } else {
        0.5 * erfc(-z / 2f64.sqrt())
    }
}

/// Standard normal quantile by bisection on the cdf.
pub fn normal_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Linear Gaussian model with prescribed time-varying rows, observation
/// variances and controls (the controls ignore the innovation).
pub struct ScriptedModel {
    pub system: SystemMatrices,
    pub h: Vec<Vec<f64>>,
    pub r: Vec<f64>,
    pub u: Vec<Vec<f64>>,
}

impl StateSpaceModel for ScriptedModel {
    fn system(&self) -> &SystemMatrices {
        &self.system
    }

    fn observe(&self, t: usize, _y: &[f64], _predicted: &[f64], h: &mut [f64]) -> Observation {
        h.copy_from_slice(&self.h[t]);
        Observation {
            variance: self.r[t],
            floored: false,
        }
    }

    fn control(&self, t: usize, _y: &[f64], _innovation: f64, u: &mut [f64]) {
        u.copy_from_slice(&self.u[t]);
    }
}

pub struct RandomInstance {
    pub model: ScriptedModel,
    pub prior: Prior,
    pub y: Vec<f64>,
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, rank, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose()
}

/// A random model with state dimension `1..=3`, `1..=5` observations,
/// possibly singular process noise and a control input.
pub fn random_instance(seed: u64) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=3);
    let d = rng.random_range(0..=2);
    let k = rng.random_range(1..=n);
    let len = rng.random_range(1..=5);
    let f = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.2..1.2));
    let b = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
    let g = DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0));
    let q_rank = rng.random_range(0..=k);
    let q = random_psd(&mut rng, k, q_rank.max(1)) * if q_rank == 0 { 0.0 } else { 1.0 };
    let system = SystemMatrices::new(f, b, g, q).expect("valid random system");
    let h = (0..len)
        .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let r = (0..len).map(|_| rng.random_range(0.05..2.0)).collect();
    let u = (0..len)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mean = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let cov = random_psd(&mut rng, n, n) + DMatrix::identity(n, n) * 0.1;
    let y = (0..len).map(|_| rng.random_range(-3.0..3.0)).collect();
    RandomInstance {
        model: ScriptedModel { system, h, r, u },
        prior: Prior::new(mean, cov),
        y,
    }
}

/// Conditional mean and covariance of the last state given all
/// observations, and the log density of the observations, from the joint
/// Gaussian of `(x_T, y_0..y_T)` written as an affine map of independent
/// noises `z = (x_0, w_0..w_{T-1}, v_0..v_T)`.
pub fn brute_force(inst: &RandomInstance) -> (DVector<f64>, DMatrix<f64>, f64) {
    let sys = &inst.model.system;
    let n = sys.state_dim();
    let k = sys.q().nrows();
    let len = inst.y.len();
    let dim_z = n + k * (len - 1) + len;
    let mut z_cov = DMatrix::zeros(dim_z, dim_z);
    z_cov.view_mut((0, 0), (n, n)).copy_from(&inst.prior.cov);
    for t in 0..len - 1 {
        let o = n + k * t;
        z_cov.view_mut((o, o), (k, k)).copy_from(sys.q());
    }
    for t in 0..len {
        let o = n + k * (len - 1) + t;
        z_cov[(o, o)] = inst.model.r[t];
    }

    // x_t = c_t + A_t z
    let mut c = inst.prior.mean.clone();
    let mut a = DMatrix::zeros(n, dim_z);
    a.view_mut((0, 0), (n, n)).copy_from(&DMatrix::identity(n, n));
    let mut y_mean = DVector::zeros(len);
    let mut y_map = DMatrix::zeros(len, dim_z);
    for t in 0..len {
        let h = DVector::from_vec(inst.model.h[t].clone());
        y_mean[t] = h.dot(&c);
        let row = h.transpose() * &a;
        y_map.row_mut(t).copy_from(&row);
        y_map[(t, n + k * (len - 1) + t)] = 1.0;
        if t + 1 < len {
            let u = DVector::from_vec(inst.model.u[t].clone());
            c = sys.f() * &c + sys.b() * u;
            a = sys.f() * &a;
            let o = n + k * t;
            let mut block = a.view_mut((0, o), (n, k));
            block += sys.g();
        }
    }
    let s_yy = &y_map * &z_cov * y_map.transpose();
    let s_xy = &a * &z_cov * y_map.transpose();
    let s_xx = &a * &z_cov * a.transpose();
    let inv = s_yy.clone().try_inverse().expect("observation covariance is invertible");
    let resid = DVector::from_vec(inst.y.clone()) - &y_mean;
    let mean = &c + &s_xy * &inv * &resid;
    let cov = &s_xx - &s_xy * &inv * s_xy.transpose();
    let det = s_yy.determinant();
    let quad = (resid.transpose() * &inv * &resid)[(0, 0)];
    let log_density = -0.5 * (len as f64 * (2.0 * PI).ln() + det.ln() + quad);
    (mean, cov, log_density)
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Series of length `n` whose lag-1 sample autocorrelation equals `target`
/// to 1e-12: seeded noise plus a scaled slow sine, the scale found by
/// bisection.
pub fn series_with_lag1_acf(n: usize, target: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let build = |lambda: f64| -> Vec<f64> {
        noise
            .iter()
            .enumerate()
            .map(|(t, e)| e + lambda * (t as f64 * 2.0 * PI / 40.0).sin())
            .collect()
    };
    let acf = |x: &[f64]| amh_core::diagnostics::sample_acf(x, 1).unwrap().rho;
    let (mut lo, mut hi) = (0.0, 10.0);
    assert!(acf(&build(lo)) < target && acf(&build(hi)) > target);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if acf(&build(mid)) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    build(0.5 * (lo + hi))
}
