use nalgebra::DMatrix;

/// Finite-difference step for coordinate value `x`.
pub fn hessian_step(x: f64) -> f64 {
    (1e-4 * x.abs()).max(1e-7)
}

/// Central-difference Hessian of `-f` at `x` over the coordinates in `active`.
/// `f` is a log-likelihood returning `None` outside its domain. Each entry
/// is evaluated on its own, so the result is symmetric only up to rounding.
pub fn negative_hessian<F>(f: &F, x: &[f64], steps: &[f64], active: &[usize]) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let m = active.len();
    let center = f(x)?;
    let eval = |moves: &[(usize, f64)]| -> Option<f64> {
        let mut p = x.to_vec();
        for &(i, d) in moves {
            p[i] += d;
        }
        f(&p)
    };
    let mut h = DMatrix::zeros(m, m);
    for (a, &i) in active.iter().enumerate() {
        for (b, &j) in active.iter().enumerate() {
            let (hi, hj) = (steps[i], steps[j]);
            h[(a, b)] = if i == j {
                let plus = eval(&[(i, hi)])?;
                let minus = eval(&[(i, -hi)])?;
                -(plus - 2.0 * center + minus) / (hi * hi)
            } else {
                let pp = eval(&[(i, hi), (j, hj)])?;
                let pm = eval(&[(i, hi), (j, -hj)])?;
                let mp = eval(&[(i, -hi), (j, hj)])?;
                let mm = eval(&[(i, -hi), (j, -hj)])?;
                -(pp - pm - mp + mm) / (4.0 * hi * hj)
            };
        }
    }
    Some(h)
}

/// `sqrt(diag(H^-1))` with `H` the negative Hessian of the log-likelihood
/// `f` at `x`. Coordinates whose `+-2h` neighbourhood leaves the domain of
/// `f` are excluded and reported as `None`, as are coordinates with a
/// non-positive inverse diagonal when `H` is not positive definite.
pub fn standard_errors_with<F>(f: F, x: &[f64]) -> Vec<Option<f64>>
where
    F: Fn(&[f64]) -> Option<f64>,
{
    let steps: Vec<f64> = x.iter().map(|&v| hessian_step(v)).collect();
    let active: Vec<usize> = (0..x.len())
        .filter(|&i| {
            [-2.0, 2.0].iter().all(|k| {
                let mut p = x.to_vec();
                p[i] += k * steps[i];
                f(&p).is_some_and(f64::is_finite)
            })
        })
        .collect();
    let mut out = vec![None; x.len()];
    if active.len() < x.len() {
        log::warn!("standard errors undefined for {} boundary parameter(s)", x.len() - active.len());
    }
    if active.is_empty() {
        return out;
    }
    let Some(h) = negative_hessian(&f, x, &steps, &active) else {
        return out;
    };
    if h.iter().any(|v| !v.is_finite()) {
        return out;
    }
    let inverse = match h.clone().cholesky() {
        Some(c) => c.inverse(),
        None => {
            log::warn!("Hessian is not positive definite");
            match h.lu().try_inverse() {
                Some(inv) => inv,
                None => return out,
            }
        }
    };
    for (a, &i) in active.iter().enumerate() {
        let d = inverse[(a, a)];
        if d > 0.0 && d.is_finite() {
            out[i] = Some(d.sqrt());
        }
    }
    out
}
