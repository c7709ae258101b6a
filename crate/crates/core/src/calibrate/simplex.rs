//! Nelder-Mead minimisation with restarts.

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SimplexOptions {
    pub max_iterations: usize,
    /// Simplex diameter, measured after mapping the vertices with `natural`.
    pub tolerance: f64,
    pub initial_step: f64,
    pub max_restarts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Simplex {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

impl Simplex {
    fn around<F: FnMut(&[f64]) -> f64>(x0: &[f64], step: f64, f: &mut F) -> Self {
        let mut points = vec![x0.to_vec()];
        for i in 0..x0.len() {
            let mut p = x0.to_vec();
            p[i] += step;
            points.push(p);
        }
        let values = points.iter().map(|p| sanitize(f(p))).collect();
        Simplex { points, values }
    }

    /// Stable sort by value so ties keep their insertion order.
    fn order(&mut self) {
        let mut idx: Vec<usize> = (0..self.points.len()).collect();
        idx.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        self.points = idx.iter().map(|&i| self.points[i].clone()).collect();
        self.values = idx.iter().map(|&i| self.values[i]).collect();
    }

    fn natural_diameter<N: Fn(&[f64]) -> Vec<f64>>(&self, natural: &N) -> f64 {
        let best = natural(&self.points[0]);
        self.points[1..]
            .iter()
            .map(|p| {
                natural(p)
                    .iter()
                    .zip(&best)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    fn value_spread(&self) -> f64 {
        self.values[self.values.len() - 1] - self.values[0]
    }
}

fn affine(c: &[f64], d: &[f64], coef: f64) -> Vec<f64> {
    c.iter().zip(d).map(|(ci, di)| ci + coef * (di - ci)).collect()
}

/// Runs Nelder-Mead until the simplex shrinks below `tolerance` in natural
/// coordinates and its values agree to a relative `1e-10`. After each such
/// convergence the simplex is rebuilt around the best vertex; the search ends
/// when a restart no longer improves the minimum or the iteration budget is
/// spent (`converged = false`).
pub(crate) fn minimize<F, N>(mut f: F, x0: &[f64], natural: N, opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
    N: Fn(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    let mut iterations = 0;
    let mut restarts = 0;
    let mut simplex = Simplex::around(x0, opts.initial_step, &mut f);
    let mut previous_best = f64::INFINITY;
    loop {
        simplex.order();
        let best = simplex.values[0];
        let small = simplex.natural_diameter(&natural) <= opts.tolerance
            && simplex.value_spread() <= 1e-10 * (1.0 + best.abs());
        if small {
            let stalled = previous_best - best <= 1e-9 * (1.0 + best.abs());
            if stalled || restarts >= opts.max_restarts {
                return SimplexResult {
                    x: simplex.points.swap_remove(0),
                    value: best,
                    iterations,
                    converged: true,
                };
            }
            restarts += 1;
            previous_best = best;
            log::debug!("restart {restarts} at f = {best}");
            let x = simplex.points[0].clone();
            simplex = Simplex::around(&x, opts.initial_step, &mut f);
            continue;
        }
        if iterations >= opts.max_iterations {
            return SimplexResult {
                x: simplex.points.swap_remove(0),
                value: best,
                iterations,
                converged: false,
            };
        }
        iterations += 1;
        log::debug!("iteration {iterations}: f = {best}");

        let mut centroid = vec![0.0; n];
        for p in &simplex.points[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let worst = simplex.points[n].clone();
        let f_worst = simplex.values[n];
        let f_second = simplex.values[n - 1];

        let reflected = affine(&centroid, &worst, -REFLECT);
        let f_reflected = sanitize(f(&reflected));
        if f_reflected < best {
            let expanded = affine(&centroid, &worst, -EXPAND);
            let f_expanded = sanitize(f(&expanded));
            if f_expanded < f_reflected {
                simplex.points[n] = expanded;
                simplex.values[n] = f_expanded;
            } else {
                simplex.points[n] = reflected;
                simplex.values[n] = f_reflected;
            }
            continue;
        }
        if f_reflected < f_second {
            simplex.points[n] = reflected;
            simplex.values[n] = f_reflected;
            continue;
        }
        let (contracted, limit) = if f_reflected < f_worst {
            (affine(&centroid, &reflected, CONTRACT), f_reflected)
        } else {
            (affine(&centroid, &worst, CONTRACT), f_worst)
        };
        let f_contracted = sanitize(f(&contracted));
        if f_contracted < limit || (f_reflected < f_worst && f_contracted <= limit) {
            simplex.points[n] = contracted;
            simplex.values[n] = f_contracted;
            continue;
        }
        let anchor = simplex.points[0].clone();
        for i in 1..=n {
            simplex.points[i] = affine(&anchor, &simplex.points[i], SHRINK);
            simplex.values[i] = sanitize(f(&simplex.points[i]));
        }
    }
}
