//! Nelder-Mead simplex minimisation.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Convergence threshold on `max f - min f` over the simplex.
    pub f_tol: f64,
    /// Convergence threshold on the simplex diameter (sup norm).
    pub x_tol: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_iter: 2000, f_tol: 1e-6, x_tol: 1e-5, initial_step: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best objective value after each iteration.
    pub trace: Vec<f64>,
}

/// Minimise `f` starting from `x0`. Non-finite objective values are treated as `+∞`.
///
/// The start point is a vertex of the initial simplex, so the returned value
/// never exceeds `f(x0)`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        let v = eval(x0, &mut evals);
        return NelderMeadResult {
            x: vec![],
            f: v,
            iterations: 0,
            evaluations: evals,
            converged: true,
            trace: vec![v],
        };
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iter = 0;
    while iter < opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        trace.push(simplex[0].1);
        let spread = simplex[n].1 - simplex[0].1;
        let diam = simplex[1..].iter().fold(0.0_f64, |m, (x, _)| {
            x.iter().zip(&simplex[0].0).fold(m, |m, (a, b)| m.max((a - b).abs()))
        });
        if spread.is_finite() && spread < opts.f_tol && diam < opts.x_tol {
            converged = true;
            break;
        }
        iter += 1;
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let toward = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = toward(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = toward(gamma);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = toward(rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = toward(-rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < worst.1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        // Shrink toward the best vertex.
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, x)| b + sigma * (x - b)).collect();
            let v = eval(&x, &mut evals);
            *vertex = (x, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    NelderMeadResult { x, f: fx, iterations: iter, evaluations: evals, converged, trace }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions { f_tol: 1e-12, x_tol: 1e-8, ..Default::default() };
        let r = nelder_mead(f, &[-1.2, 1.0], &opts);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn trace_is_monotone_and_bounded_by_start() {
        let f = |x: &[f64]| x.iter().map(|v| (v - 3.0).powi(2)).sum::<f64>() + x[0].sin();
        let x0 = [0.0, 1.0, -2.0];
        let r = nelder_mead(f, &x0, &NelderMeadOptions::default());
        assert!(r.f <= f(&x0));
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn infeasible_region_rejected() {
        // Objective is infinite for x < 0.
        let f = |x: &[f64]| if x[0] < 0.0 { f64::INFINITY } else { (x[0] - 0.1).powi(2) + x[1] * x[1] };
        let r = nelder_mead(f, &[1.0, 1.0], &NelderMeadOptions { initial_step: 2.0, ..Default::default() });
        assert!((r.x[0] - 0.1).abs() < 1e-3);
    }

    #[test]
    fn one_dimensional() {
        let r = nelder_mead(|x: &[f64]| (x[0] + 2.0).powi(2), &[5.0], &NelderMeadOptions::default());
        assert!((r.x[0] + 2.0).abs() < 1e-4);
    }
}
