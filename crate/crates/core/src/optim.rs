//! Limited-memory BFGS with a backtracking Armijo line search.
//!
//! Used for marginal-likelihood minimization over a handful of
//! hyperparameters, so the implementation favours robustness over speed:
//! objective failures (`None`) are treated as an infinitely bad point and the
//! line search simply backs off.

use std::collections::VecDeque;

#[derive(Clone, Debug)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iters: usize,
    /// Stop when the Euclidean gradient norm falls below this.
    pub grad_tol: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 8,
            max_iters: 200,
            grad_tol: 1e-6,
            max_line_search: 40,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimizes `f`, which returns the value and gradient at a point, starting
/// from `x0`. Returns `None` only if `f` fails at the starting point.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &LbfgsOptions) -> Option<Minimum>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let (mut fx, mut g) =
        f(x0).filter(|(v, g)| v.is_finite() && g.iter().all(|x| x.is_finite()))?;
    let mut x = x0.to_vec();
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;

    while iterations < opts.max_iters {
        if norm(&g) < opts.grad_tol {
            break;
        }
        iterations += 1;

        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = history
            .back()
            .map(|(s, y, _)| dot(s, y) / dot(y, y))
            .unwrap_or_else(|| 1.0 / norm(&g).max(1.0));
        q.iter_mut().for_each(|qi| *qi *= gamma);
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope.is_nan() || slope >= 0.0 {
            // not a descent direction; reset to steepest descent
            history.clear();
            dir = g.iter().map(|v| -v / norm(&g).max(1.0)).collect();
            slope = dot(&g, &dir);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_line_search {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + step * di).collect();
            if let Some((ft, gt)) = f(&trial) {
                if ft.is_finite()
                    && gt.iter().all(|v| v.is_finite())
                    && ft <= fx + 1e-4 * step * slope
                {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            break;
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        let progress = (fx - fn_).abs();
        x = xn;
        fx = fn_;
        g = gn;
        if progress <= 1e-14 * fx.abs().max(1.0) {
            break;
        }
    }

    let grad_norm = norm(&g);
    Some(Minimum {
        x,
        value: fx,
        grad_norm,
        iterations,
        converged: grad_norm < opts.grad_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_converges() {
        let f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
            let g = vec![
                -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
                200.0 * (b - a * a),
            ];
            Some((v, g))
        };
        let opts = LbfgsOptions {
            max_iters: 500,
            ..Default::default()
        };
        let m = minimize(f, &[-1.2, 1.0], &opts).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-5, "{:?}", m);
        assert!((m.x[1] - 1.0).abs() < 1e-5, "{:?}", m);
    }

    #[test]
    fn quadratic_is_exact() {
        let f = |x: &[f64]| {
            let v = 0.5 * (x[0] * x[0] + 10.0 * x[1] * x[1] + 3.0 * x[2] * x[2]);
            Some((v, vec![x[0], 10.0 * x[1], 3.0 * x[2]]))
        };
        let m = minimize(f, &[3.0, -2.0, 1.0], &LbfgsOptions::default()).unwrap();
        assert!(m.converged);
        assert!(m.value < 1e-12);
    }

    #[test]
    fn failing_region_is_avoided() {
        // objective undefined for x < 0; minimum at the boundary side x = 0.5
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                None
            } else {
                Some(((x[0] - 0.5).powi(2), vec![2.0 * (x[0] - 0.5)]))
            }
        };
        let m = minimize(f, &[3.0], &LbfgsOptions::default()).unwrap();
        assert!((m.x[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn never_worse_than_start() {
        let f = |x: &[f64]| {
            Some((
                x[0].abs().sqrt(),
                vec![0.5 * x[0].signum() / x[0].abs().sqrt().max(1e-300)],
            ))
        };
        let m = minimize(f, &[2.0], &LbfgsOptions::default()).unwrap();
        assert!(m.value <= 2f64.sqrt());
    }
}
