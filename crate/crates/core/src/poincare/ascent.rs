use super::problem::{Problem, StiffnessSolver};
use crate::grid::compensated_sum;

pub(crate) struct AscentResult {
    pub vector: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

fn normalize(x: &mut [f64]) {
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m > 0.0 {
        x.iter_mut().for_each(|v| *v /= m);
    }
}

/// Maximizes the quotient from `start` by gradient ascent on its logarithm,
/// preconditioned with the `p = 2` stiffness (a discrete Sobolev gradient),
/// with Barzilai–Borwein steps safeguarded by Armijo backtracking. Stops when
/// the quotient grows by less than `tolerance` (relative) over 10 iterations.
pub(crate) fn ascend(
    problem: &Problem<'_>,
    precond: &StiffnessSolver,
    start: &[f64],
    tolerance: f64,
    max_iterations: usize,
) -> AscentResult {
    let mut x = start.to_vec();
    problem.project(&mut x);
    normalize(&mut x);
    let (mut f, mut g) = problem.log_quotient_gradient(&x);
    if !f.is_finite() {
        return AscentResult { vector: x, value: 0.0, iterations: 0, converged: false };
    }
    let mut d = precond.solve(&g);
    problem.project(&mut d);
    let mut history = vec![f];
    let mut step = {
        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if dmax > 0.0 {
            0.1 / dmax
        } else {
            0.0
        }
    };
    let mut converged = false;
    let mut it = 0;
    while it < max_iterations {
        it += 1;
        let slope = dot(&g, &d);
        if !(slope > 0.0) || step == 0.0 {
            converged = true;
            break;
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let (ft, gt) = problem.log_quotient_gradient(&trial);
            if ft.is_finite() && ft >= f + 1e-4 * t * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            t *= 0.5;
        }
        let Some((mut xn, fn_, gn)) = accepted else {
            converged = true;
            break;
        };
        let mut dn = precond.solve(&gn);
        problem.project(&mut dn);
        // BB step in the preconditioned metric: s = t d, y = g − g_new
        let s: Vec<f64> = d.iter().map(|v| t * v).collect();
        let yv: Vec<f64> = g.iter().zip(&gn).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        let sks = t * t * dot(&d, &g);
        step = if sy > 0.0 { (sks / sy).clamp(1e-3 * t, 1e3 * t) } else { 2.0 * t };
        // keep the scale fixed; the quotient is 0-homogeneous
        let scale = xn.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale > 0.0 {
            xn.iter_mut().for_each(|v| *v /= scale);
            dn.iter_mut().for_each(|v| *v *= scale);
            step /= scale * scale;
        }
        let gscaled: Vec<f64> = gn.iter().map(|v| v * scale).collect();
        x = xn;
        f = fn_;
        g = gscaled;
        d = dn;
        history.push(f);
        if history.len() > 10 {
            let old = history[history.len() - 11];
            if (f - old).abs() < tolerance {
                converged = true;
                break;
            }
        }
    }
    let value = problem.quotient(&x);
    AscentResult { vector: x, value, iterations: it, converged }
}
