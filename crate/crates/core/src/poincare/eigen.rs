use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::problem::Problem;
use crate::error::{Error, Result};
use crate::grid::compensated_sum;

pub(crate) struct EigenResult {
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn dot_w(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).zip(w).map(|((x, y), m)| x * y * m))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Block inverse iteration with Rayleigh–Ritz for the smallest eigenvalue `μ`
/// of `K x = μ M x` on the admissible subspace; returns `1/μ`.
pub(crate) fn max_quotient_eigen(
    problem: &Problem<'_>,
    block: usize,
    tolerance: f64,
    max_iterations: usize,
    seed: u64,
) -> Result<EigenResult> {
    let n = problem.n();
    let mass = problem.mass();
    let solver = problem.stiffness_factor()?;
    let dim = if problem.mean_zero { n.saturating_sub(1) } else { n };
    if dim == 0 {
        return Err(Error::InvalidParameter("no admissible nonconstant field".into()));
    }
    let bs = block.clamp(1, dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Vec<f64>> = (0..bs)
        .map(|_| {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            problem.project(&mut v);
            v
        })
        .collect();

    let mut mu_prev = f64::INFINITY;
    let mut best = (Vec::new(), 0.0);
    let mut residual = f64::INFINITY;
    for it in 1..=max_iterations {
        // Y = K⁺ M X, then M-orthonormalize
        let mut y: Vec<Vec<f64>> = x
            .iter()
            .map(|xi| {
                let mx: Vec<f64> = xi.iter().zip(&mass).map(|(a, m)| a * m).collect();
                solver.solve(&mx)
            })
            .collect();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(bs);
        for mut v in y.drain(..) {
            for _ in 0..2 {
                for b in &basis {
                    let c = dot_w(&v, b, &mass);
                    v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
                }
            }
            let nrm = dot_w(&v, &v, &mass).sqrt();
            if nrm > 1e-300 && nrm.is_finite() {
                v.iter_mut().for_each(|vi| *vi /= nrm);
                basis.push(v);
            }
        }
        if basis.is_empty() {
            return Err(Error::NonConvergence { iterations: it, residual });
        }
        let m = basis.len();
        let kb: Vec<Vec<f64>> = basis.iter().map(|b| problem.apply_stiffness(b)).collect();
        let mut a = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = 0.5 * (dot(&basis[i], &kb[j]) + dot(&basis[j], &kb[i]));
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let mut new_x = Vec::with_capacity(m);
        for &c in &order {
            let mut v = vec![0.0; n];
            for (r, b) in basis.iter().enumerate() {
                let coef = eig.eigenvectors[(r, c)];
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi += coef * bi);
            }
            problem.project(&mut v);
            new_x.push(v);
        }
        let mu = eig.eigenvalues[order[0]];
        let v0 = &new_x[0];
        let kv = problem.apply_stiffness(v0);
        let r: Vec<f64> = kv.iter().zip(v0).zip(&mass).map(|((k, v), m)| k - mu * m * v).collect();
        residual = dot(&r, &r).sqrt() / dot(&kv, &kv).sqrt().max(1e-300);
        best = (v0.clone(), mu);
        x = new_x;
        if mu > 0.0 && (mu_prev - mu).abs() <= tolerance * mu {
            return Ok(EigenResult { vector: best.0, iterations: it, residual, converged: true });
        }
        mu_prev = mu;
    }
    let (vector, _) = best;
    Ok(EigenResult { vector, iterations: max_iterations, residual, converged: false })
}
