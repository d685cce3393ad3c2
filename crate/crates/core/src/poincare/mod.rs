//! Best constants of the weighted Poincaré inequality (mean-zero and
//! zero-on-cube forms) and of the Hardy inequality, estimated by eigen
//! iteration for `p = q = 2` and by multi-start ascent otherwise; the cutoff
//! functions of the component-diameter argument; and the duality identity.

mod ascent;
mod duality;
mod eigen;
mod problem;
mod trial;
mod triple;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use duality::{duality_check, DualityReport};
pub use problem::Mode;
pub use trial::{proof_trial_functions, RadiiSequence, TrialFunction, TrialKind};
pub use triple::{validate_triple, Exponents, SobolevTriple};

use crate::error::Result;
use crate::grid::{DistanceField, GridDomain, ScalarField};
use problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    /// The value of the quotient at a fixed, explicitly constructed field.
    LowerBoundCertified,
    /// The best value found by an optimizer (still the quotient of `trial`).
    AscentEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    Eigen,
    Ascent,
    Trial,
}

/// Which optimizer to use; `Auto` picks eigen iteration for `p = q = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Path {
    Auto,
    Eigen,
    Ascent,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub kind: EstimateKind,
    pub method: EstimateMethod,
    /// The maximizing field; `value` is its quotient.
    #[serde(skip)]
    pub trial: ScalarField,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub seed: u64,
    pub starts: usize,
    pub p: f64,
    pub q: f64,
    pub b: f64,
    pub sobolev_triple: bool,
}

#[derive(Debug, Clone)]
pub struct EstimateOptions {
    pub path: Path,
    pub seed: u64,
    /// Random starts for the ascent path (trial starts come on top).
    pub starts: usize,
    /// Relative change of the quotient over 10 ascent iterations.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub eigen_tolerance: f64,
    pub eigen_block: usize,
    pub eigen_max_iterations: usize,
    /// Warm starts, also evaluated as certified lower bounds.
    pub trials: Vec<ScalarField>,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            path: Path::Auto,
            seed: 0,
            starts: 20,
            tolerance: 1e-8,
            max_iterations: 100_000,
            eigen_tolerance: 1e-8,
            eigen_block: 4,
            eigen_max_iterations: 5_000,
            trials: Vec::new(),
        }
    }
}

/// Quotient `‖u − u_Ω‖_q^p / ∫|∇u|^p ρ^b` (or with `u|_Q = 0` enforced) of a
/// given field.
pub fn poincare_quotient(
    dom: &GridDomain,
    rho: &DistanceField,
    exps: Exponents,
    mode: &Mode,
    u: &ScalarField,
) -> Result<f64> {
    u.check_grid(dom.shape())?;
    let pr = Problem::poincare(dom, rho, exps, mode)?;
    Ok(pr.quotient(&pr.from_field(u)))
}

/// Quotient `‖v/ρ‖_p^p / ‖∇v‖_p^p` of a given field with its trace layer zeroed.
pub fn hardy_quotient(dom: &GridDomain, rho: &DistanceField, p: f64, v: &ScalarField) -> Result<f64> {
    v.check_grid(dom.shape())?;
    let pr = Problem::hardy(dom, rho, p)?;
    Ok(pr.quotient(&pr.from_field(v)))
}

/// Certified lower bound from a single explicit field.
pub fn certify(
    dom: &GridDomain,
    rho: &DistanceField,
    exps: Exponents,
    mode: &Mode,
    u: &ScalarField,
) -> Result<ConstantEstimate> {
    let pr = Problem::poincare(dom, rho, exps, mode)?;
    let x = pr.from_field(u);
    Ok(ConstantEstimate {
        value: pr.quotient(&x),
        kind: EstimateKind::LowerBoundCertified,
        method: EstimateMethod::Trial,
        trial: pr.to_field(&x),
        iterations: 0,
        residual: 0.0,
        converged: true,
        seed: 0,
        starts: 0,
        p: exps.p,
        q: exps.q,
        b: exps.b,
        sobolev_triple: exps.sobolev_triple,
    })
}

pub fn poincare_constant(
    dom: &GridDomain,
    rho: &DistanceField,
    exps: Exponents,
    mode: &Mode,
    opts: &EstimateOptions,
) -> Result<ConstantEstimate> {
    let pr = Problem::poincare(dom, rho, exps, mode)?;
    estimate(&pr, opts, (exps.p, exps.q, exps.b, exps.sobolev_triple))
}

pub fn hardy_constant(dom: &GridDomain, rho: &DistanceField, p: f64, opts: &EstimateOptions) -> Result<ConstantEstimate> {
    let pr = Problem::hardy(dom, rho, p)?;
    estimate(&pr, opts, (p, p, 0.0, false))
}

fn estimate(pr: &Problem<'_>, opts: &EstimateOptions, tag: (f64, f64, f64, bool)) -> Result<ConstantEstimate> {
    let (p, q, b, sobolev_triple) = tag;
    let use_eigen = match opts.path {
        Path::Auto => p == 2.0 && q == 2.0,
        Path::Eigen => true,
        Path::Ascent => false,
    };
    let base = |value, method, x: &[f64], iterations, residual, converged, starts| ConstantEstimate {
        value,
        kind: EstimateKind::AscentEstimate,
        method,
        trial: pr.to_field(x),
        iterations,
        residual,
        converged,
        seed: opts.seed,
        starts,
        p,
        q,
        b,
        sobolev_triple,
    };
    let trial_vectors: Vec<Vec<f64>> = opts.trials.iter().map(|t| pr.from_field(t)).collect();

    let mut best = if use_eigen {
        if p != 2.0 || q != 2.0 {
            return Err(crate::Error::InvalidParameter("eigen path needs p = q = 2".into()));
        }
        let r = eigen::max_quotient_eigen(pr, opts.eigen_block, opts.eigen_tolerance, opts.eigen_max_iterations, opts.seed)?;
        if !r.converged {
            log::warn!("eigen iteration stopped after {} iterations", r.iterations);
        }
        let value = pr.quotient(&r.vector);
        base(value, EstimateMethod::Eigen, &r.vector, r.iterations, r.residual, r.converged, 1)
    } else {
        let precond = pr.stiffness_factor()?;
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut starts: Vec<Vec<f64>> = (0..opts.starts)
            .map(|_| (0..pr.n()).map(|_| rng.random::<f64>() - 0.5).collect())
            .collect();
        starts.extend(trial_vectors.iter().cloned());
        let n_starts = starts.len();
        let results: Vec<_> = starts
            .par_iter()
            .map(|s| ascent::ascend(pr, &precond, s, opts.tolerance, opts.max_iterations))
            .collect();
        let mut best_r = None::<ascent::AscentResult>;
        let mut total_it = 0;
        let mut all_converged = true;
        for r in results {
            total_it += r.iterations;
            all_converged &= r.converged;
            if best_r.as_ref().is_none_or(|b| r.value > b.value) {
                best_r = Some(r);
            }
        }
        let r = best_r.ok_or_else(|| crate::Error::InvalidParameter("no ascent start".into()))?;
        if !all_converged {
            log::warn!("some ascent starts hit the iteration cap");
        }
        base(r.value, EstimateMethod::Ascent, &r.vector, total_it, 0.0, all_converged, n_starts)
    };
    // a trial field that beats the optimizer is itself an admissible maximizer
    for t in &trial_vectors {
        let v = pr.quotient(t);
        if v > best.value {
            best.value = v;
            best.trial = pr.to_field(t);
            best.method = EstimateMethod::Trial;
        }
    }
    Ok(best)
}
