use serde::Serialize;

use crate::divsolve::residual;
use crate::error::{Error, Result};
use crate::grid::{compensated_sum, gradient, inner_scalar, inner_vector, DistanceField, GridDomain, ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityReport {
    /// `|⟨f, u − u_Ω⟩|`
    pub pairing_f: f64,
    /// `|⟨v, ∇u⟩|`
    pub pairing_v: f64,
    /// `|pairing_f − pairing_v|` relative to `‖f‖₂‖u − u_Ω‖₂ + ‖v‖₂‖∇u‖₂`.
    pub identity_error: f64,
    /// `‖v/ρ‖_p · ‖ρ ∇u‖_{p'}`
    pub holder_bound: f64,
    /// `holder_bound / pairing_f` (infinite when the pairing vanishes).
    pub holder_slack: f64,
    pub p: f64,
}

/// Checks `⟨f, u − u_Ω⟩ = −⟨v, ∇u⟩` for a solution of `div v = f` and the
/// Hölder bound through `ρ`.
pub fn duality_check(
    dom: &GridDomain,
    rho: &DistanceField,
    v: &VectorField,
    f: &ScalarField,
    u: &ScalarField,
    p: f64,
) -> Result<DualityReport> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must exceed 1")));
    }
    let res = residual(dom, v, f)?;
    if res > 1e-8 {
        return Err(Error::PreconditionResidual { residual: res });
    }
    let abs_f = compensated_sum(dom.cells().iter().map(|&k| f.values[k].abs()));
    let sum_f = compensated_sum(dom.cells().iter().map(|&k| f.values[k]));
    if sum_f.abs() > 1e-10 * abs_f.max(f64::MIN_POSITIVE) && abs_f > 0.0 {
        let n = dom.num_cells() as f64;
        return Err(Error::MeanNotZero { mean: sum_f / n, tolerance: 1e-10 * abs_f / n });
    }
    let uc = u.mean_zero(dom);
    let fr = f.restricted(dom);
    let grad = gradient(dom, &uc)?;
    let pf = inner_scalar(&fr, &uc);
    let pv = inner_vector(v, &grad);
    let norm = |a: f64| a.sqrt();
    let scale = norm(inner_scalar(&fr, &fr)) * norm(inner_scalar(&uc, &uc))
        + norm(inner_vector(v, v)) * norm(inner_vector(&grad, &grad));
    let identity_error = if scale > 0.0 { (pf + pv).abs() / scale } else { 0.0 };

    let h2 = dom.h() * dom.h();
    let pc = p / (p - 1.0);
    let a = (compensated_sum(dom.cells().iter().map(|&k| (v.magnitude_at(k) / rho.at(k)).powf(p))) * h2)
        .powf(1.0 / p);
    let b = (compensated_sum(dom.cells().iter().map(|&k| (grad.magnitude_at(k) * rho.at(k)).powf(pc))) * h2)
        .powf(1.0 / pc);
    let holder_bound = a * b;
    Ok(DualityReport {
        pairing_f: pf.abs(),
        pairing_v: pv.abs(),
        identity_error,
        holder_bound,
        holder_slack: if pf != 0.0 { holder_bound / pf.abs() } else { f64::INFINITY },
        p,
    })
}
