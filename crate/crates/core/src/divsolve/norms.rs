use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{
    compensated_sum, divergence, jacobian_magnitude, DistanceField, GridDomain, ScalarField, VectorField,
};

/// The norms entering the solvability conditions, with their ratios to `‖f‖_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivNorms {
    pub p: f64,
    pub f: f64,
    pub v: f64,
    pub v_over_rho: f64,
    pub dv: f64,
    pub w1p: f64,
    /// `‖v‖_{W^{1,p}} / ‖f‖_p`
    pub ratio_w1p: f64,
    /// `(‖v/ρ‖_p + ‖Dv‖_p) / ‖f‖_p`
    pub ratio_weighted: f64,
    /// `‖v/ρ‖_p / ‖f‖_p`
    pub ratio_v_over_rho: f64,
}

fn lp(values: impl Iterator<Item = f64>, p: f64, h2: f64) -> f64 {
    (compensated_sum(values.map(|x| x.abs().powf(p))) * h2).powf(1.0 / p)
}

pub fn div_norms(dom: &GridDomain, rho: &DistanceField, v: &VectorField, f: &ScalarField, p: f64) -> DivNorms {
    let h2 = dom.h() * dom.h();
    let f_norm = lp(dom.cells().iter().map(|&k| f.values[k]), p, h2);
    let v_norm = lp((0..v.v1.len()).map(|k| v.magnitude_at(k)), p, h2);
    let v_over_rho = lp(
        (0..v.v1.len()).filter(|&k| dom.contains(k)).map(|k| v.magnitude_at(k) / rho.at(k)),
        p,
        h2,
    );
    let dv = lp(jacobian_magnitude(v).into_iter(), p, h2);
    let w1p = (v_norm.powf(p) + dv.powf(p)).powf(1.0 / p);
    let ratio = |x: f64| if f_norm > 0.0 { x / f_norm } else { 0.0 };
    DivNorms {
        p,
        f: f_norm,
        v: v_norm,
        v_over_rho,
        dv,
        w1p,
        ratio_w1p: ratio(w1p),
        ratio_weighted: ratio(v_over_rho + dv),
        ratio_v_over_rho: ratio(v_over_rho),
    }
}

/// `‖div v − f‖₂ / ‖f‖₂` over the domain (0 when both vanish).
pub fn residual(dom: &GridDomain, v: &VectorField, f: &ScalarField) -> Result<f64> {
    let d = divergence(dom, v)?;
    let num = compensated_sum(dom.cells().iter().map(|&k| (d.values[k] - f.values[k]).powi(2))).sqrt();
    let den = compensated_sum(dom.cells().iter().map(|&k| f.values[k].powi(2))).sqrt();
    Ok(if den > 0.0 {
        num / den
    } else {
        num
    })
}
