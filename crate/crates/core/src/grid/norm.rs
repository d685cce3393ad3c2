use serde::{Deserialize, Serialize};

use super::distance::DistanceField;
use super::sum::NeumaierSum;
use crate::error::{Error, Result};

/// `(Σ |g|^p ρ^b h²)^{1/p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorm {
    pub p: f64,
    pub b: f64,
}

impl WeightedNorm {
    pub fn new(p: f64, b: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("norm exponent p = {p} must be >= 1")));
        }
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::InvalidParameter(format!("weight exponent b = {b} must be >= 0")));
        }
        Ok(Self { p, b })
    }

    pub fn lp(p: f64) -> Result<Self> {
        Self::new(p, 0.0)
    }
}

/// Anything with a pointwise magnitude per array cell.
pub trait Magnitudes {
    fn magnitudes(&self) -> Vec<f64>;
}

impl Magnitudes for super::field::ScalarField {
    fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|x| x.abs()).collect()
    }
}

impl Magnitudes for super::field::VectorField {
    fn magnitudes(&self) -> Vec<f64> {
        (0..self.v1.len()).map(|k| self.magnitude_at(k)).collect()
    }
}

/// Weighted `L^p` norm of a scalar or vector field. With `b = 0` every array
/// cell counts; with `b > 0` exterior cells drop out because `ρ = 0` there.
pub fn weighted_lp_norm<G: Magnitudes>(g: &G, norm: WeightedNorm, rho: &DistanceField) -> f64 {
    weighted_lp_norm_values(&g.magnitudes(), norm, rho)
}

/// Same as [`weighted_lp_norm`] on precomputed magnitudes.
pub fn weighted_lp_norm_values(mags: &[f64], norm: WeightedNorm, rho: &DistanceField) -> f64 {
    let h2 = rho.h() * rho.h();
    let mut acc = NeumaierSum::new();
    for (k, &m) in mags.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let w = if norm.b == 0.0 { 1.0 } else { rho.at(k).powf(norm.b) };
        acc.add(m.powf(norm.p) * w);
    }
    (acc.value() * h2).powf(1.0 / norm.p)
}
