use serde::{Deserialize, Serialize};

use super::domain::{GridDomain, GridShape};
use super::sum::NeumaierSum;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    Free,
    ZeroTrace,
}

/// Cell-centered scalar field over the whole array.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub shape: GridShape,
    pub values: Vec<f64>,
    pub bc: BoundaryCondition,
}

impl ScalarField {
    pub fn zeros(shape: GridShape) -> Self {
        Self { shape, values: vec![0.0; shape.len()], bc: BoundaryCondition::Free }
    }

    pub fn from_values(shape: GridShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { shape, values, bc: BoundaryCondition::Free })
    }

    /// Samples `f` at the domain's cell centers; exterior cells get 0.
    pub fn from_fn<F: Fn([f64; 2]) -> f64>(dom: &GridDomain, f: F) -> Self {
        let mut out = Self::zeros(*dom.shape());
        for &k in dom.cells() {
            out.values[k] = f(dom.center(k));
        }
        out
    }

    pub fn with_bc(mut self, bc: BoundaryCondition) -> Self {
        self.bc = bc;
        self
    }

    pub fn check_grid(&self, shape: &GridShape) -> Result<()> {
        if self.shape.compatible(shape) && self.values.len() == shape.len() {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `∫_Ω u dx` with compensated summation.
    pub fn integral(&self, dom: &GridDomain) -> f64 {
        let h2 = dom.h() * dom.h();
        dom.cells().iter().map(|&k| self.values[k]).collect::<NeumaierSum>().value() * h2
    }

    /// Average over the domain, `u_Ω`.
    pub fn mean(&self, dom: &GridDomain) -> f64 {
        dom.cells().iter().map(|&k| self.values[k]).collect::<NeumaierSum>().value()
            / dom.num_cells() as f64
    }

    /// `u - u_Ω` on the domain, zero outside.
    pub fn mean_zero(&self, dom: &GridDomain) -> Self {
        let m = self.mean(dom);
        let mut out = Self::zeros(self.shape);
        for &k in dom.cells() {
            out.values[k] = self.values[k] - m;
        }
        out.bc = self.bc;
        out
    }

    /// Zeroes the field outside the domain.
    pub fn restricted(&self, dom: &GridDomain) -> Self {
        let mut out = Self::zeros(self.shape);
        for &k in dom.cells() {
            out.values[k] = self.values[k];
        }
        out.bc = self.bc;
        out
    }

    /// True when the field vanishes on exterior cells and on the trace layer.
    pub fn is_zero_trace(&self, dom: &GridDomain) -> bool {
        (0..self.values.len())
            .all(|k| self.values[k] == 0.0 || (dom.contains(k) && !dom.is_trace(k)))
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|x| *x *= a);
    }

    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += a * y;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

/// Face-staggered vector field: `v1[c]` is the flux through the face between
/// cell `c` and its right neighbor, `v2[c]` through the face with its upper
/// neighbor. This is the layout produced by forward differences.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub shape: GridShape,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub bc: BoundaryCondition,
}

impl VectorField {
    pub fn zeros(shape: GridShape) -> Self {
        Self {
            shape,
            v1: vec![0.0; shape.len()],
            v2: vec![0.0; shape.len()],
            bc: BoundaryCondition::Free,
        }
    }

    pub fn check_grid(&self, shape: &GridShape) -> Result<()> {
        if self.shape.compatible(shape) && self.v1.len() == shape.len() && self.v2.len() == shape.len()
        {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Pointwise magnitude `|v(c)|` stored at cell `c`.
    #[inline]
    pub fn magnitude_at(&self, k: usize) -> f64 {
        self.v1[k].hypot(self.v2[k])
    }

    /// Discrete zero trace: every face touching an exterior cell carries zero
    /// flux, i.e. `v1[c] != 0` only if `c` and its right neighbor are both in
    /// the domain, and likewise for `v2` with the upper neighbor.
    pub fn is_zero_trace(&self, dom: &GridDomain) -> bool {
        let shape = dom.shape();
        (0..shape.len()).all(|k| {
            let (i, j) = shape.coords(k);
            let ok1 = self.v1[k] == 0.0 || (dom.contains(k) && i + 1 < shape.nx && dom.contains(k + 1));
            let ok2 = self.v2[k] == 0.0
                || (dom.contains(k) && j + 1 < shape.ny && dom.contains(k + shape.nx));
            ok1 && ok2
        })
    }

    /// Sets to zero every face flux that touches an exterior cell.
    pub fn enforce_zero_trace(&mut self, dom: &GridDomain) {
        let shape = *dom.shape();
        for k in 0..shape.len() {
            let (i, j) = shape.coords(k);
            if !(dom.contains(k) && i + 1 < shape.nx && dom.contains(k + 1)) {
                self.v1[k] = 0.0;
            }
            if !(dom.contains(k) && j + 1 < shape.ny && dom.contains(k + shape.nx)) {
                self.v2[k] = 0.0;
            }
        }
        self.bc = BoundaryCondition::ZeroTrace;
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        for (x, y) in self.v1.iter_mut().zip(&other.v1) {
            *x += a * y;
        }
        for (x, y) in self.v2.iter_mut().zip(&other.v2) {
            *x += a * y;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.v1.iter().chain(&self.v2).fold(0.0f64, |m, x| m.max(x.abs()))
    }
}
