use serde::{Deserialize, Serialize};

use super::triple::Exponents;
use crate::error::{Error, Result};
use crate::grid::{compensated_sum, DistanceField, GridDomain, ScalarField};
use crate::linalg::{nested_dissection, SparseLdl, TripletBuilder};

/// Side condition on Poincaré test functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Mode {
    /// Quotient of `‖u − u_Ω‖`.
    MeanZero,
    /// `u = 0` on the cells whose centers lie in the open square
    /// `|x − center|_∞ < half_side`.
    ZeroOnCube { center: [f64; 2], half_side: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Kind {
    Poincare(Exponents),
    Hardy(f64),
}

/// A discrete best-constant problem: the admissible cells, the quotient and
/// its gradient, and the `p = 2` stiffness used for eigen solves and as a
/// preconditioner.
pub(crate) struct Problem<'a> {
    pub dom: &'a GridDomain,
    pub rho: &'a DistanceField,
    pub kind: Kind,
    pub mean_zero: bool,
    /// Admissible (free) cells, ascending.
    pub free: Vec<usize>,
    slot: Vec<u32>,
    /// Edges `(a, b, weight)` between domain cells, as array indices.
    edges: Vec<(usize, usize, f64)>,
    /// Per-cell gradient weight (`ρ^b` or 1).
    weight: Vec<f64>,
}

const NONE: u32 = u32::MAX;

impl<'a> Problem<'a> {
    pub fn poincare(dom: &'a GridDomain, rho: &'a DistanceField, exps: Exponents, mode: &Mode) -> Result<Self> {
        let (free, mean_zero) = match mode {
            Mode::MeanZero => (dom.cells().to_vec(), true),
            Mode::ZeroOnCube { center, half_side } => {
                let inside = |k: usize| {
                    let c = dom.center(k);
                    (c[0] - center[0]).abs() < *half_side && (c[1] - center[1]).abs() < *half_side
                };
                let cube: Vec<usize> = dom.cells().iter().copied().filter(|&k| inside(k)).collect();
                if cube.is_empty() {
                    return Err(Error::InvalidParameter("cube contains no cell".into()));
                }
                if cube.iter().any(|&k| dom.is_trace(k)) {
                    return Err(Error::InvalidParameter("cube must lie compactly inside the domain".into()));
                }
                (dom.cells().iter().copied().filter(|&k| !inside(k)).collect(), false)
            }
        };
        let weight: Vec<f64> = (0..dom.shape().len())
            .map(|k| if dom.contains(k) { rho.at(k).powf(exps.b) } else { 0.0 })
            .collect();
        Ok(Self::assemble(dom, rho, Kind::Poincare(exps), mean_zero, free, weight))
    }

    pub fn hardy(dom: &'a GridDomain, rho: &'a DistanceField, p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidParameter(format!("Hardy exponent must exceed 1, got {p}")));
        }
        let free = dom.deep_cells();
        if free.is_empty() {
            return Err(Error::InvalidParameter("domain has no cells off the trace layer".into()));
        }
        let weight = (0..dom.shape().len()).map(|k| if dom.contains(k) { 1.0 } else { 0.0 }).collect();
        Ok(Self::assemble(dom, rho, Kind::Hardy(p), false, free, weight))
    }

    fn assemble(
        dom: &'a GridDomain,
        rho: &'a DistanceField,
        kind: Kind,
        mean_zero: bool,
        free: Vec<usize>,
        weight: Vec<f64>,
    ) -> Self {
        let shape = dom.shape();
        let mut slot = vec![NONE; shape.len()];
        for (s, &k) in free.iter().enumerate() {
            slot[k] = s as u32;
        }
        let mut edges = Vec::new();
        for &k in dom.cells() {
            let (i, j) = shape.coords(k);
            if i + 1 < shape.nx && dom.contains(k + 1) {
                edges.push((k, k + 1, weight[k]));
            }
            if j + 1 < shape.ny && dom.contains(k + shape.nx) {
                edges.push((k, k + shape.nx, weight[k]));
            }
        }
        Self { dom, rho, kind, mean_zero, free, slot, edges, weight }
    }

    pub fn n(&self) -> usize {
        self.free.len()
    }

    pub fn exponents(&self) -> (f64, f64) {
        match self.kind {
            Kind::Poincare(e) => (e.p, e.q),
            Kind::Hardy(p) => (p, p),
        }
    }

    /// Full-array field from free-cell values.
    pub fn to_field(&self, x: &[f64]) -> ScalarField {
        let mut f = ScalarField::zeros(*self.dom.shape());
        for (s, &k) in self.free.iter().enumerate() {
            f.values[k] = x[s];
        }
        f
    }

    /// Free-cell values of a field (constrained cells are dropped).
    pub fn from_field(&self, f: &ScalarField) -> Vec<f64> {
        self.free.iter().map(|&k| f.values[k]).collect()
    }

    /// Removes the constant component in mean-zero mode.
    pub fn project(&self, x: &mut [f64]) {
        if self.mean_zero {
            let m = compensated_sum(x.iter().copied()) / x.len() as f64;
            x.iter_mut().for_each(|v| *v -= m);
        }
    }

    fn value_at(&self, x: &[f64], k: usize) -> f64 {
        let s = self.slot[k];
        if s == NONE {
            0.0
        } else {
            x[s as usize]
        }
    }

    /// `(numerator, denominator)` of the quotient; the quotient is
    /// `numerator / denominator`.
    pub fn parts(&self, x: &[f64]) -> (f64, f64) {
        let h = self.dom.h();
        let h2 = h * h;
        let (p, q) = self.exponents();
        let num = match self.kind {
            Kind::Poincare(_) => {
                let m = if self.mean_zero { compensated_sum(x.iter().copied()) / x.len() as f64 } else { 0.0 };
                (compensated_sum(x.iter().map(|v| (v - m).abs().powf(q))) * h2).powf(p / q)
            }
            Kind::Hardy(_) => {
                compensated_sum(self.free.iter().zip(x).map(|(&k, v)| (v / self.rho.at(k)).abs().powf(p))) * h2
            }
        };
        let den = compensated_sum(self.gradient_magnitudes(x).map(|(k, g)| self.weight[k] * g.powf(p))) * h2;
        (num, den)
    }

    pub fn quotient(&self, x: &[f64]) -> f64 {
        let (num, den) = self.parts(x);
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }

    /// `(cell, |∇u|(cell))` for every domain cell, forward differences.
    fn gradient_magnitudes<'b>(&'b self, x: &'b [f64]) -> impl Iterator<Item = (usize, f64)> + 'b {
        let shape = *self.dom.shape();
        let inv_h = 1.0 / shape.h;
        self.dom.cells().iter().map(move |&k| {
            let (i, j) = shape.coords(k);
            let u = self.value_at(x, k);
            let g1 = if i + 1 < shape.nx && self.dom.contains(k + 1) {
                (self.value_at(x, k + 1) - u) * inv_h
            } else {
                0.0
            };
            let g2 = if j + 1 < shape.ny && self.dom.contains(k + shape.nx) {
                (self.value_at(x, k + shape.nx) - u) * inv_h
            } else {
                0.0
            };
            (k, g1.hypot(g2))
        })
    }

    /// `log` of the quotient and its gradient with respect to the free values.
    pub fn log_quotient_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let shape = *self.dom.shape();
        let h = shape.h;
        let (p, q) = self.exponents();
        let (num, den) = self.parts(x);
        let mut g = vec![0.0; x.len()];
        if num <= 0.0 || den <= 0.0 {
            return (f64::NEG_INFINITY, g);
        }
        // numerator term
        match self.kind {
            Kind::Poincare(_) => {
                let m = if self.mean_zero { compensated_sum(x.iter().copied()) / x.len() as f64 } else { 0.0 };
                let sum_q = compensated_sum(x.iter().map(|v| (v - m).abs().powf(q)));
                let c = (p / q) * q / sum_q;
                for (gi, v) in g.iter_mut().zip(x) {
                    let e = v - m;
                    *gi = c * e.abs().powf(q - 2.0) * e;
                }
            }
            Kind::Hardy(_) => {
                let sum_p =
                    compensated_sum(self.free.iter().zip(x).map(|(&k, v)| (v / self.rho.at(k)).abs().powf(p)));
                let c = p / sum_p;
                for ((gi, v), &k) in g.iter_mut().zip(x).zip(&self.free) {
                    let r = self.rho.at(k);
                    let e = v / r;
                    *gi = c * e.abs().powf(p - 2.0) * e / r;
                }
            }
        }
        // denominator term
        let inv_h = 1.0 / h;
        let sum_d = den / (h * h);
        let tiny = 1e-300;
        for (k, _) in self.gradient_magnitudes(x) {
            let (i, j) = shape.coords(k);
            let u = self.value_at(x, k);
            let right = (i + 1 < shape.nx && self.dom.contains(k + 1)).then(|| k + 1);
            let up = (j + 1 < shape.ny && self.dom.contains(k + shape.nx)).then(|| k + shape.nx);
            let g1 = right.map_or(0.0, |n| (self.value_at(x, n) - u) * inv_h);
            let g2 = up.map_or(0.0, |n| (self.value_at(x, n) - u) * inv_h);
            let mag2 = g1 * g1 + g2 * g2;
            if mag2 <= tiny {
                continue;
            }
            let phi = p * self.weight[k] * mag2.powf(0.5 * p - 1.0) * inv_h / sum_d;
            let sk = self.slot[k];
            for (n, gc) in [(right, g1), (up, g2)] {
                let Some(n) = n else { continue };
                let sn = self.slot[n];
                if sn != NONE {
                    g[sn as usize] -= phi * gc;
                }
                if sk != NONE {
                    g[sk as usize] += phi * gc;
                }
            }
        }
        self.project(&mut g);
        (num.ln() - den.ln(), g)
    }

    /// Diagonal of the `p = 2` numerator form: `h²` for Poincaré, `h²/ρ²` for Hardy.
    pub fn mass(&self) -> Vec<f64> {
        let h2 = self.dom.h() * self.dom.h();
        match self.kind {
            Kind::Poincare(_) => vec![h2; self.n()],
            Kind::Hardy(_) => self.free.iter().map(|&k| h2 / self.rho.at(k).powi(2)).collect(),
        }
    }

    /// `K x` for the `p = 2` denominator form `xᵀ K x = Σ w |∇u|² h²`.
    pub fn apply_stiffness(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for &(a, b, w) in &self.edges {
            let (sa, sb) = (self.slot[a], self.slot[b]);
            let ua = if sa == NONE { 0.0 } else { x[sa as usize] };
            let ub = if sb == NONE { 0.0 } else { x[sb as usize] };
            let d = w * (ua - ub);
            if sa != NONE {
                out[sa as usize] += d;
            }
            if sb != NONE {
                out[sb as usize] -= d;
            }
        }
        out
    }

    /// Factor of the stiffness; in mean-zero mode the last free cell is pinned.
    pub fn stiffness_factor(&self) -> Result<StiffnessSolver> {
        let n = self.n();
        let pinned = if self.mean_zero { Some(n - 1) } else { None };
        let m = n - pinned.is_some() as usize;
        let mut b = TripletBuilder::with_capacity(m, 3 * m);
        let keep = |s: u32| s != NONE && (s as usize) < m;
        for &(a, c, w) in &self.edges {
            let (sa, sc) = (self.slot[a], self.slot[c]);
            if keep(sa) {
                b.add(sa as usize, sa as usize, w);
            }
            if keep(sc) {
                b.add(sc as usize, sc as usize, w);
            }
            if keep(sa) && keep(sc) {
                b.add(sa as usize, sc as usize, -w);
            }
        }
        let shape = self.dom.shape();
        let coords: Vec<[i32; 2]> = self.free[..m]
            .iter()
            .map(|&k| {
                let (i, j) = shape.coords(k);
                [i as i32, j as i32]
            })
            .collect();
        let ldl = if m == 0 { None } else { Some(SparseLdl::factor_positive(&b, Some(nested_dissection(&coords, 1)))?) };
        Ok(StiffnessSolver { ldl, n, pinned: pinned.is_some(), mean_zero: self.mean_zero })
    }
}

/// Applies `K⁺` (mean-zero mode: up to constants, then projected).
pub(crate) struct StiffnessSolver {
    ldl: Option<SparseLdl>,
    n: usize,
    pinned: bool,
    mean_zero: bool,
}

impl StiffnessSolver {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut b = rhs.to_vec();
        if self.mean_zero {
            let m = compensated_sum(b.iter().copied()) / self.n as f64;
            b.iter_mut().for_each(|v| *v -= m);
        }
        let m = self.n - self.pinned as usize;
        let mut x = vec![0.0; self.n];
        if let Some(ldl) = &self.ldl {
            let sol = ldl.solve(&b[..m]);
            x[..m].copy_from_slice(&sol);
        }
        if self.mean_zero {
            let mean = compensated_sum(x.iter().copied()) / self.n as f64;
            x.iter_mut().for_each(|v| *v -= mean);
        }
        x
    }
}
