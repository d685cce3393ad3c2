use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Array geometry shared by every field on a grid. Cell `(i, j)` has its center at
/// `origin + (i h, j h)`; storage is row-major with `i` fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridShape {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: [f64; 2],
}

impl GridShape {
    pub fn new(nx: usize, ny: usize, h: f64, origin: [f64; 2]) -> Self {
        Self { nx, ny, h, origin }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn center(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.coords(idx);
        [self.origin[0] + i as f64 * self.h, self.origin[1] + j as f64 * self.h]
    }

    /// Index of the cell whose square contains `p`, if inside the array.
    pub fn locate(&self, p: [f64; 2]) -> Option<usize> {
        let fi = ((p[0] - self.origin[0]) / self.h + 0.5).floor();
        let fj = ((p[1] - self.origin[1]) / self.h + 0.5).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some(self.idx(fi as usize, fj as usize))
    }

    /// Same array layout and spacing (origin is allowed to differ by rounding).
    pub fn compatible(&self, other: &GridShape) -> bool {
        self.nx == other.nx && self.ny == other.ny && (self.h - other.h).abs() <= 1e-12 * self.h
    }

    /// 4-neighbors of `idx` that lie inside the array.
    #[inline]
    pub fn neighbors4(&self, idx: usize) -> impl Iterator<Item = usize> {
        let (i, j) = self.coords(idx);
        let nx = self.nx;
        let ny = self.ny;
        let mut out = [usize::MAX; 4];
        if i > 0 {
            out[0] = idx - 1;
        }
        if i + 1 < nx {
            out[1] = idx + 1;
        }
        if j > 0 {
            out[2] = idx - nx;
        }
        if j + 1 < ny {
            out[3] = idx + nx;
        }
        out.into_iter().filter(|&k| k != usize::MAX)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

/// Closed-form Euclidean ball used by the geometric tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Ball {
    pub fn new(center: [f64; 2], radius: f64) -> Self {
        Self { center, radius }
    }

    /// Open-ball membership.
    #[inline]
    pub fn contains(&self, p: [f64; 2]) -> bool {
        dist(p, self.center) < self.radius
    }
}

#[inline]
/// Euclidean distance between two points.
pub fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Binary occupancy mask standing in for a bounded planar domain.
///
/// Invariants checked at construction: at least one cell, a one-cell exterior
/// margin around the array, and a single 4-connected component.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    shape: GridShape,
    mask: Vec<bool>,
    family_tag: Option<String>,
    cells: Vec<usize>,
}

impl GridDomain {
    pub fn new(shape: GridShape, mask: Vec<bool>, family_tag: Option<String>) -> Result<Self> {
        if mask.len() != shape.len() {
            return Err(Error::InvalidParameter(format!(
                "mask has {} entries, shape needs {}",
                mask.len(),
                shape.len()
            )));
        }
        if !(shape.h > 0.0) {
            return Err(Error::InvalidParameter("spacing must be positive".into()));
        }
        let cells: Vec<usize> = (0..mask.len()).filter(|&k| mask[k]).collect();
        if cells.is_empty() {
            return Err(Error::EmptyRaster);
        }
        for &k in &cells {
            let (i, j) = shape.coords(k);
            if i == 0 || j == 0 || i + 1 == shape.nx || j + 1 == shape.ny {
                return Err(Error::NoMargin);
            }
        }
        let (_, count) = label_components(&shape, &mask);
        if count != 1 {
            return Err(Error::DisconnectedRaster { components: count });
        }
        Ok(Self { shape, mask, family_tag, cells })
    }

    /// Wraps `mask` in a fresh array with a one-cell false margin on every side.
    pub fn from_unpadded(
        nx: usize,
        ny: usize,
        h: f64,
        mask: &[bool],
        family_tag: Option<String>,
    ) -> Result<Self> {
        let shape = GridShape::new(nx + 2, ny + 2, h, [-0.5 * h, -0.5 * h]);
        let mut padded = vec![false; shape.len()];
        for j in 0..ny {
            for i in 0..nx {
                padded[shape.idx(i + 1, j + 1)] = mask[j * nx + i];
            }
        }
        Self::new(shape, padded, family_tag)
    }

    #[inline]
    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.shape.h
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn family_tag(&self) -> Option<&str> {
        self.family_tag.as_deref()
    }

    /// Flat indices of the cells of the domain, ascending.
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn area(&self) -> f64 {
        self.cells.len() as f64 * self.shape.h * self.shape.h
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    /// Membership for signed cell coordinates; anything outside the array is exterior.
    #[inline]
    pub fn contains_ij(&self, i: isize, j: isize) -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < self.shape.nx
            && (j as usize) < self.shape.ny
            && self.mask[self.shape.idx(i as usize, j as usize)]
    }

    /// Cells of the domain 4-adjacent to an exterior cell (the zero-trace layer).
    #[inline]
    pub fn is_trace(&self, idx: usize) -> bool {
        self.mask[idx] && self.shape.neighbors4(idx).any(|k| !self.mask[k])
    }

    pub fn trace_cells(&self) -> Vec<usize> {
        self.cells.iter().copied().filter(|&k| self.is_trace(k)).collect()
    }

    /// Domain cells not on the trace layer.
    pub fn deep_cells(&self) -> Vec<usize> {
        self.cells.iter().copied().filter(|&k| !self.is_trace(k)).collect()
    }

    pub fn center(&self, idx: usize) -> [f64; 2] {
        self.shape.center(idx)
    }

    /// Same mask on a grid with spacing scaled by `factor` (origin scaled too).
    pub fn rescaled(&self, factor: f64) -> Self {
        let mut shape = self.shape;
        shape.h *= factor;
        shape.origin = [shape.origin[0] * factor, shape.origin[1] * factor];
        Self {
            shape,
            mask: self.mask.clone(),
            family_tag: self.family_tag.clone(),
            cells: self.cells.clone(),
        }
    }

    /// Copy with `removed` cells taken out of the mask; re-validates the invariants.
    pub fn without_cells(&self, removed: &[usize]) -> Result<Self> {
        let mut mask = self.mask.clone();
        for &k in removed {
            mask[k] = false;
        }
        Self::new(self.shape, mask, self.family_tag.clone())
    }

    /// Cell centers inside the domain that lie in the open ball.
    pub fn cells_in_ball(&self, ball: &Ball) -> Vec<usize> {
        self.cells.iter().copied().filter(|&k| ball.contains(self.center(k))).collect()
    }
}

/// Builds a domain from a membership predicate evaluated at cell centers. Cell
/// centers sit on the lattice `(k + 1/2) h`, so axis-aligned unit boxes are
/// reproduced exactly.
pub fn rasterize_predicate<F>(
    bbox: BoundingBox,
    h: f64,
    family_tag: Option<String>,
    inside: F,
) -> Result<GridDomain>
where
    F: Fn(f64, f64) -> bool,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("spacing {h} must be positive")));
    }
    let i0 = (bbox.min[0] / h).floor() as i64 - 1;
    let j0 = (bbox.min[1] / h).floor() as i64 - 1;
    let i1 = (bbox.max[0] / h).ceil() as i64 + 1;
    let j1 = (bbox.max[1] / h).ceil() as i64 + 1;
    let nx = (i1 - i0) as usize;
    let ny = (j1 - j0) as usize;
    let origin = [(i0 as f64 + 0.5) * h, (j0 as f64 + 0.5) * h];
    let shape = GridShape::new(nx, ny, h, origin);
    let mut mask = vec![false; shape.len()];
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let x = (i0 + i as i64) as f64 * h + 0.5 * h;
            let y = (j0 + j as i64) as f64 * h + 0.5 * h;
            mask[shape.idx(i, j)] = inside(x, y);
        }
    }
    GridDomain::new(shape, mask, family_tag)
}

/// 4-connected component labels of a mask (`usize::MAX` for exterior cells) and
/// the number of components.
pub fn label_components(shape: &GridShape, mask: &[bool]) -> (Vec<usize>, usize) {
    let mut label = vec![usize::MAX; mask.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        stack.push(start);
        while let Some(k) = stack.pop() {
            for n in shape.neighbors4(k) {
                if mask[n] && label[n] == usize::MAX {
                    label[n] = count;
                    stack.push(n);
                }
            }
        }
        count += 1;
    }
    (label, count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_is_exact() {
        let h = 1.0 / 64.0;
        let bbox = BoundingBox { min: [0.0, 0.0], max: [1.0, 1.0] };
        let dom = rasterize_predicate(bbox, h, None, |x, y| x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0)
            .unwrap();
        assert_eq!(dom.num_cells(), 64 * 64);
    }

    #[test]
    fn disconnected_mask_is_rejected() {
        let bbox = BoundingBox { min: [0.0, 0.0], max: [1.0, 1.0] };
        let err = rasterize_predicate(bbox, 0.1, None, |x, _| x < 0.3 || x > 0.7).unwrap_err();
        assert!(matches!(err, Error::DisconnectedRaster { components: 2 }));
    }

    #[test]
    fn empty_mask_is_rejected() {
        let bbox = BoundingBox { min: [0.0, 0.0], max: [1.0, 1.0] };
        let err = rasterize_predicate(bbox, 0.1, None, |_, _| false).unwrap_err();
        assert!(matches!(err, Error::EmptyRaster));
    }

    #[test]
    fn single_cell_domain_is_legal() {
        let dom = GridDomain::from_unpadded(1, 1, 0.5, &[true], None).unwrap();
        assert_eq!(dom.num_cells(), 1);
        assert!(dom.is_trace(dom.cells()[0]));
    }

    #[test]
    fn locate_inverts_center() {
        let shape = GridShape::new(7, 5, 0.25, [-0.125, 0.375]);
        for k in 0..shape.len() {
            assert_eq!(shape.locate(shape.center(k)), Some(k));
        }
    }
}
