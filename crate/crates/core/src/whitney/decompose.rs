use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{DistanceField, GridDomain, GridShape};

/// Default dilation factor for `σQ`.
pub const SIGMA: f64 = 9.0 / 8.0;

const NONE: usize = usize::MAX;

/// Dyadic square of `side × side` cells whose lower-left cell is `anchor`
/// (array coordinates). The side length is `2^-level` (nearest integer level
/// when `h` is not dyadic).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WhitneyCube {
    pub level: i32,
    pub anchor: [usize; 2],
    pub side: usize,
}

impl WhitneyCube {
    pub fn length(&self, h: f64) -> f64 {
        self.side as f64 * h
    }

    pub fn contains_ij(&self, i: usize, j: usize) -> bool {
        i >= self.anchor[0]
            && i < self.anchor[0] + self.side
            && j >= self.anchor[1]
            && j < self.anchor[1] + self.side
    }

    pub fn cells<'a>(&self, shape: &'a GridShape) -> impl Iterator<Item = usize> + 'a {
        let [i0, j0] = self.anchor;
        let s = self.side;
        (j0..j0 + s).flat_map(move |j| (i0..i0 + s).map(move |i| shape.idx(i, j)))
    }

    /// Geometric center of the square.
    pub fn center(&self, shape: &GridShape) -> [f64; 2] {
        let half = 0.5 * (self.side as f64 - 1.0);
        [
            shape.origin[0] + (self.anchor[0] as f64 + half) * shape.h,
            shape.origin[1] + (self.anchor[1] as f64 + half) * shape.h,
        ]
    }

    /// Number of cells added on each side by the dilation `σQ`. At least one
    /// cell, so neighbouring cubes always overlap after dilation.
    pub fn dilation_margin(&self, sigma: f64) -> usize {
        (((sigma - 1.0) * 0.5 * self.side as f64) - 1e-9).ceil().max(1.0) as usize
    }
}

#[derive(Debug, Clone)]
pub struct WhitneyDecomposition {
    shape: GridShape,
    sigma: f64,
    cubes: Vec<WhitneyCube>,
    owner: Vec<usize>,
    regions: Vec<Vec<usize>>,
    dist: Vec<f64>,
}

pub fn whitney_decompose(dom: &GridDomain, rho: &DistanceField) -> Result<WhitneyDecomposition> {
    whitney_decompose_with(dom, rho, SIGMA)
}

/// Quadtree refinement: a dyadic block is accepted once it lies inside the
/// domain and its side does not exceed its distance to the exterior; single
/// cells are always accepted. Blocks are aligned to the absolute lattice of
/// cell indices, so refining `h` by two reproduces the same squares.
pub fn whitney_decompose_with(
    dom: &GridDomain,
    rho: &DistanceField,
    sigma: f64,
) -> Result<WhitneyDecomposition> {
    let shape = *dom.shape();
    if !rho.shape().compatible(&shape) {
        return Err(Error::GridMismatch);
    }
    if !(sigma > 1.0) {
        return Err(Error::InvalidParameter(format!("dilation factor {sigma} must exceed 1")));
    }
    let h = shape.h;
    // absolute cell indices, shifted by a large power of two so dyadic blocks
    // straddling the coordinate origin still nest
    const SHIFT: i64 = 1 << 40;
    let a0 = [
        (shape.origin[0] / h - 0.5).round() as i64 + SHIFT,
        (shape.origin[1] / h - 0.5).round() as i64 + SHIFT,
    ];
    let mut s: i64 = 1;
    while a0[0].div_euclid(s) != (a0[0] + shape.nx as i64 - 1).div_euclid(s)
        || a0[1].div_euclid(s) != (a0[1] + shape.ny as i64 - 1).div_euclid(s)
    {
        s *= 2;
    }
    let root = [a0[0] / s * s - a0[0], a0[1] / s * s - a0[1]];

    let mut builder = Builder { dom, rho: rho.values(), shape, cubes: Vec::new(), dist: Vec::new() };
    builder.visit(root[0], root[1], s);
    let Builder { cubes, dist, .. } = builder;

    let mut owner = vec![NONE; shape.len()];
    for (c, cube) in cubes.iter().enumerate() {
        for k in cube.cells(&shape) {
            owner[k] = c;
        }
    }
    let regions: Vec<Vec<usize>> =
        cubes.par_iter().map(|cube| dilated_region(dom, cube, cube.dilation_margin(sigma))).collect();

    Ok(WhitneyDecomposition { shape, sigma, cubes, owner, regions, dist })
}

struct Builder<'a> {
    dom: &'a GridDomain,
    rho: &'a [f64],
    shape: GridShape,
    cubes: Vec<WhitneyCube>,
    dist: Vec<f64>,
}

impl Builder<'_> {
    fn visit(&mut self, i: i64, j: i64, s: i64) {
        let (nx, ny) = (self.shape.nx as i64, self.shape.ny as i64);
        let mut any = false;
        let mut all = i >= 0 && j >= 0 && i + s <= nx && j + s <= ny;
        let mut min_rho = f64::INFINITY;
        for jj in j.max(0)..(j + s).min(ny) {
            for ii in i.max(0)..(i + s).min(nx) {
                let k = self.shape.idx(ii as usize, jj as usize);
                if self.dom.contains(k) {
                    any = true;
                    min_rho = min_rho.min(self.rho[k]);
                } else {
                    all = false;
                }
            }
        }
        if !any {
            return;
        }
        let h = self.shape.h;
        if all && (s == 1 || s as f64 <= min_rho / h + 1e-9) {
            let level = (-(s as f64 * h).log2()).round() as i32;
            self.cubes.push(WhitneyCube { level, anchor: [i as usize, j as usize], side: s as usize });
            self.dist.push(min_rho);
            return;
        }
        let half = s / 2;
        for (di, dj) in [(0, 0), (half, 0), (0, half), (half, half)] {
            self.visit(i + di, j + dj, half);
        }
    }
}

/// Cells of `σQ ∩ Ω` connected to `Q` inside the dilated box, ascending.
fn dilated_region(dom: &GridDomain, cube: &WhitneyCube, e: usize) -> Vec<usize> {
    let shape = dom.shape();
    let i0 = cube.anchor[0].saturating_sub(e);
    let j0 = cube.anchor[1].saturating_sub(e);
    let i1 = (cube.anchor[0] + cube.side + e).min(shape.nx);
    let j1 = (cube.anchor[1] + cube.side + e).min(shape.ny);
    let bw = i1 - i0;
    let local = |k: usize| {
        let (i, j) = shape.coords(k);
        (j - j0) * bw + (i - i0)
    };
    let mut seen = vec![false; bw * (j1 - j0)];
    let mut stack: Vec<usize> = cube.cells(shape).collect();
    let mut out = Vec::with_capacity(stack.len());
    for &k in &stack {
        seen[local(k)] = true;
    }
    while let Some(k) = stack.pop() {
        out.push(k);
        for n in shape.neighbors4(k) {
            let (i, j) = shape.coords(n);
            if i < i0 || i >= i1 || j < j0 || j >= j1 || !dom.contains(n) {
                continue;
            }
            let l = local(n);
            if !seen[l] {
                seen[l] = true;
                stack.push(n);
            }
        }
    }
    out.sort_unstable();
    out
}

impl WhitneyDecomposition {
    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn cubes(&self) -> &[WhitneyCube] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Index of the cube covering array cell `k`.
    pub fn owner(&self, k: usize) -> Option<usize> {
        Some(self.owner[k]).filter(|&c| c != NONE)
    }

    pub fn cube_at(&self, p: [f64; 2]) -> Option<usize> {
        self.shape.locate(p).and_then(|k| self.owner(k))
    }

    /// Sorted cells of the dilated region `σQ_j`.
    pub fn region(&self, j: usize) -> &[usize] {
        &self.regions[j]
    }

    /// `dist(Q_j, ∂Ω)`, measured as the smallest center distance from a cell of
    /// the cube to an exterior cell.
    pub fn boundary_distance(&self, j: usize) -> f64 {
        self.dist[j]
    }

    /// Number of dilated regions containing each array cell.
    pub fn overlap_counts(&self) -> Vec<u32> {
        let mut count = vec![0u32; self.shape.len()];
        for r in &self.regions {
            for &k in r {
                count[k] += 1;
            }
        }
        count
    }

    /// `max_x #{j : x ∈ σQ_j}`.
    pub fn overlap_constant(&self) -> usize {
        self.overlap_counts().into_iter().max().unwrap_or(0) as usize
    }

    /// `(level, count)` pairs, ascending in level.
    pub fn level_histogram(&self) -> Vec<(i32, usize)> {
        let mut hist = std::collections::BTreeMap::new();
        for c in &self.cubes {
            *hist.entry(c.level).or_insert(0) += 1;
        }
        hist.into_iter().collect()
    }

    /// Pairs of cubes sharing at least one cell edge, ascending and deduplicated.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let shape = &self.shape;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.cubes.len()];
        for k in 0..shape.len() {
            let a = self.owner[k];
            if a == NONE {
                continue;
            }
            let (i, j) = shape.coords(k);
            for n in [(i + 1 < shape.nx).then(|| k + 1), (j + 1 < shape.ny).then(|| k + shape.nx)]
                .into_iter()
                .flatten()
            {
                let b = self.owner[n];
                if b != NONE && b != a {
                    adj[a].push(b);
                    adj[b].push(a);
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{distance_transform, rasterize_predicate, BoundingBox};

    fn square(n: usize) -> GridDomain {
        let h = 1.0 / n as f64;
        rasterize_predicate(BoundingBox { min: [0.0, 0.0], max: [1.0, 1.0] }, h, None, |x, y| {
            (0.0..1.0).contains(&x) && (0.0..1.0).contains(&y)
        })
        .unwrap()
    }

    #[test]
    fn square_cover_is_exact_and_proportional() {
        let dom = square(64);
        let rho = distance_transform(&dom);
        let dec = whitney_decompose(&dom, &rho).unwrap();
        let mut hits = vec![0; dom.shape().len()];
        for c in dec.cubes() {
            for k in c.cells(dom.shape()) {
                assert!(dom.contains(k));
                hits[k] += 1;
            }
        }
        for &k in dom.cells() {
            assert_eq!(hits[k], 1);
        }
        let h = dom.h();
        for (j, c) in dec.cubes().iter().enumerate() {
            if c.side > 1 {
                let l = c.length(h);
                let d = dec.boundary_distance(j);
                assert!(l <= d + 1e-12 && d <= 4.0 * 2f64.sqrt() * l, "cube {c:?}: l={l} d={d}");
            }
        }
    }

    #[test]
    fn single_cell_domain_has_one_cube() {
        let dom = GridDomain::from_unpadded(1, 1, 0.5, &[true], None).unwrap();
        let rho = distance_transform(&dom);
        let dec = whitney_decompose(&dom, &rho).unwrap();
        assert_eq!(dec.len(), 1);
        assert_eq!(dec.cubes()[0].side, 1);
        assert_eq!(dec.overlap_constant(), 1);
    }

    #[test]
    fn regions_contain_their_cube_and_stay_in_the_domain() {
        let dom = rasterize_predicate(
            BoundingBox { min: [-1.0, -1.0], max: [1.0, 1.0] },
            1.0 / 32.0,
            None,
            |x, y| x * x + y * y < 1.0,
        )
        .unwrap();
        let rho = distance_transform(&dom);
        let dec = whitney_decompose(&dom, &rho).unwrap();
        for (j, c) in dec.cubes().iter().enumerate() {
            let r = dec.region(j);
            assert!(c.cells(dom.shape()).all(|k| r.binary_search(&k).is_ok()));
            assert!(r.iter().all(|&k| dom.contains(k)));
            assert!(r.len() > c.side * c.side);
        }
    }
}
