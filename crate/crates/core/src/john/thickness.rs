use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Ball, GridDomain};

/// Dyadic content of `Ω^c ∩ B(w, r)` normalized by `r^λ`.
///
/// `ratio` is the dyadic content itself; any set of diameter `δ` lies in at
/// most four dyadic squares of side below `2δ`, so `certified_ratio =
/// ratio / (4·2^λ)` is a lower bound for the Hausdorff content ratio of the
/// rasterized complement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thickness {
    pub lambda: f64,
    pub radius: f64,
    pub dyadic_content: f64,
    pub ratio: f64,
    pub certified_ratio: f64,
    pub complement_cells: usize,
}

const SHIFT: i64 = 1 << 40;

struct Counter<'a> {
    dom: &'a GridDomain,
    ball: Ball,
    base: [i64; 2],
    h: f64,
    lambda: f64,
    cells: usize,
}

impl Counter<'_> {
    fn complement(&self, i: i64, j: i64) -> bool {
        let p = [(i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h];
        if !self.ball.contains(p) {
            return false;
        }
        let (li, lj) = (i - self.base[0], j - self.base[1]);
        !self.dom.contains_ij(li as isize, lj as isize)
    }

    /// Minimal dyadic cover cost of the block: either the block itself or the
    /// best covers of its four children.
    fn cost(&mut self, i: i64, j: i64, side: i64) -> f64 {
        // skip blocks that miss the ball entirely
        let lo = [i as f64 * self.h, j as f64 * self.h];
        let hi = [(i + side) as f64 * self.h, (j + side) as f64 * self.h];
        let c = self.ball.center;
        let dx = (lo[0] - c[0]).max(c[0] - hi[0]).max(0.0);
        let dy = (lo[1] - c[1]).max(c[1] - hi[1]).max(0.0);
        if (dx * dx + dy * dy).sqrt() >= self.ball.radius {
            return 0.0;
        }
        if side == 1 {
            if self.complement(i, j) {
                self.cells += 1;
                return self.h.powf(self.lambda);
            }
            return 0.0;
        }
        let half = side / 2;
        let mut sum = 0.0;
        for (a, b) in [(0, 0), (half, 0), (0, half), (half, half)] {
            sum += self.cost(i + a, j + b, half);
        }
        if sum == 0.0 {
            return 0.0;
        }
        sum.min((side as f64 * self.h).powf(self.lambda))
    }
}

pub fn content_thickness(dom: &GridDomain, lambda: f64, w: [f64; 2], r: f64) -> Result<Thickness> {
    if !(lambda > 0.0 && lambda <= 2.0) {
        return Err(Error::InvalidParameter(format!("lambda {lambda} must lie in (0, 2]")));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {r} must be positive")));
    }
    let shape = dom.shape();
    let h = shape.h;
    let k = shape
        .locate(w)
        .ok_or_else(|| Error::InvalidParameter(format!("point {w:?} lies outside the grid")))?;
    let (ci, cj) = shape.coords(k);
    let (mut inside, mut outside) = (false, false);
    for dj in -1..=1isize {
        for di in -1..=1isize {
            if dom.contains_ij(ci as isize + di, cj as isize + dj) {
                inside = true;
            } else {
                outside = true;
            }
        }
    }
    if !(inside && outside) {
        return Err(Error::InvalidParameter(format!("point {w:?} is not within h of the boundary")));
    }
    let base = [(shape.origin[0] / h - 0.5).round() as i64, (shape.origin[1] / h - 0.5).round() as i64];
    let imin = ((w[0] - r) / h).floor() as i64 - 1;
    let imax = ((w[0] + r) / h).ceil() as i64 + 1;
    let jmin = ((w[1] - r) / h).floor() as i64 - 1;
    let jmax = ((w[1] + r) / h).ceil() as i64 + 1;
    let mut level = 0;
    while ((imin + SHIFT) >> level) != ((imax + SHIFT) >> level) || ((jmin + SHIFT) >> level) != ((jmax + SHIFT) >> level)
    {
        level += 1;
    }
    let side = 1i64 << level;
    let i0 = ((imin + SHIFT) >> level << level) - SHIFT;
    let j0 = ((jmin + SHIFT) >> level << level) - SHIFT;
    let mut counter = Counter { dom, ball: Ball::new(w, r), base, h, lambda, cells: 0 };
    let content = counter.cost(i0, j0, side);
    let ratio = content / r.powf(lambda);
    Ok(Thickness {
        lambda,
        radius: r,
        dyadic_content: content,
        ratio,
        certified_ratio: ratio / (4.0 * 2f64.powf(lambda)),
        complement_cells: counter.cells,
    })
}
