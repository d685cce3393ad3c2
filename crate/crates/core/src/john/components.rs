use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{dist, label_components, Ball, GridDomain};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentDiameter {
    pub component_id: usize,
    pub cells: usize,
    pub diam: f64,
    pub ratio: f64,
}

/// Components of `Ω ∖ B(w, d)` that stay away from `b0`, with their diameters
/// measured between cell centers. Components are numbered in raster order of
/// their first cell; those meeting `b0` are dropped but keep their numbers.
pub fn component_diameter_test(dom: &GridDomain, b0: &Ball, w: [f64; 2], d: f64) -> Result<Vec<ComponentDiameter>> {
    if !(d > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {d} must be positive")));
    }
    if dom.cells_in_ball(b0).is_empty() {
        return Err(Error::InvalidParameter("B0 contains no cell of the domain".into()));
    }
    let shape = dom.shape();
    let cut = Ball::new(w, d);
    let mask: Vec<bool> = (0..shape.len()).map(|k| dom.contains(k) && !cut.contains(shape.center(k))).collect();
    let (label, count) = label_components(shape, &mask);
    let mut members: Vec<Vec<[f64; 2]>> = vec![Vec::new(); count];
    let mut meets = vec![false; count];
    for (k, &l) in label.iter().enumerate() {
        if l == usize::MAX {
            continue;
        }
        let p = shape.center(k);
        members[l].push(p);
        if b0.contains(p) {
            meets[l] = true;
        }
    }
    Ok(members
        .into_iter()
        .enumerate()
        .filter(|(l, _)| !meets[*l])
        .map(|(l, pts)| {
            let diam = diameter(&pts);
            ComponentDiameter { component_id: l, cells: pts.len(), diam, ratio: diam / d }
        })
        .collect())
}

/// Largest pairwise distance, via the convex hull.
fn diameter(pts: &[[f64; 2]]) -> f64 {
    let hull = convex_hull(pts);
    let mut best = 0.0f64;
    for (i, a) in hull.iter().enumerate() {
        for b in &hull[i + 1..] {
            best = best.max(dist(*a, *b));
        }
    }
    best
}

fn convex_hull(pts: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p = pts.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_diameter_matches_brute_force() {
        let pts: Vec<[f64; 2]> = (0..40).map(|i| {
            let t = i as f64 * 0.7;
            [t.cos() * (1.0 + 0.3 * (3.0 * t).sin()), t.sin()]
        }).collect();
        let mut brute = 0.0f64;
        for a in &pts {
            for b in &pts {
                brute = brute.max(dist(*a, *b));
            }
        }
        assert!((diameter(&pts) - brute).abs() < 1e-15);
        assert_eq!(diameter(&[[1.0, 1.0]]), 0.0);
    }
}
