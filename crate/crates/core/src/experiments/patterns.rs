use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dist, DistanceField, GridDomain, ScalarField};

/// Built-in right-hand sides; every pattern is projected to mean zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pattern", rename_all = "snake_case")]
pub enum RhsPattern {
    /// `sin(kπx) sin(kπy)`
    Checkerboard { k: u32 },
    /// Unit-mass indicator of `B(source, radius)` minus that of `B(sink, radius)`.
    Dipole { source: [f64; 2], sink: [f64; 2], radius: f64 },
    /// Independent uniform values in `[-1/2, 1/2)` per cell.
    Noise { seed: u64 },
}

pub fn rhs(dom: &GridDomain, pattern: &RhsPattern) -> Result<ScalarField> {
    let f = match pattern {
        RhsPattern::Checkerboard { k } => {
            let w = *k as f64 * std::f64::consts::PI;
            ScalarField::from_fn(dom, |p| (w * p[0]).sin() * (w * p[1]).sin())
        }
        RhsPattern::Dipole { source, sink, radius } => {
            let mut f = ScalarField::zeros(*dom.shape());
            for (c, sign) in [(*source, 1.0), (*sink, -1.0)] {
                let cells = bump_cells(dom, c, *radius)?;
                let w = sign / (cells.len() as f64 * dom.h() * dom.h());
                for k in cells {
                    f.values[k] += w;
                }
            }
            f
        }
        RhsPattern::Noise { seed } => noise(dom, *seed),
    };
    Ok(f.mean_zero(dom))
}

/// Domain cells within `radius` of `c`, or the cell containing `c` if none.
fn bump_cells(dom: &GridDomain, c: [f64; 2], radius: f64) -> Result<Vec<usize>> {
    let cells: Vec<usize> = dom.cells().iter().copied().filter(|&k| dist(dom.center(k), c) <= radius).collect();
    if !cells.is_empty() {
        return Ok(cells);
    }
    dom.shape()
        .locate(c)
        .filter(|&k| dom.contains(k))
        .map(|k| vec![k])
        .ok_or_else(|| Error::InvalidParameter(format!("point {c:?} is not in the domain")))
}

fn noise(dom: &GridDomain, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = ScalarField::zeros(*dom.shape());
    for &k in dom.cells() {
        f.values[k] = rng.random::<f64>() - 0.5;
    }
    f
}

/// Deterministic mean-zero batch alternating noise fields and dipoles. Dipole
/// sources are spread by farthest-point sampling (so extremities such as cusp
/// tips are hit first), each with radius `ρ(source)/2` and its sink at the
/// deepest cell.
pub fn rhs_batch(dom: &GridDomain, rho: &DistanceField, count: usize, seed: u64) -> Vec<ScalarField> {
    let sink = dom.center(rho.argmax());
    let sources = farthest_points(dom, sink, count.div_ceil(2));
    (0..count)
        .map(|i| {
            let pattern = if i % 2 == 0 {
                RhsPattern::Noise { seed: seed.wrapping_add(i as u64) }
            } else {
                let k = sources[i / 2];
                RhsPattern::Dipole { source: dom.center(k), sink, radius: 0.5 * rho.at(k) }
            };
            rhs(dom, &pattern).expect("batch centers are domain cells")
        })
        .collect()
}

/// Cells chosen greedily to be far from `start` and from each other.
fn farthest_points(dom: &GridDomain, start: [f64; 2], count: usize) -> Vec<usize> {
    let mut d: Vec<f64> = dom.cells().iter().map(|&k| dist(dom.center(k), start)).collect();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count.min(dom.num_cells()) {
        let (i, _) = d.iter().enumerate().fold((0, -1.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let k = dom.cells()[i];
        out.push(k);
        let p = dom.center(k);
        for (j, &c) in dom.cells().iter().enumerate() {
            d[j] = d[j].min(dist(dom.center(c), p));
        }
    }
    out
}
