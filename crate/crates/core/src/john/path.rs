use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{dist, DistanceField, GridDomain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JohnOptions {
    /// Bisection stops when the bracket on `c` is narrower than this.
    pub resolution: f64,
    /// Candidate samples are cells with `ρ ≤ near_boundary · h`.
    pub near_boundary: f64,
    pub max_samples: usize,
}

impl Default for JohnOptions {
    fn default() -> Self {
        Self { resolution: 1e-3, near_boundary: 3.0, max_samples: 512 }
    }
}

/// Best admissible constant for one sample and the path that realizes it.
#[derive(Debug, Clone, Serialize)]
pub struct SampleResult {
    pub x: [f64; 2],
    pub cell: usize,
    pub c_best: f64,
    /// Cells of the witness path from the sample to the center.
    pub path: Vec<usize>,
    /// Arclength from the sample at each path vertex.
    pub arclength: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct JohnAssessment {
    pub center: [f64; 2],
    pub center_cell: usize,
    pub samples: Vec<SampleResult>,
    /// `min_x c_best(x)`
    pub c_hat: f64,
    pub worst_sample: usize,
}

/// Near-boundary cells (`ρ ≤ 3h` by default) thinned by farthest-point
/// sampling to at most `max_samples`, starting from the first candidate.
pub fn default_samples(dom: &GridDomain, rho: &DistanceField, opts: &JohnOptions) -> Vec<[f64; 2]> {
    let h = dom.h();
    let cand: Vec<usize> =
        dom.cells().iter().copied().filter(|&k| rho.at(k) <= opts.near_boundary * h + 1e-12).collect();
    if cand.len() <= opts.max_samples {
        return cand.iter().map(|&k| dom.center(k)).collect();
    }
    let pts: Vec<[f64; 2]> = cand.iter().map(|&k| dom.center(k)).collect();
    let mut chosen = vec![0usize];
    let mut d: Vec<f64> = pts.iter().map(|p| dist(*p, pts[0])).collect();
    while chosen.len() < opts.max_samples {
        let (far, _) = d.iter().enumerate().fold((0, -1.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        chosen.push(far);
        for (i, p) in pts.iter().enumerate() {
            d[i] = d[i].min(dist(*p, pts[far]));
        }
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| pts[i]).collect()
}

#[derive(Clone, Copy)]
struct Node {
    f: f64,
    g: f64,
    cell: usize,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f).then_with(|| o.g.total_cmp(&self.g)).then_with(|| o.cell.cmp(&self.cell))
    }
}

const NONE: usize = usize::MAX;

/// Shortest admissible path from `start` to `goal` for a given `c`: a vertex
/// `y` reached at arclength `s` is admissible iff `ρ(y) ≥ c s`. Because
/// admissibility only gets harder as `s` grows, shortest arrivals dominate and
/// an A* search with the Euclidean heuristic is exact.
fn admissible_path(
    dom: &GridDomain,
    rho: &DistanceField,
    start: usize,
    goal: usize,
    c: f64,
    best: &mut Vec<f64>,
    prev: &mut Vec<usize>,
    touched: &mut Vec<usize>,
) -> Option<Vec<usize>> {
    for &k in touched.iter() {
        best[k] = f64::INFINITY;
        prev[k] = NONE;
    }
    touched.clear();
    let shape = *dom.shape();
    let h = shape.h;
    let goal_p = dom.center(goal);
    let heuristic = |k: usize| dist(dom.center(k), goal_p);
    let mut heap = BinaryHeap::new();
    best[start] = 0.0;
    touched.push(start);
    heap.push(Node { f: heuristic(start), g: 0.0, cell: start });
    let diag = h * std::f64::consts::SQRT_2;
    let nx = shape.nx as isize;
    while let Some(Node { g, cell, .. }) = heap.pop() {
        if g > best[cell] {
            continue;
        }
        if cell == goal {
            let mut path = vec![goal];
            let mut k = goal;
            while prev[k] != NONE {
                k = prev[k];
                path.push(k);
            }
            path.reverse();
            return Some(path);
        }
        let (i, j) = shape.coords(cell);
        for (di, dj) in STEPS {
            if !step_allowed(dom, i, j, di, dj) {
                continue;
            }
            let step = if di != 0 && dj != 0 { diag } else { h };
            let n = (cell as isize + dj * nx + di) as usize;
            let s = g + step;
            if s < best[n] && rho.at(n) >= c * s {
                if best[n].is_infinite() {
                    touched.push(n);
                }
                best[n] = s;
                prev[n] = cell;
                heap.push(Node { f: s + heuristic(n), g: s, cell: n });
            }
        }
    }
    None
}

/// Quasihyperbolic geodesic between two cells: 8-connected Dijkstra with edge
/// weight `|a - b| (1/ρ(a) + 1/ρ(b)) / 2`.
pub fn quasihyperbolic_path(dom: &GridDomain, rho: &DistanceField, from: usize, to: usize) -> Option<Vec<usize>> {
    let shape = *dom.shape();
    let h = shape.h;
    let mut best = vec![f64::INFINITY; shape.len()];
    let mut prev = vec![NONE; shape.len()];
    let mut heap = BinaryHeap::new();
    best[from] = 0.0;
    heap.push(Node { f: 0.0, g: 0.0, cell: from });
    let nx = shape.nx as isize;
    while let Some(Node { g, cell, .. }) = heap.pop() {
        if g > best[cell] {
            continue;
        }
        if cell == to {
            let mut path = vec![to];
            let mut k = to;
            while prev[k] != NONE {
                k = prev[k];
                path.push(k);
            }
            path.reverse();
            return Some(path);
        }
        let (i, j) = shape.coords(cell);
        for (di, dj) in STEPS {
            if !step_allowed(dom, i, j, di, dj) {
                continue;
            }
            let n = (cell as isize + dj * nx + di) as usize;
            let len = if di != 0 && dj != 0 { h * std::f64::consts::SQRT_2 } else { h };
            let w = g + 0.5 * len * (1.0 / rho.at(cell) + 1.0 / rho.at(n));
            if w < best[n] {
                best[n] = w;
                prev[n] = cell;
                heap.push(Node { f: w, g: w, cell: n });
            }
        }
    }
    None
}

const STEPS: [(isize, isize); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// 8-neighbour move that stays in the domain; diagonal moves must not cut a
/// corner of the complement.
fn step_allowed(dom: &GridDomain, i: usize, j: usize, di: isize, dj: isize) -> bool {
    let (i, j) = (i as isize, j as isize);
    dom.contains_ij(i + di, j + dj)
        && (di == 0 || dj == 0 || (dom.contains_ij(i + di, j) && dom.contains_ij(i, j + dj)))
}

pub(crate) fn arclengths(dom: &GridDomain, path: &[usize]) -> Vec<f64> {
    let mut t = Vec::with_capacity(path.len());
    let mut s = 0.0;
    for (i, &k) in path.iter().enumerate() {
        if i > 0 {
            s += dist(dom.center(path[i - 1]), dom.center(k));
        }
        t.push(s);
    }
    t
}

/// For each sample, the largest `c ∈ (0, 1]` (to `opts.resolution`) for which an
/// admissible 8-connected path reaches the center, by bisection.
pub fn john_constant(
    dom: &GridDomain,
    rho: &DistanceField,
    x0: [f64; 2],
    samples: &[[f64; 2]],
    opts: &JohnOptions,
) -> Result<JohnAssessment> {
    let shape = *dom.shape();
    if !rho.shape().compatible(&shape) {
        return Err(Error::GridMismatch);
    }
    let center = shape
        .locate(x0)
        .filter(|&k| dom.contains(k))
        .ok_or_else(|| Error::InvalidParameter(format!("center {x0:?} is not in the domain")))?;
    if rho.at(center) < 2.0 * shape.h - 1e-12 {
        return Err(Error::InvalidParameter("center must satisfy rho >= 2h".into()));
    }
    let cells = samples
        .iter()
        .map(|&p| {
            shape
                .locate(p)
                .filter(|&k| dom.contains(k))
                .ok_or_else(|| Error::InvalidParameter(format!("sample {p:?} is not in the domain")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let results: Vec<Result<SampleResult>> = cells
        .par_iter()
        .enumerate()
        .map_init(
            || (vec![f64::INFINITY; shape.len()], vec![NONE; shape.len()], Vec::new()),
            |(best, prev, touched), (idx, &x)| {
                let mut run = |c: f64| admissible_path(dom, rho, x, center, c, best, prev, touched);
                let Some(mut witness) = run(1e-9) else {
                    return Err(Error::NoPath { sample: idx });
                };
                let mut lo = 0.0;
                let d = dist(dom.center(x), dom.center(center));
                let mut hi = if d > 0.0 { (rho.at(center) / d).min(1.0) } else { 1.0 };
                if let Some(p) = run(hi) {
                    lo = hi;
                    witness = p;
                } else {
                    while hi - lo > opts.resolution {
                        let mid = 0.5 * (lo + hi);
                        match run(mid) {
                            Some(p) => {
                                lo = mid;
                                witness = p;
                            }
                            None => hi = mid,
                        }
                    }
                }
                // the best certified constant of the witness itself
                let t = arclengths(dom, &witness);
                let c_path = witness
                    .iter()
                    .zip(&t)
                    .filter(|(_, &s)| s > 0.0)
                    .map(|(&k, &s)| rho.at(k) / s)
                    .fold(f64::INFINITY, f64::min);
                let c_best = if c_path.is_finite() { c_path.min(1.0).max(lo) } else { 1.0 };
                Ok(SampleResult { x: dom.center(x), cell: x, c_best, path: witness, arclength: t })
            },
        )
        .collect();
    let samples: Vec<SampleResult> = results.into_iter().collect::<Result<_>>()?;
    let (worst_sample, c_hat) = samples
        .iter()
        .enumerate()
        .fold((0, 1.0f64), |acc, (i, s)| if s.c_best < acc.1 { (i, s.c_best) } else { acc });
    Ok(JohnAssessment { center: dom.center(center), center_cell: center, samples, c_hat, worst_sample })
}

/// Independent re-check of a witness: consecutive vertices are 8-neighbours
/// inside the domain and `ρ(γ(t)) ≥ c t` at every vertex, with `t` recomputed
/// from the vertex coordinates.
pub fn verify_witness(dom: &GridDomain, rho: &DistanceField, sample: &SampleResult, center_cell: usize) -> bool {
    let path = &sample.path;
    if path.first() != Some(&sample.cell) || path.last() != Some(&center_cell) {
        return false;
    }
    let shape = dom.shape();
    let h = dom.h();
    let mut t = 0.0f64;
    for w in 0..path.len() {
        let k = path[w];
        if !dom.contains(k) {
            return false;
        }
        if w > 0 {
            let (a, b) = (shape.center(path[w - 1]), shape.center(k));
            let dx = (a[0] - b[0]).abs();
            let dy = (a[1] - b[1]).abs();
            if dx > 1.5 * h || dy > 1.5 * h || dx + dy < 0.5 * h {
                return false;
            }
            t += (dx * dx + dy * dy).sqrt();
        }
        // relative slack for the rounding in the recomputed arclength
        if rho.at(k) < sample.c_best * t * (1.0 - 1e-12) {
            return false;
        }
    }
    true
}

/// Witness paths as CSV polylines: `sample,vertex,x,y,t,rho`.
pub fn write_paths_csv<W: Write>(a: &JohnAssessment, rho: &DistanceField, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["sample", "vertex", "x", "y", "t", "rho"])?;
    for (i, s) in a.samples.iter().enumerate() {
        for (v, (&k, &t)) in s.path.iter().zip(&s.arclength).enumerate() {
            let p = rho.shape().center(k);
            out.write_record([
                i.to_string(),
                v.to_string(),
                p[0].to_string(),
                p[1].to_string(),
                t.to_string(),
                rho.at(k).to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
