use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::path::{arclengths, quasihyperbolic_path, JohnAssessment};
use crate::grid::{dist, Ball, DistanceField, GridDomain};

/// Parameters at which a candidate curve violated the separation property.
#[derive(Debug, Clone, Serialize)]
pub struct SeparationFailure {
    pub t: f64,
    pub ball: Ball,
    /// A point of `γ([0,t]) ∖ B` connected to the center in `Ω ∖ ∂B`.
    pub escaping: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleSeparation {
    pub x: [f64; 2],
    pub pass: bool,
    pub checked: usize,
    pub failure: Option<SeparationFailure>,
}

/// Candidate curves from each sample to the center.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curves {
    /// Quasihyperbolic geodesics, which stay as far from the boundary as the
    /// geometry allows.
    #[default]
    Quasihyperbolic,
    /// The shortest admissible paths recorded by the John search; these hug
    /// the admissibility constraint and fail more often.
    Witness,
}

/// Outcome of the separation test along one family of candidate curves. The
/// curves are a heuristic choice, so a failure does not disprove the property
/// for some other family; a pass is re-checkable.
#[derive(Debug, Clone, Serialize)]
pub struct SeparationReport {
    pub constant_tested: f64,
    pub pass: bool,
    pub curves: Curves,
    pub samples: Vec<SampleSeparation>,
}

impl SeparationReport {
    pub fn first_failure(&self) -> Option<&SeparationFailure> {
        self.samples.iter().find_map(|s| s.failure.as_ref())
    }
}

/// Parameters visited along each curve.
const MAX_CHECKS: usize = 64;

/// Cells whose closed square meets the circle `|p - c| = r`.
fn meets_sphere(center: [f64; 2], h: f64, ball: &Ball) -> bool {
    let dx = (center[0] - ball.center[0]).abs();
    let dy = (center[1] - ball.center[1]).abs();
    let nx = (dx - 0.5 * h).max(0.0);
    let ny = (dy - 0.5 * h).max(0.0);
    let near = (nx * nx + ny * ny).sqrt();
    let far = ((dx + 0.5 * h).powi(2) + (dy + 0.5 * h).powi(2)).sqrt();
    near <= ball.radius && ball.radius <= far
}

struct Flood {
    stamp: Vec<u32>,
    generation: u32,
    stack: Vec<usize>,
}

impl Flood {
    /// Marks the component of `start` in `Ω ∖ ∂B`; the start cell is
    /// always included.
    fn fill(&mut self, dom: &GridDomain, ball: &Ball, start: usize) {
        self.generation += 1;
        let g = self.generation;
        let shape = dom.shape();
        let h = shape.h;
        self.stamp[start] = g;
        self.stack.push(start);
        while let Some(k) = self.stack.pop() {
            for n in shape.neighbors4(k) {
                if dom.contains(n) && self.stamp[n] != g && !meets_sphere(shape.center(n), h, ball) {
                    self.stamp[n] = g;
                    self.stack.push(n);
                }
            }
        }
    }

    fn reached(&self, k: usize) -> bool {
        self.stamp[k] == self.generation
    }
}

/// Whether an escaping vertex is connected to the center. A vertex on the
/// removed band counts as connected if any neighbour outside the ball is.
fn escapes(dom: &GridDomain, flood: &Flood, ball: &Ball, k: usize) -> bool {
    let shape = dom.shape();
    if flood.reached(k) {
        return true;
    }
    if !meets_sphere(shape.center(k), shape.h, ball) {
        return false;
    }
    shape
        .neighbors4(k)
        .any(|n| dom.contains(n) && !ball.contains(shape.center(n)) && flood.reached(n))
}

pub fn separation_check(
    dom: &GridDomain,
    rho: &DistanceField,
    assessment: &JohnAssessment,
    c_s: f64,
    curves: Curves,
) -> SeparationReport {
    let shape = dom.shape();
    let center = assessment.center_cell;
    let samples: Vec<SampleSeparation> = assessment
        .samples
        .par_iter()
        .map_init(
            || Flood { stamp: vec![0; shape.len()], generation: 0, stack: Vec::new() },
            |flood, s| {
                let qh;
                let (path, arclength) = match curves {
                    Curves::Witness => (&s.path, &s.arclength),
                    Curves::Quasihyperbolic => {
                        let p = quasihyperbolic_path(dom, rho, s.cell, center)
                            .expect("John witness exists, so the center is reachable");
                        let t = arclengths(dom, &p);
                        qh = (p, t);
                        (&qh.0, &qh.1)
                    }
                };
                let n = path.len();
                let stride = n.div_ceil(MAX_CHECKS).max(1);
                let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
                if idx.last() != Some(&(n - 1)) {
                    idx.push(n - 1);
                }
                let mut checked = 0;
                for &i in &idx {
                    checked += 1;
                    let here = shape.center(path[i]);
                    let ball = Ball::new(here, c_s * rho.at(path[i]));
                    let outside: Vec<usize> =
                        path[..=i].iter().copied().filter(|&k| dist(shape.center(k), here) >= ball.radius).collect();
                    if outside.is_empty() {
                        continue;
                    }
                    flood.fill(dom, &ball, center);
                    if let Some(&bad) = outside.iter().find(|&&k| escapes(dom, flood, &ball, k)) {
                        return SampleSeparation {
                            x: s.x,
                            pass: false,
                            checked,
                            failure: Some(SeparationFailure {
                                t: arclength[i],
                                ball,
                                escaping: shape.center(bad),
                            }),
                        };
                    }
                }
                SampleSeparation { x: s.x, pass: true, checked, failure: None }
            },
        )
        .collect();
    SeparationReport {
        constant_tested: c_s,
        pass: samples.iter().all(|s| s.pass),
        curves,
        samples,
    }
}
