use serde::Serialize;

use crate::grid::{dist, label_components, Ball, GridDomain, ScalarField};

/// Which cutoff of the component-diameter argument a trial function is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "claim")]
pub enum TrialKind {
    /// 0 off `T(d)`, 1 on `T(2d)`, ramp `dist(x, B(w,d))/d` between.
    Claim1,
    /// 0 off `T(r_{j−1})`, 1 on `T(r_j)`, linear ramp in between.
    Claim2 { j: usize, r_prev: f64, r: f64 },
}

#[derive(Debug, Clone)]
pub struct TrialFunction {
    /// Index among the components of `Ω ∖ B(w,d)` that miss `B0`.
    pub component: usize,
    pub kind: TrialKind,
    pub field: ScalarField,
}

/// The radii `r_0 = 2d < r_1 < …` with `|T(r_j)| = 2^{-j} |T(2d)|` (in cells)
/// for one component, together with the cell counts achieved.
#[derive(Debug, Clone, Serialize)]
pub struct RadiiSequence {
    pub component: usize,
    pub t2d_cells: usize,
    pub radii: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Cutoff functions from the proof that a Poincaré inequality bounds the
/// diameter of components of `Ω ∖ B(w,d)` not meeting `B0`. Components with
/// empty `T(2d)` contribute nothing.
pub fn proof_trial_functions(
    dom: &GridDomain,
    w: [f64; 2],
    d: f64,
    b0: &Ball,
) -> (Vec<TrialFunction>, Vec<RadiiSequence>) {
    let shape = *dom.shape();
    let r_of = |k: usize| dist(dom.center(k), w);
    let mask: Vec<bool> = (0..shape.len()).map(|k| dom.contains(k) && r_of(k) >= d).collect();
    let (labels, count) = label_components(&shape, &mask);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for &k in dom.cells() {
        if labels[k] != usize::MAX {
            members[labels[k]].push(k);
        }
    }
    let mut trials = Vec::new();
    let mut sequences = Vec::new();
    let mut comp_index = 0;
    for cells in members {
        if cells.iter().any(|&k| b0.contains(dom.center(k))) {
            continue;
        }
        let component = comp_index;
        comp_index += 1;
        let mut radii: Vec<f64> = cells.iter().map(|&k| r_of(k)).collect();
        let t2d = radii.iter().filter(|&&r| r >= 2.0 * d).count();
        if t2d == 0 {
            continue;
        }
        let mut f = ScalarField::zeros(shape);
        for &k in &cells {
            let r = r_of(k);
            f.values[k] = if r >= 2.0 * d { 1.0 } else { (r - d) / d };
        }
        trials.push(TrialFunction { component, kind: TrialKind::Claim1, field: f });

        radii.sort_by(|a, b| b.total_cmp(a));
        let mut seq = RadiiSequence { component, t2d_cells: t2d, radii: vec![2.0 * d], counts: vec![t2d] };
        let mut j = 1;
        loop {
            let target = (t2d as f64 * 0.5f64.powi(j as i32)).round() as usize;
            if target == 0 {
                break;
            }
            let r = radii[target - 1];
            let r_prev = *seq.radii.last().unwrap();
            if r > r_prev {
                let achieved = radii.iter().filter(|&&x| x >= r).count();
                let mut f = ScalarField::zeros(shape);
                for &k in &cells {
                    let rk = r_of(k);
                    if rk >= r {
                        f.values[k] = 1.0;
                    } else if rk > r_prev {
                        f.values[k] = (rk - r_prev) / (r - r_prev);
                    }
                }
                trials.push(TrialFunction { component, kind: TrialKind::Claim2 { j, r_prev, r }, field: f });
                seq.radii.push(r);
                seq.counts.push(achieved);
            }
            j += 1;
        }
        sequences.push(seq);
    }
    (trials, sequences)
}
