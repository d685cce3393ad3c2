use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{rasterize_predicate, BoundingBox, GridDomain};

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

/// Analytic domain families. JSON form: `{"family": "power_cusp", "params":
/// {"alpha": 3}}`; parameters with defaults may be omitted but `params`
/// itself must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Family {
    Disk {
        #[serde(default = "one")]
        radius: f64,
    },
    /// `(0, side)²`
    Square {
        #[serde(default = "one")]
        side: f64,
    },
    Annulus {
        #[serde(default = "half")]
        inner: f64,
        #[serde(default = "one")]
        outer: f64,
    },
    /// `{0 < x < 1, |y| < x^α}`
    PowerCusp { alpha: f64 },
    /// Square rooms of side 1/2 in a row, joined by corridors of length 1/4
    /// with the given widths.
    RoomsCorridors { widths: Vec<f64> },
    /// Disk of radius `radius` without the cell whose corner is the origin.
    PuncturedDisk {
        #[serde(default = "one")]
        radius: f64,
    },
    /// Disk of radius 2 minus a self-similar Cantor set on `[0,1] × {0}` of
    /// box dimension `2 - p`.
    CantorSlit { p: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Disk { .. } => "disk",
            Family::Square { .. } => "square",
            Family::Annulus { .. } => "annulus",
            Family::PowerCusp { .. } => "power_cusp",
            Family::RoomsCorridors { .. } => "rooms_corridors",
            Family::PuncturedDisk { .. } => "punctured_disk",
            Family::CantorSlit { .. } => "cantor_slit",
        }
    }

    /// Stable `key=value` rendering of the parameters, `;`-separated.
    pub fn params_label(&self) -> String {
        match self {
            Family::Disk { radius } | Family::PuncturedDisk { radius } => format!("radius={radius}"),
            Family::Square { side } => format!("side={side}"),
            Family::Annulus { inner, outer } => format!("inner={inner};outer={outer}"),
            Family::PowerCusp { alpha } => format!("alpha={alpha}"),
            Family::RoomsCorridors { widths } => {
                let w: Vec<String> = widths.iter().map(|w| w.to_string()).collect();
                format!("widths={}", w.join("|"))
            }
            Family::CantorSlit { p } => format!("p={p}"),
        }
    }

    /// Area of the analytic domain.
    pub fn area(&self) -> f64 {
        use std::f64::consts::PI;
        match self {
            Family::Disk { radius } | Family::PuncturedDisk { radius } => PI * radius * radius,
            Family::Square { side } => side * side,
            Family::Annulus { inner, outer } => PI * (outer * outer - inner * inner),
            Family::PowerCusp { alpha } => 2.0 / (alpha + 1.0),
            Family::RoomsCorridors { widths } => 0.25 * (widths.len() + 1) as f64 + 0.25 * widths.iter().sum::<f64>(),
            Family::CantorSlit { .. } => 4.0 * PI,
        }
    }

    fn validate(&self, h: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match self {
            Family::Disk { radius } | Family::PuncturedDisk { radius } if !(*radius > 0.0) => {
                bad(format!("radius {radius} must be positive"))
            }
            Family::Square { side } if !(*side > 0.0) => bad(format!("side {side} must be positive")),
            Family::Annulus { inner, outer } if !(*inner > 0.0 && inner < outer) => {
                bad(format!("annulus needs 0 < inner < outer, got {inner}, {outer}"))
            }
            Family::PowerCusp { alpha } if !(*alpha >= 1.0) => bad(format!("alpha {alpha} must be at least 1")),
            Family::RoomsCorridors { widths } => {
                match widths.iter().find(|&&w| !(w >= 2.0 * h && w <= 0.5)) {
                    Some(w) => bad(format!("corridor width {w} must lie in [2h, 1/2] with h = {h}")),
                    None => Ok(()),
                }
            }
            Family::CantorSlit { p } if !(*p > 1.0 && *p <= 2.0) => bad(format!("cantor_slit p {p} must lie in (1, 2]")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub family: Family,
    pub h: f64,
}

impl DomainSpec {
    pub fn new(family: Family, h: f64) -> Self {
        Self { family, h }
    }

    pub fn tag(&self) -> String {
        format!("{}({})", self.family.name(), self.family.params_label())
    }
}

/// Closed intervals of the Cantor set's generation whose length first drops
/// below `h`. Each interval keeps its two end pieces of relative length
/// `r = 2^{-1/(2-p)}`; `p = 2` degenerates to the two endpoints.
pub fn cantor_intervals(p: f64, h: f64) -> Vec<[f64; 2]> {
    if p >= 2.0 {
        return vec![[0.0, 0.0], [1.0, 1.0]];
    }
    let r = 2f64.powf(-1.0 / (2.0 - p));
    let mut level = vec![[0.0, 1.0]];
    while level[0][1] - level[0][0] >= h && level.len() < 1 << 20 {
        level = level
            .iter()
            .flat_map(|&[a, b]| {
                let len = r * (b - a);
                [[a, a + len], [b - len, b]]
            })
            .collect();
    }
    level
}

pub fn generate(spec: &DomainSpec) -> Result<GridDomain> {
    let h = spec.h;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidSpec(format!("spacing {h} must be positive")));
    }
    spec.family.validate(h)?;
    let tag = Some(spec.tag());
    match &spec.family {
        Family::Disk { radius } => {
            let r = *radius;
            rasterize_predicate(bbox(-r, -r, r, r), h, tag, |x, y| x * x + y * y < r * r)
        }
        Family::Square { side } => {
            let s = *side;
            rasterize_predicate(bbox(0.0, 0.0, s, s), h, tag, |x, y| x > 0.0 && x < s && y > 0.0 && y < s)
        }
        Family::Annulus { inner, outer } => {
            let (a, b) = (*inner, *outer);
            rasterize_predicate(bbox(-b, -b, b, b), h, tag, |x, y| {
                let r2 = x * x + y * y;
                r2 > a * a && r2 < b * b
            })
        }
        Family::PowerCusp { alpha } => {
            let a = *alpha;
            rasterize_predicate(bbox(0.0, -1.0, 1.0, 1.0), h, tag, |x, y| x > 0.0 && x < 1.0 && y.abs() < x.powf(a))
        }
        Family::RoomsCorridors { widths } => {
            let n = widths.len();
            let len = 0.75 * n as f64 + 0.5;
            let widths = widths.clone();
            rasterize_predicate(bbox(0.0, -0.25, len, 0.25), h, tag, move |x, y| {
                if !(x > 0.0 && x < len && y.abs() < 0.25) {
                    return false;
                }
                let k = (x / 0.75).floor() as usize;
                let local = x - 0.75 * k as f64;
                local < 0.5 || (k < n && y.abs() < 0.5 * widths[k])
            })
        }
        Family::PuncturedDisk { radius } => {
            let r = *radius;
            let disk = rasterize_predicate(bbox(-r, -r, r, r), h, tag, |x, y| x * x + y * y < r * r)?;
            let hole = disk
                .shape()
                .locate([0.5 * h, 0.5 * h])
                .filter(|&k| disk.contains(k))
                .ok_or_else(|| Error::InvalidSpec("disk too small to puncture".into()))?;
            disk.without_cells(&[hole])
        }
        Family::CantorSlit { p } => {
            let disk = rasterize_predicate(bbox(-2.0, -2.0, 2.0, 2.0), h, tag, |x, y| x * x + y * y < 4.0)?;
            let shape = *disk.shape();
            let mut removed = Vec::new();
            for [a, b] in cantor_intervals(*p, h) {
                // cells [ih, (i+1)h) × [0, h) meeting [a, b] × {0}
                let i0 = (a / h).floor() as i64;
                let i1 = ((b / h).floor() as i64).max(i0);
                for i in i0..=i1 {
                    if let Some(k) = shape.locate([(i as f64 + 0.5) * h, 0.5 * h]) {
                        removed.push(k);
                    }
                }
            }
            removed.sort_unstable();
            removed.dedup();
            disk.without_cells(&removed)
        }
    }
}

fn bbox(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox {
    BoundingBox { min: [x0, y0], max: [x1, y1] }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_json_round_trip() {
        let s: DomainSpec = serde_json::from_str(r#"{"family":"power_cusp","params":{"alpha":3},"h":0.01}"#).unwrap();
        assert_eq!(s.family, Family::PowerCusp { alpha: 3.0 });
        let d: DomainSpec = serde_json::from_str(r#"{"family":"disk","params":{},"h":0.5}"#).unwrap();
        assert_eq!(d.family, Family::Disk { radius: 1.0 });
        let back: DomainSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn cantor_dimension_matches_p() {
        // N(h) ~ h^{-(2-p)}: count intervals at two depths
        let p = 1.5;
        let a = cantor_intervals(p, 1e-2).len() as f64;
        let b = cantor_intervals(p, 1e-4).len() as f64;
        let la = cantor_intervals(p, 1e-2)[0];
        let lb = cantor_intervals(p, 1e-4)[0];
        let dim = (b / a).ln() / ((la[1] - la[0]) / (lb[1] - lb[0])).ln();
        assert!((dim - 0.5).abs() < 1e-9, "{dim}");
    }

    #[test]
    fn invalid_params_are_rejected() {
        for f in [
            Family::PowerCusp { alpha: 0.5 },
            Family::CantorSlit { p: 1.0 },
            Family::RoomsCorridors { widths: vec![0.01] },
            Family::Annulus { inner: 1.0, outer: 0.5 },
        ] {
            assert!(matches!(generate(&DomainSpec::new(f, 1.0 / 64.0)), Err(Error::InvalidSpec(_))));
        }
    }
}
