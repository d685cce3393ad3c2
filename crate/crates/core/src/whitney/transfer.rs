use super::tree::WhitneyTree;
use crate::error::{Error, Result};
use crate::grid::{compensated_sum, GridShape, ScalarField};

/// `T_j f`: values on the sorted cells of the dilated region `σQ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub cube: usize,
    pub cells: Vec<usize>,
    pub values: Vec<f64>,
}

impl Piece {
    /// `Σ values` (the integral divided by `h²`).
    pub fn sum(&self) -> f64 {
        compensated_sum(self.values.iter().copied())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    fn slot(&self, k: usize) -> usize {
        self.cells.binary_search(&k).expect("cell outside the piece's region")
    }
}

#[derive(Debug, Clone)]
pub struct RhsDecomposition {
    shape: GridShape,
    pieces: Vec<Piece>,
    f_abs_sum: f64,
}

/// Splits a mean-zero `f` into pieces `T_j f` supported in `σQ_j`, each with
/// zero mean, summing to `f`. Starting from `f χ_{Q_j}`, every non-root cube
/// hands its current mass to its parent through a bump that is constant on
/// `σQ_j ∩ σQ_parent`, children before parents.
pub fn decompose_rhs(f: &ScalarField, tree: &WhitneyTree) -> Result<RhsDecomposition> {
    let dec = tree.decomposition();
    let shape = *dec.shape();
    f.check_grid(&shape)?;

    let mut pieces: Vec<Piece> = (0..tree.len())
        .map(|c| {
            let cells = dec.region(c).to_vec();
            let values = vec![0.0; cells.len()];
            Piece { cube: c, cells, values }
        })
        .collect();
    let mut total = Vec::new();
    let mut abs_total = Vec::new();
    for (c, cube) in dec.cubes().iter().enumerate() {
        for k in cube.cells(&shape) {
            let s = pieces[c].slot(k);
            pieces[c].values[s] = f.values[k];
            total.push(f.values[k]);
            abs_total.push(f.values[k].abs());
        }
    }
    let total = compensated_sum(total);
    let f_abs_sum = compensated_sum(abs_total);
    let tolerance = 1e-10 * f_abs_sum;
    if total.abs() > tolerance {
        let n = abs_total_len(dec);
        return Err(Error::MeanNotZero { mean: total / n as f64, tolerance: tolerance / n as f64 });
    }

    for &c in tree.leaf_to_root() {
        let Some(p) = tree.parent(c) else { continue };
        let overlap = tree.overlap(c);
        if overlap.is_empty() {
            return Err(Error::OverlapTooSmall { child: c, parent: p });
        }
        let mass = pieces[c].sum();
        if mass == 0.0 {
            continue;
        }
        let bump = mass / overlap.len() as f64;
        for &k in overlap {
            let sc = pieces[c].slot(k);
            pieces[c].values[sc] -= bump;
            let sp = pieces[p].slot(k);
            pieces[p].values[sp] += bump;
        }
    }
    Ok(RhsDecomposition { shape, pieces, f_abs_sum })
}

fn abs_total_len(dec: &super::WhitneyDecomposition) -> usize {
    dec.cubes().iter().map(|c| c.side * c.side).sum::<usize>().max(1)
}

impl RhsDecomposition {
    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn piece(&self, c: usize) -> &Piece {
        &self.pieces[c]
    }

    pub fn piece_field(&self, c: usize) -> ScalarField {
        let mut out = ScalarField::zeros(self.shape);
        let piece = &self.pieces[c];
        for (&k, &v) in piece.cells.iter().zip(&piece.values) {
            out.values[k] = v;
        }
        out
    }

    /// `Σ_j T_j f` on the full array.
    pub fn sum_field(&self) -> ScalarField {
        let mut acc: Vec<Vec<f64>> = vec![Vec::new(); self.shape.len()];
        for piece in &self.pieces {
            for (&k, &v) in piece.cells.iter().zip(&piece.values) {
                if v != 0.0 {
                    acc[k].push(v);
                }
            }
        }
        let values = acc.into_iter().map(compensated_sum).collect();
        ScalarField { shape: self.shape, values, bc: crate::grid::BoundaryCondition::Free }
    }

    /// Largest `|Σ T_j f| / Σ|f|` over the pieces.
    pub fn max_mean_defect(&self) -> f64 {
        let scale = self.f_abs_sum.max(f64::MIN_POSITIVE);
        self.pieces.iter().map(|p| p.sum().abs() / scale).fold(0.0, f64::max)
    }

    /// `Σ_j ‖T_j f‖_p^p / ‖f‖_p^p`, the stability sum.
    pub fn stability_ratio(&self, f: &ScalarField, p: f64) -> f64 {
        let num =
            compensated_sum(self.pieces.iter().flat_map(|pc| pc.values.iter().map(|v| v.abs().powf(p))));
        let mut cells = Vec::new();
        for piece in &self.pieces {
            cells.extend_from_slice(&piece.cells);
        }
        cells.sort_unstable();
        cells.dedup();
        let den = compensated_sum(cells.iter().map(|&k| f.values[k].abs().powf(p)));
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{distance_transform, rasterize_predicate, BoundingBox, GridDomain};
    use crate::whitney::{build_tree, whitney_decompose};

    fn unit_square(n: usize) -> GridDomain {
        rasterize_predicate(BoundingBox { min: [0.0, 0.0], max: [1.0, 1.0] }, 1.0 / n as f64, None, |x, y| {
            (0.0..1.0).contains(&x) && (0.0..1.0).contains(&y)
        })
        .unwrap()
    }

    fn tree_for(dom: &GridDomain, x0: [f64; 2]) -> WhitneyTree {
        let rho = distance_transform(dom);
        build_tree(whitney_decompose(dom, &rho).unwrap(), x0).unwrap()
    }

    #[test]
    fn left_right_sign_split_decomposes_exactly() {
        let dom = unit_square(32);
        let tree = tree_for(&dom, [0.51, 0.51]);
        let f = ScalarField::from_fn(&dom, |p| if p[0] < 0.5 { 1.0 } else { -1.0 });
        let d = decompose_rhs(&f, &tree).unwrap();
        let s = d.sum_field();
        for k in 0..f.values.len() {
            assert!((s.values[k] - f.values[k]).abs() <= 1e-10, "cell {k}");
        }
        assert!(d.max_mean_defect() <= 1e-10);
    }

    #[test]
    fn mean_zero_data_inside_one_cube_stays_put() {
        let dom = unit_square(32);
        let tree = tree_for(&dom, [0.51, 0.51]);
        let root = tree.root();
        let shape = *dom.shape();
        let cells: Vec<usize> = tree.cubes()[root].cells(&shape).collect();
        let mut f = ScalarField::zeros(shape);
        f.values[cells[0]] = 1.0;
        f.values[cells[1]] = -1.0;
        let d = decompose_rhs(&f, &tree).unwrap();
        for (c, piece) in d.pieces().iter().enumerate() {
            if c == root {
                assert_eq!(d.piece_field(c), f);
            } else {
                assert!(piece.is_zero());
            }
        }
    }

    #[test]
    fn nonzero_mean_is_rejected() {
        let dom = unit_square(8);
        let tree = tree_for(&dom, [0.5, 0.5]);
        let f = ScalarField::from_fn(&dom, |_| 1.0);
        assert!(matches!(decompose_rhs(&f, &tree), Err(Error::MeanNotZero { .. })));
    }
}
