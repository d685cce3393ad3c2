use super::domain::GridDomain;
use super::field::{ScalarField, VectorField};
use super::sum::NeumaierSum;
use crate::error::Result;

/// Forward-difference gradient. A difference across a face is taken only when
/// both cells belong to the domain, so free fields see a natural (Neumann)
/// boundary.
pub fn gradient(dom: &GridDomain, u: &ScalarField) -> Result<VectorField> {
    let shape = *dom.shape();
    u.check_grid(&shape)?;
    let inv_h = 1.0 / shape.h;
    let mut g = VectorField::zeros(shape);
    for &k in dom.cells() {
        let (i, j) = shape.coords(k);
        if i + 1 < shape.nx && dom.contains(k + 1) {
            g.v1[k] = (u.values[k + 1] - u.values[k]) * inv_h;
        }
        if j + 1 < shape.ny && dom.contains(k + shape.nx) {
            g.v2[k] = (u.values[k + shape.nx] - u.values[k]) * inv_h;
        }
    }
    Ok(g)
}

/// Negative adjoint of [`gradient`] under `<a, b> = Σ a b h²`:
/// `<v, ∇g> = -<div v, g>` holds for every `v` and `g`.
pub fn divergence(dom: &GridDomain, v: &VectorField) -> Result<ScalarField> {
    let shape = *dom.shape();
    v.check_grid(&shape)?;
    let inv_h = 1.0 / shape.h;
    let nx = shape.nx;
    let mut out = ScalarField::zeros(shape);
    for &k in dom.cells() {
        let (i, j) = shape.coords(k);
        let mut acc = 0.0;
        if i + 1 < nx && dom.contains(k + 1) {
            acc += v.v1[k];
        }
        if i > 0 && dom.contains(k - 1) {
            acc -= v.v1[k - 1];
        }
        if j + 1 < shape.ny && dom.contains(k + nx) {
            acc += v.v2[k];
        }
        if j > 0 && dom.contains(k - nx) {
            acc -= v.v2[k - nx];
        }
        out.values[k] = acc * inv_h;
    }
    Ok(out)
}

/// Frobenius norm of the forward-difference Jacobian of the zero-extended
/// field, one value per array cell. Differences against faces outside the
/// support are wall terms, which is how no-slip enters `‖Dv‖`.
pub fn jacobian_magnitude(v: &VectorField) -> Vec<f64> {
    let shape = v.shape;
    let inv_h = 1.0 / shape.h;
    let nx = shape.nx;
    let mut out = vec![0.0; shape.len()];
    for k in 0..shape.len() {
        let (i, j) = shape.coords(k);
        let mut s = 0.0;
        for comp in [&v.v1, &v.v2] {
            let here = comp[k];
            let right = if i + 1 < nx { comp[k + 1] } else { 0.0 };
            let up = if j + 1 < shape.ny { comp[k + nx] } else { 0.0 };
            s += (right - here).powi(2) + (up - here).powi(2);
        }
        out[k] = s.sqrt() * inv_h;
    }
    out
}

/// Grid inner product `Σ a b h²` over all array cells.
pub fn inner_scalar(a: &ScalarField, b: &ScalarField) -> f64 {
    let h2 = a.shape.h * a.shape.h;
    a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect::<NeumaierSum>().value() * h2
}

/// Grid inner product `Σ (a1 b1 + a2 b2) h²`.
pub fn inner_vector(a: &VectorField, b: &VectorField) -> f64 {
    let h2 = a.shape.h * a.shape.h;
    let mut acc = NeumaierSum::new();
    for k in 0..a.v1.len() {
        acc.add(a.v1[k] * b.v1[k]);
        acc.add(a.v2[k] * b.v2[k]);
    }
    acc.value() * h2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::rasterize_predicate;
    use crate::grid::BoundingBox;

    fn disk(h: f64) -> GridDomain {
        let bbox = BoundingBox { min: [-1.0, -1.0], max: [1.0, 1.0] };
        rasterize_predicate(bbox, h, None, |x, y| x * x + y * y < 1.0).unwrap()
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let dom = disk(1.0 / 16.0);
        let u = ScalarField::from_fn(&dom, |_| 3.5);
        let g = gradient(&dom, &u).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn divergence_of_linear_gradient_vanishes_in_the_interior() {
        let dom = disk(1.0 / 32.0);
        let u = ScalarField::from_fn(&dom, |p| p[0]);
        let g = gradient(&dom, &u).unwrap();
        let d = divergence(&dom, &g).unwrap();
        let shape = dom.shape();
        for &k in dom.cells() {
            let (i, j) = shape.coords(k);
            let deep = (-2..=2).all(|di: isize| {
                (-2..=2).all(|dj: isize| dom.contains_ij(i as isize + di, j as isize + dj))
            });
            if deep {
                assert!(d.values[k].abs() < 1e-9, "div at {k} = {}", d.values[k]);
            }
        }
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let dom = disk(1.0 / 8.0);
        let other = disk(1.0 / 16.0);
        let u = ScalarField::zeros(*other.shape());
        assert!(matches!(gradient(&dom, &u), Err(crate::Error::GridMismatch)));
    }
}
