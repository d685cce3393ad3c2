use divjohn::divsolve::{
    condition_report, local_solve, solve_global, GlobalSolver, Method, SolverOptions, WhitneySolver,
};
use divjohn::experiments::{generate, rhs, rhs_batch, DomainSpec, Family, RhsPattern};
use divjohn::grid::{distance_transform, divergence, jacobian_magnitude, GridDomain, ScalarField, VectorField};
use divjohn::whitney::{build_tree, whitney_decompose};
use divjohn::Error;
use nalgebra::{DMatrix, DVector};

fn energy(v: &VectorField) -> f64 {
    let h = v.shape.h;
    0.5 * jacobian_magnitude(v).iter().map(|x| x * x).sum::<f64>() * h * h
}

/// Interior faces of a domain as (component, array index).
fn faces(dom: &GridDomain) -> Vec<(u8, usize)> {
    let s = dom.shape();
    let mut out = Vec::new();
    for &k in dom.cells() {
        if dom.contains(k + 1) {
            out.push((0, k));
        }
        if dom.contains(k + s.nx) {
            out.push((1, k));
        }
    }
    out
}

fn basis(dom: &GridDomain, face: (u8, usize)) -> VectorField {
    let mut v = VectorField::zeros(*dom.shape());
    if face.0 == 0 {
        v.v1[face.1] = 1.0;
    } else {
        v.v2[face.1] = 1.0;
    }
    v
}

/// Minimum-energy solution by dense linear algebra: particular solution from
/// the pseudo-inverse of the divergence matrix, then the energy minimized over
/// its null space.
fn dense_oracle(dom: &GridDomain, f: &ScalarField) -> VectorField {
    let fs = faces(dom);
    let n = fs.len();
    let cells = dom.cells();
    let e: Vec<VectorField> = fs.iter().map(|&fc| basis(dom, fc)).collect();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = e[i].clone();
            s.axpy(1.0, &e[j]);
            a[(i, j)] = energy(&s) - energy(&e[i]) - energy(&e[j]);
        }
    }
    let mut b = DMatrix::<f64>::zeros(cells.len(), n);
    for (j, ej) in e.iter().enumerate() {
        let d = divergence(dom, ej).unwrap();
        for (i, &k) in cells.iter().enumerate() {
            b[(i, j)] = d.values[k];
        }
    }
    let rhs = DVector::from_iterator(cells.len(), cells.iter().map(|&k| f.values[k]));
    let vp = b.clone().pseudo_inverse(1e-12).unwrap() * &rhs;
    let btb = b.transpose() * &b;
    let eig = btb.symmetric_eigen();
    let null: Vec<DVector<f64>> = (0..n)
        .filter(|&r| eig.eigenvalues[r].abs() < 1e-9)
        .map(|r| eig.eigenvectors.column(r).into_owned())
        .collect();
    let x = if null.is_empty() {
        vp
    } else {
        let nm = DMatrix::from_columns(&null);
        let red = nm.transpose() * &a * &nm;
        let z = red.lu().solve(&(-(nm.transpose() * &a * &vp))).unwrap();
        vp + nm * z
    };
    let mut v = VectorField::zeros(*dom.shape());
    for (i, &(c, k)) in fs.iter().enumerate() {
        if c == 0 {
            v.v1[k] = x[i];
        } else {
            v.v2[k] = x[i];
        }
    }
    v
}

fn block(nx: usize, ny: usize, h: f64) -> GridDomain {
    GridDomain::from_unpadded(nx, ny, h, &vec![true; nx * ny], None).unwrap()
}

fn max_diff(a: &VectorField, b: &VectorField) -> f64 {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    d.max_abs()
}

#[test]
fn two_cells_carry_one_flux() {
    let h = 0.1;
    let dom = block(2, 1, h);
    let rho = distance_transform(&dom);
    let mut f = ScalarField::zeros(*dom.shape());
    let (a, b) = (dom.cells()[0], dom.cells()[1]);
    f.values[a] = 3.0;
    f.values[b] = -3.0;
    let sol = solve_global(&dom, &rho, &f, 2.0).unwrap();
    assert!((sol.v.v1[a] - 3.0 * h).abs() < 1e-12);
    assert!(sol.residual < 1e-12);
}

#[test]
fn global_solver_matches_dense_minimizer() {
    for (nx, ny) in [(2, 2), (3, 2), (4, 3)] {
        let dom = block(nx, ny, 0.25);
        let rho = distance_transform(&dom);
        let mut f = ScalarField::zeros(*dom.shape());
        for (i, &k) in dom.cells().iter().enumerate() {
            f.values[k] = ((i * 7 + 3) % 5) as f64 - 2.0;
        }
        let f = f.mean_zero(&dom);
        let oracle = dense_oracle(&dom, &f);
        let sol = solve_global(&dom, &rho, &f, 2.0).unwrap();
        assert!(max_diff(&sol.v, &oracle) <= 1e-8 * oracle.max_abs(), "{nx}x{ny}");
        assert!((sol.energy - energy(&oracle)).abs() <= 1e-8 * energy(&oracle));
    }
}

#[test]
fn direct_and_uzawa_agree() {
    let dom = generate(&DomainSpec::new(Family::PowerCusp { alpha: 2.0 }, 1.0 / 32.0)).unwrap();
    let rho = distance_transform(&dom);
    let f = rhs(&dom, &RhsPattern::Noise { seed: 3 }).unwrap();
    let a = GlobalSolver::new(&dom, SolverOptions::direct()).unwrap().solve(&dom, &rho, &f, 2.0).unwrap();
    let b = GlobalSolver::new(&dom, SolverOptions::uzawa()).unwrap().solve(&dom, &rho, &f, 2.0).unwrap();
    assert!(max_diff(&a.v, &b.v) <= 1e-6 * a.v.max_abs());
    assert!(a.residual <= 1e-8 && b.residual <= 1e-8);
}

#[test]
fn solution_scales_with_h_and_f() {
    let mask: Vec<bool> = (0..36).map(|k| k != 14).collect();
    let d1 = GridDomain::from_unpadded(6, 6, 0.1, &mask, None).unwrap();
    let d2 = GridDomain::from_unpadded(6, 6, 0.2, &mask, None).unwrap();
    let mut f1 = ScalarField::zeros(*d1.shape());
    for (i, &k) in d1.cells().iter().enumerate() {
        f1.values[k] = (i as f64 * 0.37).sin();
    }
    let f1 = f1.mean_zero(&d1);
    let f2 = ScalarField::from_values(*d2.shape(), f1.values.clone()).unwrap();
    let v1 = solve_global(&d1, &distance_transform(&d1), &f1, 2.0).unwrap().v;
    let v2 = solve_global(&d2, &distance_transform(&d2), &f2, 2.0).unwrap().v;
    let mut twice = v1.clone();
    twice.v1.iter_mut().chain(twice.v2.iter_mut()).for_each(|x| *x *= 2.0);
    assert!(max_diff(&v2, &twice) <= 1e-9 * v2.max_abs());

    let mut f3 = f1.clone();
    f3.scale(-2.5);
    let v3 = solve_global(&d1, &distance_transform(&d1), &f3, 2.0).unwrap().v;
    let mut scaled = v1;
    scaled.v1.iter_mut().chain(scaled.v2.iter_mut()).for_each(|x| *x *= -2.5);
    assert!(max_diff(&v3, &scaled) <= 1e-9 * v3.max_abs());
}

#[test]
fn zero_rhs_gives_zero_field() {
    let dom = generate(&DomainSpec::new(Family::Disk { radius: 1.0 }, 1.0 / 16.0)).unwrap();
    let rho = distance_transform(&dom);
    let f = ScalarField::zeros(*dom.shape());
    assert_eq!(solve_global(&dom, &rho, &f, 2.0).unwrap().v.max_abs(), 0.0);
    let tree = build_tree(whitney_decompose(&dom, &rho).unwrap(), [0.0, 0.0]).unwrap();
    let w = WhitneySolver::new(&dom, tree, SolverOptions::default()).unwrap();
    assert_eq!(w.solve(&dom, &rho, &f, 2.0).unwrap().v.max_abs(), 0.0);
}

#[test]
fn nonzero_mean_and_grid_mismatch_are_rejected() {
    let dom = generate(&DomainSpec::new(Family::Square { side: 1.0 }, 1.0 / 8.0)).unwrap();
    let rho = distance_transform(&dom);
    let f = ScalarField::from_fn(&dom, |_| 1.0);
    assert!(matches!(solve_global(&dom, &rho, &f, 2.0), Err(Error::MeanNotZero { .. })));
    let other = generate(&DomainSpec::new(Family::Square { side: 1.0 }, 1.0 / 16.0)).unwrap();
    let g = ScalarField::zeros(*other.shape());
    assert!(matches!(solve_global(&dom, &rho, &g, 2.0), Err(Error::GridMismatch)));
}

#[test]
fn local_solve_stays_on_its_region() {
    let dom = generate(&DomainSpec::new(Family::Square { side: 1.0 }, 1.0 / 16.0)).unwrap();
    let s = dom.shape();
    let region: Vec<usize> = dom.cells().iter().copied().filter(|&k| s.coords(k).0 <= 4).collect();
    let mut g = ScalarField::zeros(*s);
    g.values[region[0]] = 1.0;
    g.values[*region.last().unwrap()] = -1.0;
    let (v, sol) = local_solve(&dom, &region, &g, SolverOptions::default()).unwrap();
    assert!(sol.residual <= 1e-10);
    for k in 0..s.len() {
        let inside = region.binary_search(&k).is_ok();
        let right = region.binary_search(&(k + 1)).is_ok();
        let up = region.binary_search(&(k + s.nx)).is_ok();
        if !(inside && right) {
            assert_eq!(v.v1[k], 0.0);
        }
        if !(inside && up) {
            assert_eq!(v.v2[k], 0.0);
        }
    }
}

#[test]
fn whitney_solution_is_exact_and_reports_chains() {
    let dom = generate(&DomainSpec::new(Family::RoomsCorridors { widths: vec![0.1] }, 1.0 / 32.0)).unwrap();
    let rho = distance_transform(&dom);
    let tree = build_tree(whitney_decompose(&dom, &rho).unwrap(), dom.center(rho.argmax())).unwrap();
    let w = WhitneySolver::new(&dom, tree, SolverOptions::default()).unwrap();
    let f = rhs(&dom, &RhsPattern::Checkerboard { k: 2 }).unwrap();
    let sol = w.solve(&dom, &rho, &f, 2.0).unwrap();
    assert_eq!(sol.method, Method::WhitneyConstructive);
    assert!(sol.residual <= 1e-8);
    assert!(sol.v.is_zero_trace(&dom));
    let chains = sol.chains.unwrap();
    assert!(chains.sum_grad > 0.0 && chains.overlap >= 1);
}

#[test]
fn global_solution_converges_on_the_square() {
    let ratio = |n: usize| {
        let dom = generate(&DomainSpec::new(Family::Square { side: 1.0 }, 1.0 / n as f64)).unwrap();
        let rho = distance_transform(&dom);
        let pi = std::f64::consts::PI;
        let f = ScalarField::from_fn(&dom, |p| (pi * p[0]).cos() * (pi * p[1]).cos()).mean_zero(&dom);
        let sol = solve_global(&dom, &rho, &f, 2.0).unwrap();
        assert!(sol.residual <= 1e-8);
        sol.norms.dv / sol.norms.f
    };
    let (a, b, c) = (ratio(32), ratio(64), ratio(128));
    assert!((b - c).abs() < (a - b).abs(), "{a} {b} {c}");
    assert!((b - c).abs() / c < 0.05);
}

#[test]
fn condition_report_has_one_row_per_method_and_rhs() {
    let dom = generate(&DomainSpec::new(Family::Disk { radius: 1.0 }, 1.0 / 16.0)).unwrap();
    let rho = distance_transform(&dom);
    let batch = rhs_batch(&dom, &rho, 3, 1);
    let tree = build_tree(whitney_decompose(&dom, &rho).unwrap(), [0.0, 0.0]).unwrap();
    let w = WhitneySolver::new(&dom, tree, SolverOptions::default()).unwrap();
    let g = GlobalSolver::new(&dom, SolverOptions::direct()).unwrap();
    let rep = condition_report(&dom, &rho, &batch, 2.0, Some(&w), Some(&g)).unwrap();
    assert_eq!(rep.rows.len(), 6);
    assert!(rep.max_residual() <= 1e-8);
    assert!(rep.max_w1p(Method::GlobalBaseline) > 0.0);
}
