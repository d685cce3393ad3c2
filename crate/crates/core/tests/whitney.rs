use divjohn::experiments::{generate, rhs, DomainSpec, Family, RhsPattern};
use divjohn::grid::{distance_transform, DistanceField, GridDomain, ScalarField};
use divjohn::whitney::{build_tree, decompose_rhs, whitney_decompose, whitney_decompose_with, WhitneyTree};
use divjohn::Error;

fn setup(family: Family, h: f64) -> (GridDomain, DistanceField) {
    let dom = generate(&DomainSpec::new(family, h)).unwrap();
    let rho = distance_transform(&dom);
    (dom, rho)
}

fn tree(dom: &GridDomain, rho: &DistanceField) -> WhitneyTree {
    let x0 = dom.center(rho.argmax());
    build_tree(whitney_decompose(dom, rho).unwrap(), x0).unwrap()
}

#[test]
fn cubes_partition_the_domain_with_whitney_bounds() {
    for family in [Family::Disk { radius: 1.0 }, Family::PowerCusp { alpha: 2.0 }, Family::Annulus { inner: 0.5, outer: 1.0 }] {
        let (dom, rho) = setup(family, 1.0 / 64.0);
        let dec = whitney_decompose(&dom, &rho).unwrap();
        let shape = dom.shape();
        let mut hits = vec![0u32; shape.len()];
        for c in dec.cubes() {
            for k in c.cells(shape) {
                hits[k] += 1;
            }
        }
        for k in 0..shape.len() {
            assert_eq!(hits[k], dom.contains(k) as u32);
        }
        for (j, c) in dec.cubes().iter().enumerate() {
            let l = c.length(dom.h());
            let d = dec.boundary_distance(j);
            assert!(l <= d + 1e-12 && d <= 4.0 * 2f64.sqrt() * l + 1e-12, "cube {j}: l={l} d={d}");
        }
    }
}

#[test]
fn single_cell_domain_is_one_cube() {
    let dom = GridDomain::from_unpadded(1, 1, 0.5, &[true], None).unwrap();
    let rho = distance_transform(&dom);
    let dec = whitney_decompose(&dom, &rho).unwrap();
    assert_eq!(dec.len(), 1);
    assert_eq!(dec.cubes()[0].side, 1);
}

#[test]
fn dyadic_refinement_reproduces_large_cubes() {
    let (d1, r1) = setup(Family::Square { side: 1.0 }, 1.0 / 32.0);
    let (d2, r2) = setup(Family::Square { side: 1.0 }, 1.0 / 64.0);
    let lengths = |dom: &GridDomain, rho: &DistanceField| {
        let dec = whitney_decompose(dom, rho).unwrap();
        let mut v: Vec<(i64, i64, usize)> = dec
            .cubes()
            .iter()
            .filter(|c| c.length(dom.h()) >= 0.125)
            .map(|c| {
                let p = c.center(dom.shape());
                ((p[0] * 1024.0).round() as i64, (p[1] * 1024.0).round() as i64, (c.length(dom.h()) * 1024.0) as usize)
            })
            .collect();
        v.sort_unstable();
        v
    };
    assert_eq!(lengths(&d1, &r1), lengths(&d2, &r2));
}

#[test]
fn overlap_is_bounded_and_sigma_is_validated() {
    let (dom, rho) = setup(Family::Disk { radius: 1.0 }, 1.0 / 128.0);
    let dec = whitney_decompose(&dom, &rho).unwrap();
    assert!(dec.overlap_constant() <= 12, "{}", dec.overlap_constant());
    assert!(matches!(whitney_decompose_with(&dom, &rho, 1.0), Err(Error::InvalidParameter(_))));
}

#[test]
fn tree_chains_end_at_the_root_through_overlapping_regions() {
    let (dom, rho) = setup(Family::RoomsCorridors { widths: vec![0.1, 0.05] }, 1.0 / 64.0);
    let t = tree(&dom, &rho);
    let root = t.root();
    assert!(t.parent(root).is_none());
    for c in 0..t.len() {
        let chain = t.chain(c);
        assert_eq!(*chain.last().unwrap(), root);
        assert_eq!(chain.len(), t.depth(c) + 1);
        if c != root {
            assert!(!t.overlap(c).is_empty());
        }
    }
    let mut seen = vec![false; t.len()];
    for &c in t.leaf_to_root() {
        if let Some(p) = t.parent(c) {
            assert!(!seen[p], "parent {p} processed before child {c}");
        }
        seen[c] = true;
    }
    assert!(seen.iter().all(|&s| s));
}

#[test]
fn tree_center_outside_is_rejected() {
    let (dom, rho) = setup(Family::Disk { radius: 1.0 }, 1.0 / 16.0);
    let dec = whitney_decompose(&dom, &rho).unwrap();
    assert!(matches!(build_tree(dec, [5.0, 5.0]), Err(Error::InvalidParameter(_))));
}

#[test]
fn tree_export_round_trips_through_json() {
    let (dom, rho) = setup(Family::Square { side: 1.0 }, 1.0 / 16.0);
    let t = tree(&dom, &rho);
    let mut buf = Vec::new();
    t.write_json(&mut buf).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
    assert_eq!(v["root"].as_u64().unwrap() as usize, t.root());
    assert_eq!(v["cubes"].as_array().unwrap().len(), t.len());
}

#[test]
fn pieces_are_mean_zero_supported_locally_and_sum_to_f() {
    let (dom, rho) = setup(Family::PowerCusp { alpha: 2.0 }, 1.0 / 64.0);
    let t = tree(&dom, &rho);
    let f = rhs(&dom, &RhsPattern::Checkerboard { k: 3 }).unwrap();
    let dec = decompose_rhs(&f, &t).unwrap();
    assert!(dec.max_mean_defect() <= 1e-12);
    let sum = dec.sum_field();
    for &k in dom.cells() {
        assert!((sum.values[k] - f.values[k]).abs() <= 1e-12 * f.max_abs());
    }
    for (c, piece) in dec.pieces().iter().enumerate() {
        assert_eq!(piece.cells, t.decomposition().region(c));
    }
    assert!(dec.stability_ratio(&f, 2.0).is_finite());
}

#[test]
fn rhs_with_nonzero_mean_is_rejected() {
    let (dom, rho) = setup(Family::Disk { radius: 1.0 }, 1.0 / 16.0);
    let t = tree(&dom, &rho);
    let f = ScalarField::from_fn(&dom, |_| 1.0);
    assert!(matches!(decompose_rhs(&f, &t), Err(Error::MeanNotZero { .. })));
}

#[test]
fn zero_rhs_has_zero_pieces() {
    let (dom, rho) = setup(Family::Disk { radius: 1.0 }, 1.0 / 16.0);
    let t = tree(&dom, &rho);
    let dec = decompose_rhs(&ScalarField::zeros(*dom.shape()), &t).unwrap();
    assert!(dec.pieces().iter().all(|p| p.is_zero()));
}
