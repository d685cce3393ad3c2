use divjohn::experiments::{generate, DomainSpec, Family};
use divjohn::grid::{distance_transform, Ball, DistanceField, GridDomain};
use divjohn::john::{
    component_diameter_test, content_thickness, default_samples, john_constant, separation_check, verify_witness,
    write_paths_csv, Curves, JohnAssessment, JohnOptions,
};
use divjohn::Error;

fn setup(family: Family, h: f64) -> (GridDomain, DistanceField) {
    let dom = generate(&DomainSpec::new(family, h)).unwrap();
    let rho = distance_transform(&dom);
    (dom, rho)
}

fn assess(dom: &GridDomain, rho: &DistanceField, x0: [f64; 2]) -> JohnAssessment {
    let opts = JohnOptions::default();
    let samples = default_samples(dom, rho, &opts);
    john_constant(dom, rho, x0, &samples, &opts).unwrap()
}

#[test]
fn disk_boundary_points_see_a_radial_cone() {
    let h = 1.0 / 64.0;
    let (dom, rho) = setup(Family::Disk { radius: 1.0 }, h);
    let x0 = [0.5 * h, 0.5 * h];
    let a = assess(&dom, &rho, x0);
    assert!(a.c_hat >= 0.9 && a.c_hat <= 1.0, "{}", a.c_hat);
    for s in &a.samples {
        assert!(verify_witness(&dom, &rho, s, a.center_cell));
    }
}

// corner (0,0) to center (1/2,1/2) along the diagonal: ρ = t/√2
#[test]
fn square_constant_matches_the_corner_diagonal() {
    let mut prev: Option<f64> = None;
    for n in [32, 64] {
        let h = 1.0 / n as f64;
        let (dom, rho) = setup(Family::Square { side: 1.0 }, h);
        let a = assess(&dom, &rho, [0.5 + 0.5 * h, 0.5 + 0.5 * h]);
        assert!((0.4..=0.8).contains(&a.c_hat));
        assert!((a.c_hat - 0.5f64.sqrt()).abs() < 0.05, "{}", a.c_hat);
        if let Some(p) = prev {
            assert!((a.c_hat - p).abs() <= 0.1);
        }
        prev = Some(a.c_hat);
    }
}

#[test]
fn cusp_constants_degrade_with_alpha() {
    let h = 1.0 / 128.0;
    let c: Vec<f64> = [1.0, 2.0, 3.0]
        .iter()
        .map(|&alpha| {
            let (dom, rho) = setup(Family::PowerCusp { alpha }, h);
            assess(&dom, &rho, dom.center(rho.argmax())).c_hat
        })
        .collect();
    assert!(c[0] > c[1] && c[1] > c[2], "{c:?}");
    assert!(c[2] < 0.5 * c[0], "{c:?}");
}

#[test]
fn tampered_witness_is_rejected() {
    let (dom, rho) = setup(Family::PowerCusp { alpha: 2.0 }, 1.0 / 64.0);
    let a = assess(&dom, &rho, dom.center(rho.argmax()));
    let mut s = a.samples[a.worst_sample].clone();
    assert!(verify_witness(&dom, &rho, &s, a.center_cell));
    s.c_best = (s.c_best * 1.5).min(1.0) + 1e-3;
    assert!(!verify_witness(&dom, &rho, &s, a.center_cell));
    let mut s = a.samples[0].clone();
    if s.path.len() > 2 {
        s.path.remove(1);
        s.arclength.remove(1);
        assert!(!verify_witness(&dom, &rho, &s, a.center_cell));
    }
}

#[test]
fn shrinking_the_domain_never_raises_c_best() {
    let h = 1.0 / 64.0;
    let (dom, rho) = setup(Family::Square { side: 1.0 }, h);
    let slit: Vec<usize> = dom
        .cells()
        .iter()
        .copied()
        .filter(|&k| {
            let p = dom.center(k);
            (0.3..0.3 + h).contains(&p[0]) && p[1] < 0.6
        })
        .collect();
    let cut = dom.without_cells(&slit).unwrap();
    let rho_cut = distance_transform(&cut);
    let x0 = [0.7 + 0.5 * h, 0.5 + 0.5 * h];
    let samples = [[0.1 + 0.5 * h, 0.2 + 0.5 * h], [0.05 + 0.5 * h, 0.9 + 0.5 * h]];
    let opts = JohnOptions::default();
    let full = john_constant(&dom, &rho, x0, &samples, &opts).unwrap();
    let less = john_constant(&cut, &rho_cut, x0, &samples, &opts).unwrap();
    for (a, b) in full.samples.iter().zip(&less.samples) {
        assert!(b.c_best <= a.c_best, "{} > {}", b.c_best, a.c_best);
    }
    assert!(less.samples[0].c_best < full.samples[0].c_best);
}

#[test]
fn john_preconditions_are_checked() {
    let (dom, rho) = setup(Family::Disk { radius: 1.0 }, 1.0 / 32.0);
    let opts = JohnOptions::default();
    let inside = [[0.1, 0.1]];
    assert!(matches!(john_constant(&dom, &rho, [3.0, 0.0], &inside, &opts), Err(Error::InvalidParameter(_))));
    assert!(matches!(john_constant(&dom, &rho, [0.99, 0.0], &inside, &opts), Err(Error::InvalidParameter(_))));
    assert!(matches!(john_constant(&dom, &rho, [0.0, 0.0], &[[2.0, 2.0]], &opts), Err(Error::InvalidParameter(_))));
}

#[test]
fn default_samples_hug_the_boundary() {
    let (dom, rho) = setup(Family::Disk { radius: 1.0 }, 1.0 / 128.0);
    let opts = JohnOptions::default();
    let s = default_samples(&dom, &rho, &opts);
    assert_eq!(s.len(), opts.max_samples);
    for p in s {
        let k = dom.shape().locate(p).unwrap();
        assert!(rho.at(k) <= opts.near_boundary * dom.h());
    }
}

#[test]
fn paths_export_one_row_per_vertex() {
    let (dom, rho) = setup(Family::Square { side: 1.0 }, 1.0 / 16.0);
    let a = john_constant(&dom, &rho, [0.53, 0.53], &[[0.03, 0.03], [0.97, 0.5]], &JohnOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_paths_csv(&a, &rho, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let rows = text.lines().count() - 1;
    assert_eq!(rows, a.samples.iter().map(|s| s.path.len()).sum::<usize>());
    assert!(text.starts_with("sample,vertex,x,y,t,rho"));
}

#[test]
fn separation_on_disk_and_punctured_disk_passes_at_two() {
    for family in [Family::Disk { radius: 1.0 }, Family::PuncturedDisk { radius: 1.0 }] {
        let (dom, rho) = setup(family, 1.0 / 32.0);
        let x0 = dom.center(rho.argmax());
        let a = assess(&dom, &rho, x0);
        let rep = separation_check(&dom, &rho, &a, 2.0, Curves::Quasihyperbolic);
        assert!(rep.pass, "{:?}", rep.first_failure());
    }
}

#[test]
fn separation_is_monotone_in_the_constant() {
    let (dom, rho) = setup(Family::RoomsCorridors { widths: vec![0.1, 0.1] }, 1.0 / 32.0);
    let a = assess(&dom, &rho, dom.center(rho.argmax()));
    let mut last = false;
    for cs in [0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0] {
        let rep = separation_check(&dom, &rho, &a, cs, Curves::Quasihyperbolic);
        if cs == 0.1 {
            assert!(!rep.pass);
            let f = rep.first_failure().unwrap();
            assert!(!f.ball.contains(f.escaping));
        }
        if cs == 10.0 {
            assert!(rep.pass);
        }
        assert!(!last || rep.pass, "pass lost at C_s = {cs}");
        last = rep.pass;
    }
}

#[test]
fn disk_annulus_component_has_ratio_four() {
    let (dom, _) = setup(Family::Disk { radius: 1.0 }, 1.0 / 64.0);
    let r = component_diameter_test(&dom, &Ball::new([0.0, 0.0], 0.2), [0.0, 0.0], 0.5).unwrap();
    assert_eq!(r.len(), 1);
    assert!((r[0].ratio - 4.0).abs() < 0.05, "{}", r[0].ratio);

    let big = dom.rescaled(2.0);
    let s = component_diameter_test(&big, &Ball::new([0.0, 0.0], 0.4), [0.0, 0.0], 1.0).unwrap();
    assert!((s[0].ratio - r[0].ratio).abs() < 1e-12);
}

#[test]
fn components_meeting_b0_are_discarded() {
    let (dom, _) = setup(Family::Disk { radius: 1.0 }, 1.0 / 32.0);
    assert!(component_diameter_test(&dom, &Ball::new([0.7, 0.0], 0.1), [0.0, 0.0], 0.5).unwrap().is_empty());
    assert!(component_diameter_test(&dom, &Ball::new([0.0, 0.0], 0.1), [0.0, 0.0], 0.0).is_err());
}

// tip component of Ω ∖ B((√d, 0), d) for |y| < x²; the rasterized tip starts
// where x² = h/2
#[test]
fn quadratic_cusp_tip_ratio_follows_geometry() {
    let h = 1.0 / 512.0;
    let (dom, _) = setup(Family::PowerCusp { alpha: 2.0 }, h);
    let b0 = Ball::new([0.75, 0.0], 0.1);
    let mut ratios = Vec::new();
    for d in [0.2f64, 0.1, 0.05] {
        let r = component_diameter_test(&dom, &b0, [d.sqrt(), 0.0], d).unwrap();
        let best = r.iter().map(|c| c.ratio).fold(0.0, f64::max);
        let oracle = (d.sqrt() - d - (0.5 * h).sqrt()) / d;
        assert!((best - oracle).abs() <= 0.15 * oracle, "d={d}: {best} vs {oracle}");
        ratios.push(best);
    }
    assert!(ratios[0] < ratios[1] && ratios[1] < ratios[2]);
}

#[test]
fn thickness_examples() {
    let (sq, _) = setup(Family::Square { side: 1.0 }, 1.0 / 128.0);
    for r in [0.05, 0.1, 0.25] {
        assert!(content_thickness(&sq, 1.0, [0.5, 0.0], r).unwrap().ratio >= 0.5);
    }

    let h = 1.0 / 128.0;
    let (pd, _) = setup(Family::PuncturedDisk { radius: 1.0 }, h);
    let ratios: Vec<f64> = [2.0, 8.0, 32.0, 64.0]
        .iter()
        .map(|k| content_thickness(&pd, 1.0, [0.5 * h, 0.5 * h], k * h).unwrap().ratio)
        .collect();
    assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
    assert!(*ratios.last().unwrap() < 0.05);

    for n in [128, 256] {
        let (cs, _) = setup(Family::CantorSlit { p: 1.5 }, 1.0 / n as f64);
        for r in [0.5, 0.25, 0.125, 0.0625] {
            let t = content_thickness(&cs, 0.5, [0.0, 0.0], r).unwrap();
            assert!(t.ratio >= 0.5, "h=1/{n} r={r}: {}", t.ratio);
            assert!((t.certified_ratio - t.ratio / (4.0 * 2f64.sqrt())).abs() < 1e-12);
        }
    }
    assert!(content_thickness(&sq, 2.5, [0.5, 0.0], 0.1).is_err());
    assert!(content_thickness(&sq, 1.0, [0.5, 0.5], 0.1).is_err());
}
