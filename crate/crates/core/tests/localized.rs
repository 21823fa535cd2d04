mod common;

use std::f64::consts::PI;

use common::reference_background;
use elastic_monotonicity::farfield::*;
use elastic_monotonicity::forward::*;
use elastic_monotonicity::localized::*;
use elastic_monotonicity::medium::{Inclusion, MaterialField, Point, Shape};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_density(n: usize, seed: u64) -> HerglotzDensity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = HerglotzDensity::zeros(n);
    for z in g.gp.iter_mut().chain(g.gs.iter_mut()) {
        *z = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    g
}

fn background() -> MaterialField {
    MaterialField::homogeneous(reference_background())
}

fn region(center: [f64; 2], radius: f64, variant: Variant) -> RegionSamples {
    RegionSamples::new(Shape::disk(center, radius), radius / 20.0, variant).unwrap()
}

#[test]
fn shear_density_is_divergence_free() {
    let grid = DirectionGrid::new(16).unwrap();
    let r = region([0.3, -0.2], 0.5, Variant::Divergence);
    let l = restriction_matrix(&background(), &r, &grid).unwrap();
    let mut g = random_density(16, 3);
    g.gp.iter_mut().for_each(|z| *z = C::new(0.0, 0.0));
    assert!((l * g.stacked()).norm() <= 1e-10);
}

#[test]
fn field_norm_matches_polar_quadrature() {
    let grid = DirectionGrid::new(32).unwrap();
    let bg = reference_background();
    let (c, a) = ([1.0, 0.5], 0.5);
    let r = region(c, a, Variant::Field);
    let l = restriction_matrix(&background(), &r, &grid).unwrap();
    let g = random_density(32, 12);
    let sampled = (&l * g.stacked()).norm_squared();
    // tensor Gauss–Legendre in r, trapezoid in θ
    let inc = herglotz_incident(&g, &grid, &bg).unwrap();
    let gl = gauss_quad::GaussLegendre::new(24.try_into().unwrap());
    let nt = 96;
    let mut exact = 0.0;
    for &(x, w) in gl.as_node_weight_pairs() {
        let rr = 0.5 * a * (x + 1.0);
        for k in 0..nt {
            let t = 2.0 * PI * k as f64 / nt as f64;
            let p = Point::new(c[0], c[1]) + unit(t) * rr;
            exact += inc.eval(&bg, &p).u.norm_squared() * rr * 0.5 * a * w * 2.0 * PI / nt as f64;
        }
    }
    assert!((sampled - exact).abs() <= 0.01 * exact, "{sampled} vs {exact}");
}

#[test]
fn refining_samples_changes_norm_by_under_one_percent() {
    let grid = DirectionGrid::new(16).unwrap();
    let g = random_density(16, 2).stacked();
    let norms: Vec<f64> = [20.0, 40.0]
        .iter()
        .map(|&m| {
            let r = RegionSamples::new(Shape::disk([0.0, 1.0], 0.5), 0.5 / m, Variant::FieldGradient).unwrap();
            (restriction_matrix(&background(), &r, &grid).unwrap() * &g).norm_squared()
        })
        .collect();
    assert!((norms[0] - norms[1]).abs() <= 0.01 * norms[1], "{norms:?}");
}

#[test]
fn field_gradient_rows_stack_field_and_gradient() {
    let grid = DirectionGrid::new(8).unwrap();
    let r0 = region([0.0, 0.0], 0.3, Variant::FieldGradient);
    let l0 = restriction_matrix(&background(), &r0, &grid).unwrap();
    let l1 = restriction_matrix(&background(), &r0.with_variant(Variant::Field), &grid).unwrap();
    for p in 0..r0.points.len() {
        for k in 0..2 {
            assert_eq!(l0.row(6 * p + k), l1.row(2 * p + k));
        }
    }
}

#[test]
fn disk_medium_columns_match_grid_solver() {
    let bg = reference_background();
    let inc = Inclusion::new(Shape::disk([0.4, -0.3], 0.5), 0.0, 0.0, 0.3);
    let field = MaterialField::new(bg, vec![inc]).unwrap();
    let grid = DirectionGrid::new(8).unwrap();
    let samples = RegionSamples {
        shape: Shape::disk([0.0, 0.0], 3.0),
        points: vec![Point::new(1.5, 0.2), Point::new(-0.8, 1.1), Point::new(0.5, -0.3)],
        weights: vec![1.0; 3],
        variant: Variant::Field,
    };
    let l = restriction_matrix(&field, &samples, &grid).unwrap();
    let gs = GridScatterer::new(&field, GridOptions::new(1.0 / 32.0)).unwrap();
    for (j, mode) in [(3, Mode::P), (8 + 5, Mode::S)] {
        let pw = PlaneWave::from_angle(mode, grid.angle(j % 8));
        let sol = gs.solve(&pw).unwrap();
        let k = mode.wavenumber(&bg);
        let c = C::from_polar(grid.weight() * (k / bg.omega).sqrt(), -PI / 4.0);
        for (p, x) in samples.points.iter().enumerate() {
            let want = sol.total(x).unwrap().u * c;
            for i in 0..2 {
                let got = l[(2 * p + i, j)];
                assert!((got - want[i]).norm() <= 0.02 * want.norm(), "{mode:?} {x:?}: {got} vs {}", want[i]);
            }
        }
    }
}

#[test]
fn identical_regions_cannot_blow_up() {
    let grid = DirectionGrid::new(16).unwrap();
    let r = region([1.0, 0.0], 0.5, Variant::Field);
    let l = restriction_matrix(&background(), &r, &grid).unwrap();
    let w = grid.channel_weights(&reference_background());
    for delta in [1e-2, 1e-6] {
        let res = localize(&l, &l, &w, delta).unwrap();
        assert!(res.lambda <= 1.0 + 1e-8, "{}", res.lambda);
        assert!((res.ratio - 1.0).abs() < 1e-8);
    }
}

#[test]
fn localized_density_is_normalized() {
    let grid = DirectionGrid::new(16).unwrap();
    let bg = reference_background();
    let b = restriction_matrix(&background(), &region([-1.5, 0.0], 0.5, Variant::Field), &grid).unwrap();
    let d = restriction_matrix(&background(), &region([1.5, 0.0], 0.5, Variant::Field), &grid).unwrap();
    let res = localize(&b, &d, &grid.channel_weights(&bg), 1e-4).unwrap();
    let nrm = inner(&res.g, &res.g, &grid, &bg).unwrap();
    assert!((nrm.re - 1.0).abs() <= 1e-10 && nrm.im.abs() <= 1e-12);
    let lb = (&b * res.g.stacked()).norm();
    assert!((lb - res.norm_b).abs() < 1e-12 * lb);
    // Λ is the Rayleigh quotient of the regularized pencil
    let quotient = lb * lb / (res.norm_d * res.norm_d + 1e-4);
    assert!((quotient - res.lambda).abs() < 1e-6 * res.lambda);
}

#[test]
fn disjoint_regions_blow_up_as_regularization_shrinks() {
    let grid = DirectionGrid::new(32).unwrap();
    let b = region([-1.5, 0.0], 0.5, Variant::Field);
    let d = region([1.5, 0.0], 0.5, Variant::Field);
    let curve = localization_curve(&b, &d, &background(), &grid, &[1e-2, 1e-4, 1e-6]).unwrap();
    assert!(curve[2].ratio >= 10.0 * curve[0].ratio);
    for w in curve.windows(2) {
        assert!(w[1].ratio > w[0].ratio && w[1].norm_d < w[0].norm_d, "{curve:?}");
    }
    assert!(curve.iter().any(|p| p.ratio > 1e2));
    // swapping the regions swaps which field is large
    let swapped = localization_curve(&d, &b, &background(), &grid, &[1e-4]).unwrap();
    assert!(swapped[0].norm_b > 10.0 * swapped[0].norm_d);
}

#[test]
fn every_variant_blows_up_for_disjoint_regions() {
    let grid = DirectionGrid::new(32).unwrap();
    for j in 0..4 {
        let v = Variant::from_index(j).unwrap();
        let curve = localization_curve(
            &region([-1.5, 0.0], 0.5, v),
            &region([1.5, 0.0], 0.5, v),
            &background(),
            &grid,
            &[1e-2, 1e-6],
        )
        .unwrap();
        assert!(curve[1].ratio > curve[0].ratio && curve[1].ratio > 1e2, "variant {j}: {curve:?}");
    }
}

#[test]
fn subset_samples_bound_ratio_by_one() {
    let grid = DirectionGrid::new(16).unwrap();
    let d = region([0.0, 0.0], 1.0, Variant::Field);
    let inner_disk = Shape::disk([0.2, 0.1], 0.4);
    let keep: Vec<usize> = (0..d.points.len()).filter(|&i| inner_disk.contains(&d.points[i])).collect();
    let b = RegionSamples {
        shape: inner_disk,
        points: keep.iter().map(|&i| d.points[i]).collect(),
        weights: keep.iter().map(|&i| d.weights[i]).collect(),
        variant: Variant::Field,
    };
    let curve = localization_curve(&b, &d, &background(), &grid, &[1e-2, 1e-4, 1e-6]).unwrap();
    assert!(curve.iter().all(|p| p.ratio <= 1.0 + 1e-9), "{curve:?}");
}

#[test]
fn disk_medium_localization_runs() {
    let bg = reference_background();
    let field = MaterialField::new(bg, vec![Inclusion::new(Shape::disk([0.0, 0.0], 0.5), 0.5, 0.0, 0.0)]).unwrap();
    let grid = DirectionGrid::new(16).unwrap();
    let curve = localization_curve(
        &region([-1.5, 0.0], 0.4, Variant::SymGrad),
        &region([1.5, 0.0], 0.4, Variant::SymGrad),
        &field,
        &grid,
        &[1e-2, 1e-5],
    )
    .unwrap();
    assert!(curve[1].ratio > curve[0].ratio);
}

#[test]
fn curve_csv_layout() {
    let pts = [CurvePoint { delta: 0.01, ratio: 2.5, norm_b: 1.0, norm_d: 0.5 }];
    let mut buf = Vec::new();
    write_curve_csv(&pts, &mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "delta,ratio,norm_B,norm_D\n0.01,2.5,1.0,0.5\n");
}

#[test]
fn zero_density_maps_to_zero() {
    let grid = DirectionGrid::new(8).unwrap();
    let l = restriction_matrix(&background(), &region([0.0, 0.0], 0.3, Variant::SymGrad), &grid).unwrap();
    assert_eq!((l * DVector::<C>::zeros(16)).norm(), 0.0);
}
