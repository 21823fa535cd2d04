mod common;

use std::f64::consts::PI;

use common::{angles, origin_disk, reference_background};
use elastic_monotonicity::forward::series::default_order;
use elastic_monotonicity::forward::*;
use elastic_monotonicity::medium::{MaterialField, Point};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn near_field_approaches_far_field_at_two_hundred_wavelengths() {
    let bg = reference_background();
    let w = bg.wavenumbers();
    let inc = origin_disk(1.0, 0.5, 0.3, 0.4);
    for mode in [Mode::P, Mode::S] {
        let sol = solve_disk(bg, &inc, &PlaneWave::from_angle(mode, 0.6), None).unwrap();
        let r = 200.0 * 2.0 * PI / w.kp;
        let ts = angles(12);
        let ff = sol.far_field(&ts).unwrap();
        for (i, &t) in ts.iter().enumerate() {
            let xh = unit(t);
            let u = sol.scattered(&(xh * r)).unwrap().u;
            // split into radial and tangential parts, strip e^{ikr}/√r
            let ur = u[0] * xh[0] + u[1] * xh[1];
            let ut = u[0] * (-xh[1]) + u[1] * xh[0];
            let up = ur * r.sqrt() * C::from_polar(1.0, -w.kp * r);
            let us = ut * r.sqrt() * C::from_polar(1.0, -w.ks * r);
            // relative to the peak amplitude of the pattern
            let scale = ff.up.iter().chain(&ff.us).map(|z| z.norm()).fold(0.0, f64::max);
            assert!((up - ff.up[i]).norm() < 1e-3 * scale, "{mode:?} p at {t}: {up} vs {} scale {scale}", ff.up[i]);
            assert!((us - ff.us[i]).norm() < 1e-3 * scale, "{mode:?} s at {t}: {us} vs {} scale {scale}", ff.us[i]);
        }
    }
}

#[test]
fn series_gradient_matches_finite_differences() {
    let bg = reference_background();
    let sol = solve_disk(bg, &origin_disk(1.0, 0.6, 0.4, 0.2), &PlaneWave::from_angle(Mode::S, 1.2), None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let e = 1e-6;
    let mut n = 0;
    while n < 10 {
        let x = Point::new(rng.gen_range(-2.5..2.5), rng.gen_range(-2.5..2.5));
        if (x.norm() - 1.0).abs() < 0.05 {
            continue;
        }
        n += 1;
        let f = sol.total(&x).unwrap();
        for j in 0..2 {
            let mut d = Point::zeros();
            d[j] = e;
            let fd = (sol.total(&(x + d)).unwrap().u - sol.total(&(x - d)).unwrap().u) / C::new(2.0 * e, 0.0);
            for i in 0..2 {
                let rel = (fd[i] - f.grad[(i, j)]).norm() / f.grad.norm();
                assert!(rel < 1e-6, "∂_{j}u_{i} at {x:?}: {rel}");
            }
        }
    }
}

#[test]
fn disk_far_field_is_rotation_covariant() {
    let bg = reference_background();
    let inc = origin_disk(1.0, 0.4, 0.2, 0.5);
    let s = DiskScatterer::new(bg, &inc, None).unwrap();
    let rot = 0.77;
    for mode in [Mode::P, Mode::S] {
        let a = s.solve(&PlaneWave::from_angle(mode, 0.3)).pattern(&[0.1, 2.0, 4.5]);
        let b = s.solve(&PlaneWave::from_angle(mode, 0.3 + rot)).pattern(&[0.1 + rot, 2.0 + rot, 4.5 + rot]);
        assert!(b.relative_error(&a) < 1e-12);
    }
}

#[test]
fn truncation_self_convergence() {
    let bg = reference_background();
    let ts = angles(64);
    for radius in [0.5, 1.0, 4.0] {
        let inc = origin_disk(radius, 0.5, 0.5, 0.5);
        let ks = bg.wavenumbers().ks.max(inc.params(&bg).wavenumbers(bg.omega).unwrap().ks);
        assert!(ks * radius <= 8.0 + 1e-12 || radius == 4.0);
        let m = default_order(ks, radius);
        for mode in [Mode::P, Mode::S] {
            let pw = PlaneWave::from_angle(mode, 0.5);
            let a = solve_disk(bg, &inc, &pw, Some(m)).unwrap().pattern(&ts);
            let b = solve_disk(bg, &inc, &pw, Some(m + 8)).unwrap().pattern(&ts);
            assert!(b.relative_error(&a) <= 1e-8, "a={radius}");
        }
    }
}

#[test]
fn stress_trace_matches_finite_difference_stress() {
    let bg = reference_background();
    let sol = solve_disk(bg, &origin_disk(1.0, 0.3, 0.3, 0.3), &PlaneWave::from_angle(Mode::P, 0.2), None).unwrap();
    let tr = stress_trace(&sol, 1.7, 32).unwrap();
    let e = 1e-6;
    for (t, tv) in tr.angles.iter().zip(&tr.traction) {
        let nu = unit(*t);
        let x = nu * 1.7;
        let mut grad = CMat2::zeros();
        for j in 0..2 {
            let mut d = Point::zeros();
            d[j] = e;
            let du = (sol.scattered(&(x + d)).unwrap().u - sol.scattered(&(x - d)).unwrap().u) / C::new(2.0 * e, 0.0);
            grad[(0, j)] = du[0];
            grad[(1, j)] = du[1];
        }
        let fd = FieldSample { u: CVec2::zeros(), grad }.traction(bg.lambda0, bg.mu0, &nu);
        assert!((fd - tv).norm() < 1e-6 * tv.norm().max(1.0));
    }
    assert!(stress_trace(&sol, 0.9, 8).is_err());
}

#[test]
fn scattered_energy_flux_is_outgoing() {
    let bg = reference_background();
    let s = DiskScatterer::new(bg, &origin_disk(1.0, 0.8, 0.5, 0.3), None).unwrap();
    for mode in [Mode::P, Mode::S] {
        for d in [0.0, 1.3, 4.0] {
            let sol = s.solve(&PlaneWave::from_angle(mode, d));
            let tr = stress_trace(&sol, 2.0, 256).unwrap();
            let mut flux = 0.0;
            for (t, tv) in tr.angles.iter().zip(&tr.traction) {
                let u = sol.scattered(&(unit(*t) * 2.0)).unwrap().u;
                flux += (u[0].conj() * tv[0] + u[1].conj() * tv[1]).im;
            }
            assert!(flux > 0.0, "{mode:?} {d}: {flux}");
        }
    }
}

#[test]
fn pressure_wave_traction_formula() {
    let bg = reference_background();
    let kp = bg.wavenumbers().kp;
    let pw = PlaneWave::from_angle(Mode::P, 2.1);
    let x = Point::new(-0.7, 1.9);
    let nu = x / x.norm();
    let t = pw.eval(&bg, &x).traction(bg.lambda0, bg.mu0, &nu);
    let e = C::from_polar(1.0, kp * pw.direction.dot(&x));
    for i in 0..2 {
        let want = C::new(0.0, kp) * e * (2.0 * bg.mu0 * pw.direction.dot(&nu) * pw.direction[i] + bg.lambda0 * nu[i]);
        assert!((t[i] - want).norm() < 1e-14);
    }
}

#[test]
fn grid_density_disk_matches_series_and_converges() {
    let bg = reference_background();
    let inc = origin_disk(1.0, 0.0, 0.0, 0.3);
    let field = MaterialField::new(bg, vec![inc.clone()]).unwrap();
    let ts = angles(32);
    let pw = PlaneWave::from_angle(Mode::P, 0.0);
    let oracle = solve_disk(bg, &inc, &pw, None).unwrap().pattern(&ts);
    let coarse = solve_grid(&field, &pw, 1.0 / 32.0).unwrap().pattern(&ts).relative_error(&oracle);
    let fine = solve_grid(&field, &pw, 1.0 / 64.0).unwrap().pattern(&ts).relative_error(&oracle);
    assert!(coarse <= 0.02, "{coarse}");
    assert!(coarse / fine >= 1.5, "{coarse} -> {fine}");
}

#[test]
fn grid_result_independent_of_padding() {
    let bg = reference_background();
    let inc = origin_disk(0.5, 0.3, 0.2, 0.3);
    let field = MaterialField::new(bg, vec![inc]).unwrap();
    let pw = PlaneWave::from_angle(Mode::S, 1.0);
    let ts = angles(16);
    let mut o = GridOptions::new(0.05);
    let a = GridScatterer::new(&field, o).unwrap().solve(&pw).unwrap().pattern(&ts);
    o.padding = 7;
    let b = GridScatterer::new(&field, o).unwrap().solve(&pw).unwrap().pattern(&ts);
    assert!(b.relative_error(&a) < 1e-7);
}

#[test]
fn grid_field_outside_support_matches_series() {
    let bg = reference_background();
    let inc = origin_disk(0.5, 0.0, 0.0, 0.3);
    let field = MaterialField::new(bg, vec![inc.clone()]).unwrap();
    let pw = PlaneWave::from_angle(Mode::P, 0.4);
    let g = solve_grid(&field, &pw, 0.5 / 32.0).unwrap();
    let s = solve_disk(bg, &inc, &pw, None).unwrap();
    for x in [Point::new(1.5, 0.2), Point::new(-0.3, -2.0), Point::new(0.1, 0.2)] {
        let a = g.scattered(&x).unwrap().u;
        let b = s.scattered(&x).unwrap().u;
        assert!((a - b).norm() < 0.02 * b.norm(), "{x:?}: {a} vs {b}");
    }
}

#[test]
fn pattern_csv_has_header_and_rows() {
    let bg = reference_background();
    let sol = solve_disk(bg, &origin_disk(1.0, 0.0, 0.0, 0.5), &PlaneWave::from_angle(Mode::P, 0.0), None).unwrap();
    let mut buf = Vec::new();
    sol.pattern(&angles(8)).write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "angle,up_re,up_im,us_re,us_im");
    assert_eq!(lines.len(), 9);
    assert_eq!(lines[3].split(',').count(), 5);
}
