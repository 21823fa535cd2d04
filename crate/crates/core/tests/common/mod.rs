#![allow(dead_code)]

use std::f64::consts::PI;

use elastic_monotonicity::medium::{Background, Inclusion, Shape};

/// Reference scene background.
pub fn reference_background() -> Background {
    Background::new(2.0, 1.0, 1.0, 2.0).unwrap()
}

pub fn origin_disk(radius: f64, psi_lambda: f64, psi_mu: f64, psi_rho: f64) -> Inclusion {
    Inclusion::new(Shape::disk([0.0, 0.0], radius), psi_lambda, psi_mu, psi_rho)
}

/// Composite Gauss–Legendre on `[a, b]` with `panels` panels of 20 points.
fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let rule = gauss_quad::GaussLegendre::new(20.try_into().unwrap());
    let nodes = rule.as_node_weight_pairs();
    let w = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * w;
        for &(x, wt) in nodes {
            s += wt * f(lo + 0.5 * w * (x + 1.0));
        }
    }
    0.5 * w * s
}

/// Bessel's integral `J_n(x) = (1/π) ∫_0^π cos(nτ − x sin τ) dτ`.
pub fn oracle_j(n: i32, x: f64) -> f64 {
    let panels = 8 + (x.abs() + n.abs() as f64) as usize / 2;
    integrate(|t| (n as f64 * t - x * t.sin()).cos(), 0.0, PI, panels) / PI
}

/// Schläfli's integral
/// `Y_n(x) = (1/π) ∫_0^π sin(x sin τ − nτ) dτ − (1/π) ∫_0^∞ (e^{nt} + (−1)^n e^{−nt}) e^{−x sinh t} dt`.
pub fn oracle_y(n: i32, x: f64) -> f64 {
    let panels = 8 + (x.abs() + n.abs() as f64) as usize / 2;
    let first = integrate(|t| (x * t.sin() - n as f64 * t).sin(), 0.0, PI, panels) / PI;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    // the integrand decays like exp(-x sinh t); cut where it is negligible
    let upper = ((40.0 + n as f64 * 5.0) / x).asinh().max(1.0) + 2.0;
    let tail_panels = 200;
    let second = integrate(
        |t| ((n as f64 * t - x * t.sinh()).exp()) + sign * (-(n as f64) * t - x * t.sinh()).exp(),
        0.0,
        upper,
        tail_panels,
    ) / PI;
    first - second
}

/// Log-spaced grid of `n` points on `[a, b]`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn angles(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}
