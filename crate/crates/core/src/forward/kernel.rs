//! Background Navier fundamental solution and its cell integrals.
//!
//! `Γ(z) = (i/4μ0) H0(ks r) I + (i/(4ρ0ω²)) ∇∇[H0(ks r) − H0(kp r)]`.
//! Derivatives of a radial `f(r)` use `g_m = (r⁻¹ d/dr)^m f`; for
//! `f = H0(kr)` this is `g_m = (−k²)^m (kr)^{−m} H_m(kr)`.

use std::f64::consts::PI;

use gauss_quad::GaussLegendre;

use super::{C, I};
use crate::error::Result;
use crate::medium::{Background, Point};
use crate::specfun;

/// `Γ_ij`, `∂_kΓ_ij` and `∂_l∂_kΓ_ij` at one offset (or integrated over a cell).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct KernelBlock {
    pub g0: [[C; 2]; 2],
    pub g1: [[[C; 2]; 2]; 2],
    pub g2: [[[[C; 2]; 2]; 2]; 2],
}

impl KernelBlock {
    pub fn zero() -> Self {
        let z = C::new(0.0, 0.0);
        KernelBlock {
            g0: [[z; 2]; 2],
            g1: [[[z; 2]; 2]; 2],
            g2: [[[[z; 2]; 2]; 2]; 2],
        }
    }

    pub fn add_scaled(&mut self, o: &KernelBlock, w: f64) {
        for i in 0..2 {
            for j in 0..2 {
                self.g0[i][j] += o.g0[i][j] * w;
                for k in 0..2 {
                    self.g1[i][j][k] += o.g1[i][j][k] * w;
                    for l in 0..2 {
                        self.g2[i][j][k][l] += o.g2[i][j][k][l] * w;
                    }
                }
            }
        }
    }
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// `g_1..g_4` for `H0(k r)`.
fn radial_g(k: f64, r: f64) -> Result<[C; 5]> {
    let x = k * r;
    let h = specfun::hankel_table(4, x)?;
    let mut g = [C::new(0.0, 0.0); 5];
    g[0] = h[0];
    let mut fac = 1.0;
    for m in 1..5 {
        fac *= -k * k / x;
        g[m] = h[m] * fac;
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Navier {
    kp: f64,
    ks: f64,
    /// `i / (4 μ0)`
    a: C,
    /// `i / (4 ρ0 ω²)`
    c: C,
}

impl Navier {
    pub fn new(bg: &Background) -> Self {
        let w = bg.wavenumbers();
        Navier {
            kp: w.kp,
            ks: w.ks,
            a: I / (4.0 * bg.mu0),
            c: I / (4.0 * bg.rho0 * bg.omega * bg.omega),
        }
    }

    /// Point evaluation; `z ≠ 0`.
    pub fn point(&self, z: &Point) -> Result<KernelBlock> {
        let r = z.norm();
        let gs = radial_g(self.ks, r)?;
        let gp = radial_g(self.kp, r)?;
        let gd: Vec<C> = gs.iter().zip(&gp).map(|(s, p)| s - p).collect();
        let x = [z[0], z[1]];
        let mut out = KernelBlock::zero();
        for i in 0..2 {
            for j in 0..2 {
                let dij = delta(i, j);
                out.g0[i][j] = self.a * gs[0] * dij + self.c * (gd[1] * dij + gd[2] * (x[i] * x[j]));
                for k in 0..2 {
                    let sym3 = dij * x[k] + delta(i, k) * x[j] + delta(j, k) * x[i];
                    out.g1[i][j][k] = self.a * gs[1] * (dij * x[k])
                        + self.c * (gd[2] * sym3 + gd[3] * (x[i] * x[j] * x[k]));
                    for l in 0..2 {
                        let dd = dij * delta(k, l) + delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k);
                        let dxx = dij * x[k] * x[l]
                            + delta(i, k) * x[j] * x[l]
                            + delta(i, l) * x[j] * x[k]
                            + delta(j, k) * x[i] * x[l]
                            + delta(j, l) * x[i] * x[k]
                            + delta(k, l) * x[i] * x[j];
                        out.g2[i][j][k][l] = self.a * dij * (gs[1] * delta(k, l) + gs[2] * (x[k] * x[l]))
                            + self.c * (gd[2] * dd + gd[3] * dxx + gd[4] * (x[i] * x[j] * x[k] * x[l]));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Integral over the disk of radius `b` centred at the evaluation point,
    /// derivatives taken outside the integral.
    fn centred_disk(&self, b: f64) -> Result<KernelBlock> {
        let h1 = |k: f64| -> Result<C> { specfun::hankel1(1, k * b) };
        let (hs, hp) = (h1(self.ks)?, h1(self.kp)?);
        // ∫_{|y|<b} H0(k|y|) dy = 4i/k² + (2πb/k) H1(kb)
        let pot = |k: f64, h: C| I * (4.0 / (k * k)) + h * (2.0 * PI * b / k);
        // Hessian and fourth derivative of (2πb/k) H1(kb) J0(k|x|) at 0
        let hess = |k: f64, h: C| h * (-PI * b * k);
        let quart = |k: f64, h: C| h * (PI * b * k * k * k / 4.0);
        let mut out = KernelBlock::zero();
        let d2 = self.a * hess(self.ks, hs);
        let d2d = self.c * (hess(self.ks, hs) - hess(self.kp, hp));
        let d4d = self.c * (quart(self.ks, hs) - quart(self.kp, hp));
        for i in 0..2 {
            for j in 0..2 {
                let dij = delta(i, j);
                out.g0[i][j] = (self.a * pot(self.ks, hs) + d2d) * dij;
                for k in 0..2 {
                    for l in 0..2 {
                        let dd = dij * delta(k, l) + delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k);
                        out.g2[i][j][k][l] = d2 * (dij * delta(k, l)) + d4d * dd;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `∫ K(z + t) dt` over the square `|t|_∞ ≤ h/2`, with `order`² Gauss points.
    pub fn cell(&self, z: &Point, h: f64, order: usize) -> Result<KernelBlock> {
        if order <= 1 {
            let mut out = KernelBlock::zero();
            out.add_scaled(&self.point(z)?, h * h);
            return Ok(out);
        }
        let rule = gauss(order);
        let mut out = KernelBlock::zero();
        for &(s, ws) in &rule {
            for &(t, wt) in &rule {
                let p = Point::new(z[0] + 0.5 * h * s, z[1] + 0.5 * h * t);
                out.add_scaled(&self.point(&p)?, ws * wt * 0.25 * h * h);
            }
        }
        Ok(out)
    }

    /// Self-cell integral: analytic inscribed disk plus polar Gauss quadrature
    /// over the four corner regions.
    pub fn self_cell(&self, h: f64) -> Result<KernelBlock> {
        let b = 0.5 * h;
        let mut out = self.centred_disk(b)?;
        let rule = gauss(16);
        for face in 0..4 {
            let rot = face as f64 * PI / 2.0;
            for &(s, ws) in &rule {
                let phi = s * PI / 4.0;
                let rmax = b / phi.cos();
                let theta = rot + phi;
                for &(t, wt) in &rule {
                    let r = b + 0.5 * (rmax - b) * (t + 1.0);
                    let w = ws * (PI / 4.0) * wt * 0.5 * (rmax - b) * r;
                    let p = Point::new(r * theta.cos(), r * theta.sin());
                    out.add_scaled(&self.point(&p)?, w);
                }
            }
        }
        Ok(out)
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub(crate) fn gauss(n: usize) -> Vec<(f64, f64)> {
    let n = std::num::NonZeroUsize::new(n.max(1)).expect("nonzero");
    GaussLegendre::new(n).as_node_weight_pairs().to_vec()
}
