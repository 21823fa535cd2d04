//! Mode-matching series for a single origin-centred disk.
//!
//! With `u = ∇φ + curl ψ` each angular mode `e^{inθ}` carries four amplitudes:
//! exterior `φ = a_n H_n(kp0 r)`, `ψ = b_n H_n(ks0 r)` and interior
//! `φ = c_n J_n(kp1 r)`, `ψ = d_n J_n(ks1 r)`. Continuity of `u_r, u_θ, t_r, t_θ`
//! at `r = a` gives a 4×4 system per mode.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};

use super::{FarFieldPattern, FieldSample, IncidentField, Mode, PlaneWave, Solution, CMat2, CVec2, C, I};
use crate::error::{Error, Result};
use crate::medium::{Background, Inclusion, Lame, Point, Shape, Wavenumbers};
use crate::specfun::{self, N_MAX};

/// Backward error accepted for a modal solve.
const MODAL_RESIDUAL: f64 = 1e-10;
/// Condition number of the equilibrated modal matrix treated as singular.
const SINGULAR_CONDITION: f64 = 1e12;
/// Required decay of the scattered far-field amplitudes at the last order.
const TAIL_DECAY: f64 = 1e-14;

/// Default truncation `ceil(ks·a + 4 (ks·a)^{1/3} + 12)`.
pub fn default_order(ks: f64, radius: f64) -> usize {
    let x = ks * radius;
    (x + 4.0 * x.cbrt() + 12.0).ceil() as usize
}

/// Radial factor of one mode: `Z_n(kr)` and `d/dx Z_n(x)` at `x = kr`.
#[derive(Clone, Copy)]
struct Radial {
    n: i32,
    k: f64,
    z: C,
    zp: C,
}

/// Displacement and gradient of one potential mode in the polar frame,
/// `e^{inθ}` factored out. `g = [[G_rr, G_rθ], [G_θr, G_θθ]]` with
/// `G_rθ = (∂_θ u_r − u_θ)/r`, `G_θθ = (∂_θ u_θ + u_r)/r`.
#[derive(Clone, Copy)]
struct Polar {
    u: [C; 2],
    g: [[C; 2]; 2],
}

fn mode_polar(kind: Mode, rad: Radial, r: f64) -> Polar {
    let Radial { n, k, z, zp } = rad;
    let x = k * r;
    let nf = n as f64;
    let zpp = -zp / x - z * (1.0 - nf * nf / (x * x));
    let inn = I * nf;
    // ∂_r u_r, ∂_θ u_r, ∂_r u_θ, ∂_θ u_θ
    let (ur, ut, drur, dtur, drut, dtut) = match kind {
        Mode::P => (
            zp * k,
            inn * z / r,
            zpp * (k * k),
            inn * zp * k,
            inn * (zp * k / r - z / (r * r)),
            -z * (nf * nf) / r,
        ),
        Mode::S => (
            inn * z / r,
            -zp * k,
            inn * (zp * k / r - z / (r * r)),
            -z * (nf * nf) / r,
            -zpp * (k * k),
            -inn * zp * k,
        ),
    };
    Polar {
        u: [ur, ut],
        g: [[drur, (dtur - ut) / r], [drut, (dtut + ur) / r]],
    }
}

impl Polar {
    /// `[u_r, u_θ, t_r, t_θ]` on the circle with outward normal `e_r`.
    fn matching_row(&self, lame: &Lame) -> [C; 4] {
        let g = &self.g;
        let tr = g[0][0] + g[1][1];
        [
            self.u[0],
            self.u[1],
            tr * lame.lambda + g[0][0] * (2.0 * lame.mu),
            (g[0][1] + g[1][0]) * lame.mu,
        ]
    }

    /// Rotate to Cartesian components at polar angle `theta`.
    fn to_cartesian(&self, theta: f64) -> FieldSample {
        let (s, c) = theta.sin_cos();
        let rot = CMat2::new(C::new(c, 0.0), C::new(-s, 0.0), C::new(s, 0.0), C::new(c, 0.0));
        let u = rot * CVec2::new(self.u[0], self.u[1]);
        let g = CMat2::new(self.g[0][0], self.g[0][1], self.g[1][0], self.g[1][1]);
        FieldSample {
            u,
            grad: rot * g * rot.transpose(),
        }
    }

    fn scale_add(&mut self, other: &Polar, s: C) {
        for i in 0..2 {
            self.u[i] += other.u[i] * s;
            for j in 0..2 {
                self.g[i][j] += other.g[i][j] * s;
            }
        }
    }

    fn zero() -> Polar {
        let z = C::new(0.0, 0.0);
        Polar {
            u: [z; 2],
            g: [[z; 2]; 2],
        }
    }
}

/// `Z_n, Z_n'` for `n = -m..=m` from a table of `|n| <= m + 1`.
fn radial_family(table: &[C], m: usize, k: f64) -> Vec<Radial> {
    let deriv = |n: usize| -> C {
        if n == 0 {
            -table[1]
        } else {
            (table[n - 1] - table[n + 1]) * 0.5
        }
    };
    (-(m as i32)..=m as i32)
        .map(|n| {
            let a = n.unsigned_abs() as usize;
            let s = if n < 0 && a % 2 == 1 { -1.0 } else { 1.0 };
            Radial {
                n,
                k,
                z: table[a] * s,
                zp: deriv(a) * s,
            }
        })
        .collect()
}

fn hankel_family(m: usize, k: f64, r: f64) -> Result<Vec<Radial>> {
    let t = specfun::hankel_table(m + 1, k * r)?;
    Ok(radial_family(&t, m, k))
}

fn bessel_family(m: usize, k: f64, r: f64) -> Result<Vec<Radial>> {
    let t: Vec<C> = specfun::j_table(m + 1, k * r)?
        .into_iter()
        .map(|v| C::new(v, 0.0))
        .collect();
    Ok(radial_family(&t, m, k))
}

/// Potential coefficients `(α_n, β_n)` of an incident field on `J_n(k r) e^{inθ}`.
fn incident_coefficients(inc: &IncidentField, w: &Wavenumbers, m: usize) -> (Vec<C>, Vec<C>) {
    let zero = C::new(0.0, 0.0);
    let mut alpha = vec![zero; 2 * m + 1];
    let mut beta = vec![zero; 2 * m + 1];
    for (pw, amp) in &inc.waves {
        let theta = pw.angle();
        for (idx, n) in (-(m as i32)..=m as i32).enumerate() {
            let base = I.powi(n) * C::from_polar(1.0, -(n as f64) * theta) * amp;
            match pw.mode {
                Mode::P => alpha[idx] += base / (I * w.kp),
                Mode::S => beta[idx] += base * (I / w.ks),
            }
        }
    }
    (alpha, beta)
}

/// Per-mode response of a disk to unit incident potential modes. The modal
/// matrices do not depend on the incident direction, so one scatterer serves
/// every plane wave.
#[derive(Debug, Clone)]
pub struct DiskScatterer {
    background: Background,
    interior: Lame,
    radius: f64,
    order: usize,
    k0: Wavenumbers,
    k1: Wavenumbers,
    /// `[a, b, c, d]` for a unit `J_n(kp0 r)` compressional potential.
    resp_p: Vec<[C; 4]>,
    /// Same for a unit `J_n(ks0 r)` shear potential.
    resp_s: Vec<[C; 4]>,
    transparent: bool,
}

impl DiskScatterer {
    /// `order = None` picks [`default_order`] with the larger shear wavenumber.
    pub fn new(background: Background, inclusion: &Inclusion, order: Option<usize>) -> Result<Self> {
        background.validate()?;
        let radius = match inclusion.shape {
            Shape::Disk { center, radius } => {
                if center[0] != 0.0 || center[1] != 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "series solver needs an origin-centred disk, got centre {center:?}"
                    )));
                }
                radius
            }
            _ => {
                return Err(Error::InvalidInput(
                    "series solver only handles a single disk".into(),
                ))
            }
        };
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("disk radius {radius} must be positive")));
        }
        let interior = inclusion.params(&background);
        let k0 = background.wavenumbers();
        let k1 = interior.wavenumbers(background.omega)?;
        let order = order.unwrap_or_else(|| default_order(k0.ks.max(k1.ks), radius));
        if order > N_MAX {
            return Err(Error::InvalidInput(format!(
                "truncation order {order} exceeds {N_MAX}"
            )));
        }
        let transparent = inclusion.is_inactive();
        let mut s = DiskScatterer {
            background,
            interior,
            radius,
            order,
            k0,
            k1,
            resp_p: Vec::new(),
            resp_s: Vec::new(),
            transparent,
        };
        s.solve_modes()?;
        if !transparent {
            s.check_tail()?;
        }
        Ok(s)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn background(&self) -> &Background {
        &self.background
    }

    pub fn interior(&self) -> &Lame {
        &self.interior
    }

    fn solve_modes(&mut self) -> Result<()> {
        let m = self.order;
        let a = self.radius;
        let bg = self.background.params();
        let inc_p = bessel_family(m, self.k0.kp, a)?;
        let inc_s = bessel_family(m, self.k0.ks, a)?;
        if self.transparent {
            let one = C::new(1.0, 0.0);
            let zero = C::new(0.0, 0.0);
            self.resp_p = vec![[zero, zero, one, zero]; 2 * m + 1];
            self.resp_s = vec![[zero, zero, zero, one]; 2 * m + 1];
            return Ok(());
        }
        let ext_p = hankel_family(m, self.k0.kp, a)?;
        let ext_s = hankel_family(m, self.k0.ks, a)?;
        let int_p = bessel_family(m, self.k1.kp, a)?;
        let int_s = bessel_family(m, self.k1.ks, a)?;
        for idx in 0..2 * m + 1 {
            let cols = [
                mode_polar(Mode::P, ext_p[idx], a).matching_row(&bg),
                mode_polar(Mode::S, ext_s[idx], a).matching_row(&bg),
                mode_polar(Mode::P, int_p[idx], a).matching_row(&self.interior),
                mode_polar(Mode::S, int_s[idx], a).matching_row(&self.interior),
            ];
            let mut mat = Matrix4::<C>::zeros();
            for (j, col) in cols.iter().enumerate() {
                let sign = if j < 2 { 1.0 } else { -1.0 };
                for i in 0..4 {
                    mat[(i, j)] = col[i] * sign;
                }
            }
            let rp = mode_polar(Mode::P, inc_p[idx], a).matching_row(&bg);
            let rs = mode_polar(Mode::S, inc_s[idx], a).matching_row(&bg);
            let rhs_p = -Vector4::from(rp);
            let rhs_s = -Vector4::from(rs);
            let n = idx as i32 - m as i32;
            let (xp, xs) = solve_modal(&mat, &rhs_p, &rhs_s, n)?;
            self.resp_p.push([xp[0], xp[1], xp[2], xp[3]]);
            self.resp_s.push([xs[0], xs[1], xs[2], xs[3]]);
        }
        Ok(())
    }

    /// Far-field amplitude of the last retained order relative to the largest.
    fn check_tail(&self) -> Result<()> {
        let cp = self.k0.kp.sqrt();
        let cs = self.k0.ks.sqrt();
        let amp = |r: &[C; 4], scale: f64| (r[0].norm() * cp).max(r[1].norm() * cs) * scale;
        // unit plane-wave potentials carry 1/k in front of the mode response
        let mag = |idx: usize| {
            amp(&self.resp_p[idx], 1.0 / self.k0.kp).max(amp(&self.resp_s[idx], 1.0 / self.k0.ks))
        };
        let peak = (0..self.resp_p.len()).map(mag).fold(0.0, f64::max);
        if peak == 0.0 {
            return Ok(());
        }
        let m = self.order;
        let tail = mag(0).max(mag(2 * m)) / peak;
        if tail > TAIL_DECAY {
            return Err(Error::TruncationOverflow { order: m, tail });
        }
        Ok(())
    }

    /// Modal coefficients for one plane wave.
    pub fn solve(&self, incident: &PlaneWave) -> SeriesSolution {
        self.solve_field(&IncidentField::from(*incident))
    }

    /// Modal coefficients for a superposition of plane waves.
    pub fn solve_field(&self, incident: &IncidentField) -> SeriesSolution {
        let m = self.order;
        let (alpha, beta) = incident_coefficients(incident, &self.k0, m);
        let zero = C::new(0.0, 0.0);
        let mut coef = [
            vec![zero; 2 * m + 1],
            vec![zero; 2 * m + 1],
            vec![zero; 2 * m + 1],
            vec![zero; 2 * m + 1],
        ];
        for idx in 0..2 * m + 1 {
            for (f, c) in coef.iter_mut().enumerate() {
                c[idx] = self.resp_p[idx][f] * alpha[idx] + self.resp_s[idx][f] * beta[idx];
            }
        }
        let [a, b, c, d] = coef;
        SeriesSolution {
            background: self.background,
            interior: self.interior,
            radius: self.radius,
            order: m,
            k0: self.k0,
            k1: self.k1,
            incident: incident.clone(),
            ext_p: a,
            ext_s: b,
            int_p: c,
            int_s: d,
        }
    }
}

/// Solve one equilibrated modal system for both right-hand sides.
fn solve_modal(
    mat: &Matrix4<C>,
    rhs_p: &Vector4<C>,
    rhs_s: &Vector4<C>,
    n: i32,
) -> Result<(Vector4<C>, Vector4<C>)> {
    let mut scaled = *mat;
    let mut row_s = [1.0; 4];
    for (i, rs) in row_s.iter_mut().enumerate() {
        let m = scaled.row(i).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if m == 0.0 {
            return Err(Error::SingularMode { mode: n, condition: f64::INFINITY });
        }
        *rs = 1.0 / m;
        for j in 0..4 {
            scaled[(i, j)] *= *rs;
        }
    }
    let mut col_s = [1.0; 4];
    for (j, cs) in col_s.iter_mut().enumerate() {
        let m = scaled.column(j).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if m == 0.0 {
            return Err(Error::SingularMode { mode: n, condition: f64::INFINITY });
        }
        *cs = 1.0 / m;
        for i in 0..4 {
            scaled[(i, j)] *= *cs;
        }
    }
    let sv = scaled.singular_values();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let condition = smax / smin;
    if !condition.is_finite() || condition > SINGULAR_CONDITION {
        return Err(Error::SingularMode { mode: n, condition });
    }
    let lu = scaled.lu();
    let mut out = Vec::with_capacity(2);
    for rhs in [rhs_p, rhs_s] {
        let b = Vector4::from_fn(|i, _| rhs[i] * row_s[i]);
        let y = lu
            .solve(&b)
            .ok_or(Error::SingularMode { mode: n, condition })?;
        let x = Vector4::from_fn(|j, _| y[j] * col_s[j]);
        let res = (mat * x - rhs).norm();
        let scale = mat.norm() * x.norm() + rhs.norm();
        if scale > 0.0 && res > MODAL_RESIDUAL * scale {
            return Err(Error::NonConvergence {
                iterations: 1,
                residual: res / scale,
            });
        }
        out.push(x);
    }
    Ok((out[0], out[1]))
}

/// Analytic solution for one plane wave on a disk.
#[derive(Debug, Clone)]
pub struct SeriesSolution {
    pub background: Background,
    pub interior: Lame,
    pub radius: f64,
    pub order: usize,
    pub k0: Wavenumbers,
    pub k1: Wavenumbers,
    pub incident: IncidentField,
    /// Exterior compressional Hankel amplitudes, index `n + order`.
    pub ext_p: Vec<C>,
    /// Exterior shear Hankel amplitudes.
    pub ext_s: Vec<C>,
    /// Interior compressional Bessel amplitudes.
    pub int_p: Vec<C>,
    /// Interior shear Bessel amplitudes.
    pub int_s: Vec<C>,
}

/// Solve the transmission problem for an origin-centred disk.
pub fn solve_disk(
    background: Background,
    inclusion: &Inclusion,
    incident: &PlaneWave,
    order: Option<usize>,
) -> Result<SeriesSolution> {
    Ok(DiskScatterer::new(background, inclusion, order)?.solve(incident))
}

/// Points closer than this to the interface are rejected.
const BOUNDARY_GAP: f64 = 1e-9;

impl SeriesSolution {
    /// Modal sum of `coef_p` on P modes and `coef_s` on S modes.
    fn modal_sum(
        &self,
        coef_p: &[C],
        coef_s: &[C],
        fam_p: &[Radial],
        fam_s: &[Radial],
        r: f64,
        theta: f64,
    ) -> FieldSample {
        let mut acc = Polar::zero();
        for idx in 0..coef_p.len() {
            let n = idx as i32 - self.order as i32;
            let e = C::from_polar(1.0, n as f64 * theta);
            if coef_p[idx] != C::new(0.0, 0.0) {
                acc.scale_add(&mode_polar(Mode::P, fam_p[idx], r), coef_p[idx] * e);
            }
            if coef_s[idx] != C::new(0.0, 0.0) {
                acc.scale_add(&mode_polar(Mode::S, fam_s[idx], r), coef_s[idx] * e);
            }
        }
        acc.to_cartesian(theta)
    }

    fn eval_at(&self, x: &Point) -> Result<(FieldSample, bool)> {
        let r = x.norm();
        let a = self.radius;
        if (r - a).abs() < BOUNDARY_GAP * a.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "point at |x| = {r} is within {BOUNDARY_GAP} of the disk boundary"
            )));
        }
        let m = self.order;
        if r > a {
            let theta = x[1].atan2(x[0]);
            let fp = hankel_family(m, self.k0.kp, r)?;
            let fs = hankel_family(m, self.k0.ks, r)?;
            Ok((self.modal_sum(&self.ext_p, &self.ext_s, &fp, &fs, r, theta), false))
        } else if r < 1e-6 * a {
            // the polar frame degenerates at the centre; average two mirror points
            let eps = 1e-5 * a;
            let one = self.interior_at(eps, 0.0)?;
            let two = self.interior_at(eps, PI)?;
            Ok(((one + two) * C::new(0.5, 0.0), true))
        } else {
            Ok((self.interior_at(r, x[1].atan2(x[0]))?, true))
        }
    }

    fn interior_at(&self, r: f64, theta: f64) -> Result<FieldSample> {
        let m = self.order;
        let fp = bessel_family(m, self.k1.kp, r)?;
        let fs = bessel_family(m, self.k1.ks, r)?;
        Ok(self.modal_sum(&self.int_p, &self.int_s, &fp, &fs, r, theta))
    }

    /// Far-field amplitudes from the large-argument Hankel asymptotics.
    pub fn pattern(&self, angles: &[f64]) -> FarFieldPattern {
        let m = self.order as i32;
        let kp = self.k0.kp;
        let ks = self.k0.ks;
        let e = C::from_polar(1.0, -PI / 4.0);
        let cp = I * kp * (2.0 / (PI * kp)).sqrt() * e;
        let cs = -I * ks * (2.0 / (PI * ks)).sqrt() * e;
        let mut out = FarFieldPattern::zeros(angles);
        for (t, &theta) in angles.iter().enumerate() {
            let mut sp = C::new(0.0, 0.0);
            let mut ss = C::new(0.0, 0.0);
            for n in -m..=m {
                let idx = (n + m) as usize;
                let w = (-I).powi(n) * C::from_polar(1.0, n as f64 * theta);
                sp += self.ext_p[idx] * w;
                ss += self.ext_s[idx] * w;
            }
            out.up[t] = cp * sp;
            out.us[t] = cs * ss;
        }
        out
    }
}

impl Solution for SeriesSolution {
    fn background(&self) -> &Background {
        &self.background
    }

    fn incident(&self) -> &IncidentField {
        &self.incident
    }

    fn scattered(&self, x: &Point) -> Result<FieldSample> {
        let (f, inside) = self.eval_at(x)?;
        if inside {
            Ok(f - self.incident.eval(&self.background, x))
        } else {
            Ok(f)
        }
    }

    fn total(&self, x: &Point) -> Result<FieldSample> {
        let (f, inside) = self.eval_at(x)?;
        if inside {
            Ok(f)
        } else {
            Ok(f + self.incident.eval(&self.background, x))
        }
    }

    fn far_field(&self, angles: &[f64]) -> Result<FarFieldPattern> {
        Ok(self.pattern(angles))
    }

    fn support_radius(&self) -> f64 {
        self.radius
    }
}
