//! Direct transmission problem for plane-wave incidence.
//!
//! Two backends share the [`Solution`] trait: an analytic mode-matching series
//! for a single disk ([`series`]) and a Lippmann–Schwinger volume integral
//! solver on a Cartesian grid ([`grid`]) for general piecewise-constant media.

mod kernel;
pub mod grid;
pub mod series;

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::{Background, Point};

pub use grid::{solve_grid, GridOptions, GridScatterer, GridSolution};
pub use series::{solve_disk, DiskScatterer, SeriesSolution};

pub type C = Complex64;
pub type CVec2 = Vector2<C>;
pub type CMat2 = Matrix2<C>;

pub(crate) const I: C = C::new(0.0, 1.0);

/// Rotate anticlockwise by a quarter turn.
pub fn perp(d: &Point) -> Point {
    Point::new(-d[1], d[0])
}

pub fn unit(angle: f64) -> Point {
    Point::new(angle.cos(), angle.sin())
}

/// Incident polarisation: compressional or shear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    P,
    S,
}

impl Mode {
    pub fn wavenumber(self, bg: &Background) -> f64 {
        let w = bg.wavenumbers();
        match self {
            Mode::P => w.kp,
            Mode::S => w.ks,
        }
    }
}

/// `P`: `d e^{i kp0 x·d}`; `S`: `d⊥ e^{i ks0 x·d}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    pub mode: Mode,
    pub direction: Point,
}

impl PlaneWave {
    pub fn new(mode: Mode, direction: Point) -> Result<Self> {
        let n = direction.norm();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "plane-wave direction must be a unit vector (|d| = {n})"
            )));
        }
        Ok(PlaneWave { mode, direction })
    }

    pub fn from_angle(mode: Mode, angle: f64) -> Self {
        PlaneWave {
            mode,
            direction: unit(angle),
        }
    }

    pub fn angle(&self) -> f64 {
        self.direction[1].atan2(self.direction[0])
    }

    pub fn polarization(&self) -> Point {
        match self.mode {
            Mode::P => self.direction,
            Mode::S => perp(&self.direction),
        }
    }

    /// Field and gradient in the background medium.
    pub fn eval(&self, bg: &Background, x: &Point) -> FieldSample {
        let k = self.mode.wavenumber(bg);
        plane_wave_sample(k, &self.direction, &self.polarization(), x, C::new(1.0, 0.0))
    }
}

/// Weighted superposition `Σ a_j u_j` of plane waves.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidentField {
    pub waves: Vec<(PlaneWave, C)>,
}

impl IncidentField {
    pub fn eval(&self, bg: &Background, x: &Point) -> FieldSample {
        let mut out = FieldSample::default();
        for (pw, a) in &self.waves {
            let k = pw.mode.wavenumber(bg);
            out += plane_wave_sample(k, &pw.direction, &pw.polarization(), x, *a);
        }
        out
    }

    /// The single plane wave, when the field is one unit-amplitude wave.
    pub fn as_plane_wave(&self) -> Option<&PlaneWave> {
        match self.waves.as_slice() {
            [(pw, a)] if *a == C::new(1.0, 0.0) => Some(pw),
            _ => None,
        }
    }
}

impl From<PlaneWave> for IncidentField {
    fn from(pw: PlaneWave) -> Self {
        IncidentField {
            waves: vec![(pw, C::new(1.0, 0.0))],
        }
    }
}

/// `amp · p e^{i k d·x}` and its gradient `i k amp p dᵀ e^{i k d·x}`.
pub(crate) fn plane_wave_sample(k: f64, d: &Point, p: &Point, x: &Point, amp: C) -> FieldSample {
    let phase = C::from_polar(1.0, k * d.dot(x)) * amp;
    let u = CVec2::new(phase * p[0], phase * p[1]);
    let ik = I * k * phase;
    let grad = CMat2::new(ik * p[0] * d[0], ik * p[0] * d[1], ik * p[1] * d[0], ik * p[1] * d[1]);
    FieldSample { u, grad }
}

/// Displacement and its gradient at a point; `grad[(i, j)] = ∂_j u_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub u: CVec2,
    pub grad: CMat2,
}

impl Default for FieldSample {
    fn default() -> Self {
        FieldSample {
            u: CVec2::zeros(),
            grad: CMat2::zeros(),
        }
    }
}

impl std::ops::Add for FieldSample {
    type Output = FieldSample;
    fn add(self, o: FieldSample) -> FieldSample {
        FieldSample {
            u: self.u + o.u,
            grad: self.grad + o.grad,
        }
    }
}

impl std::ops::AddAssign for FieldSample {
    fn add_assign(&mut self, o: FieldSample) {
        self.u += o.u;
        self.grad += o.grad;
    }
}

impl std::ops::Sub for FieldSample {
    type Output = FieldSample;
    fn sub(self, o: FieldSample) -> FieldSample {
        FieldSample {
            u: self.u - o.u,
            grad: self.grad - o.grad,
        }
    }
}

impl std::ops::Mul<C> for FieldSample {
    type Output = FieldSample;
    fn mul(self, s: C) -> FieldSample {
        FieldSample {
            u: self.u * s,
            grad: self.grad * s,
        }
    }
}

impl FieldSample {
    pub fn div(&self) -> C {
        self.grad[(0, 0)] + self.grad[(1, 1)]
    }

    /// `∂_1 u_2 − ∂_2 u_1`.
    pub fn curl(&self) -> C {
        self.grad[(1, 0)] - self.grad[(0, 1)]
    }

    pub fn sym_grad(&self) -> CMat2 {
        (self.grad + self.grad.transpose()) * C::new(0.5, 0.0)
    }

    pub fn conj(&self) -> FieldSample {
        FieldSample {
            u: self.u.map(|z| z.conj()),
            grad: self.grad.map(|z| z.conj()),
        }
    }

    /// Stress vector `λ (∇·u) ν + μ (∇u + ∇uᵀ) ν`, which equals
    /// `2μ ∂_ν u + λ ν ∇·u − μ ν⊥ curl u`.
    pub fn traction(&self, lambda: f64, mu: f64, normal: &Point) -> CVec2 {
        let nu = CVec2::new(C::new(normal[0], 0.0), C::new(normal[1], 0.0));
        let sym = self.grad + self.grad.transpose();
        nu * (self.div() * lambda) + sym * nu * C::new(mu, 0.0)
    }

    /// Bilinear strain energy density
    /// `E_{λ,μ}(u, v) = 2μ ε(u):ε(v) + λ (∇·u)(∇·v)`, no conjugation.
    pub fn energy(&self, other: &FieldSample, lambda: f64, mu: f64) -> C {
        let a = self.sym_grad();
        let b = other.sym_grad();
        let mut frob = C::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                frob += a[(i, j)] * b[(i, j)];
            }
        }
        frob * (2.0 * mu) + self.div() * other.div() * lambda
    }
}

/// Bilinear dot product `a·b` without conjugation.
pub fn dot(a: &CVec2, b: &CVec2) -> C {
    a[0] * b[0] + a[1] * b[1]
}

/// Compressional and shear far-field amplitudes on a set of directions, in
/// the frame `u^sc ~ e^{i kp r}/√r u_p^∞ x̂ + e^{i ks r}/√r u_s^∞ x̂⊥`.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldPattern {
    pub angles: Vec<f64>,
    pub up: Vec<C>,
    pub us: Vec<C>,
}

impl FarFieldPattern {
    pub fn zeros(angles: &[f64]) -> Self {
        FarFieldPattern {
            angles: angles.to_vec(),
            up: vec![C::new(0.0, 0.0); angles.len()],
            us: vec![C::new(0.0, 0.0); angles.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Euclidean norm of the stacked `(up, us)` samples.
    pub fn l2_norm(&self) -> f64 {
        self.up
            .iter()
            .chain(self.us.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Relative ℓ² distance `‖self − other‖ / ‖other‖`.
    pub fn relative_error(&self, reference: &FarFieldPattern) -> f64 {
        let diff: f64 = self
            .up
            .iter()
            .zip(&reference.up)
            .chain(self.us.iter().zip(&reference.us))
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        diff.sqrt() / reference.l2_norm()
    }

    /// CSV with columns `angle,up_re,up_im,us_re,us_im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "angle,up_re,up_im,us_re,us_im")?;
        for ((a, p), s) in self.angles.iter().zip(&self.up).zip(&self.us) {
            writeln!(w, "{a:?},{:?},{:?},{:?},{:?}", p.re, p.im, s.re, s.im)?;
        }
        Ok(())
    }
}

/// Traction `T u` on a circle, evaluated with background Lamé parameters and
/// outward normal `x̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct StressTrace {
    pub radius: f64,
    pub angles: Vec<f64>,
    pub traction: Vec<CVec2>,
}

/// A solved forward problem.
pub trait Solution: Sync {
    fn background(&self) -> &Background;
    fn incident(&self) -> &IncidentField;

    /// Scattered field at `x` (outside the medium's support this is the
    /// radiating part; inside it is total minus incident).
    fn scattered(&self, x: &Point) -> Result<FieldSample>;

    /// Total field at `x`.
    fn total(&self, x: &Point) -> Result<FieldSample> {
        Ok(self.incident().eval(self.background(), x) + self.scattered(x)?)
    }

    fn far_field(&self, angles: &[f64]) -> Result<FarFieldPattern>;

    /// Smallest origin-centred radius beyond which the medium is background.
    fn support_radius(&self) -> f64;
}

/// Total field samples at a batch of points.
pub fn eval_field<S: Solution + ?Sized>(sol: &S, points: &[Point]) -> Result<Vec<FieldSample>> {
    points.iter().map(|x| sol.total(x)).collect()
}

/// Traction of the scattered field on `|x| = radius` at `nodes` uniform angles.
pub fn stress_trace<S: Solution + ?Sized>(sol: &S, radius: f64, nodes: usize) -> Result<StressTrace> {
    if radius <= sol.support_radius() {
        return Err(Error::InvalidInput(format!(
            "stress circle radius {radius} must exceed the support radius {}",
            sol.support_radius()
        )));
    }
    let bg = *sol.background();
    let angles: Vec<f64> = (0..nodes).map(|j| 2.0 * PI * j as f64 / nodes as f64).collect();
    let traction = angles
        .iter()
        .map(|&t| {
            let nu = unit(t);
            let f = sol.scattered(&(nu * radius))?;
            Ok(f.traction(bg.lambda0, bg.mu0, &nu))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StressTrace {
        radius,
        angles,
        traction,
    })
}
