//! Numerical checks of the far-field energy identity and the three-term
//! integral identity behind the monotonicity relations.
//!
//! The identities are stated for `ρ0 = 1`; for general background density the
//! far-field sides carry an extra factor `ρ0`, because the traction of an
//! outgoing wave is `i ρ0 ω²/k` times its displacement.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::farfield::{herglotz_incident, inner, Backend, DirectionGrid, FarFieldOperator, HerglotzDensity};
use crate::forward::{dot, unit, DiskScatterer, FieldSample, IncidentField, SeriesSolution, Solution, C, I};
use crate::medium::{MaterialField, Point, Shape};

/// Both sides of an identity and their difference relative to `scale`, the
/// larger of `|lhs|`, `|rhs|` and the summed magnitudes of the left-hand terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: C,
    pub rhs: C,
    pub scale: f64,
    pub residual: f64,
}

impl IdentityCheck {
    fn new(lhs: C, rhs: C, terms: f64) -> Self {
        let scale = lhs.norm().max(rhs.norm()).max(terms);
        let residual = if scale == 0.0 { 0.0 } else { (lhs - rhs).norm() / scale };
        IdentityCheck { lhs, rhs, scale, residual }
    }
}

/// Polar midpoint rule on `B_R`: `radial × angular` cells, with radial cell
/// edges placed on every disk boundary inside the ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VolumeGrid {
    pub radial: usize,
    pub angular: usize,
}

impl VolumeGrid {
    pub fn new(radial: usize, angular: usize) -> Self {
        VolumeGrid { radial, angular }
    }

    /// Points and weights; `breaks` are interface radii in `(0, radius)`.
    fn nodes(&self, radius: f64, breaks: &[f64]) -> Result<Vec<(Point, f64)>> {
        let mut edges: Vec<f64> = breaks.iter().cloned().filter(|&b| b > 0.0 && b < radius).collect();
        edges.push(0.0);
        edges.push(radius);
        edges.sort_by(|a, b| a.total_cmp(b));
        edges.dedup();
        let segments = edges.len() - 1;
        if self.radial < segments || self.angular == 0 {
            return Err(Error::InvalidInput(format!(
                "volume grid {}×{} too coarse for {segments} radial segments",
                self.radial, self.angular
            )));
        }
        // split radial cells across segments in proportion to length
        let mut counts: Vec<usize> = edges
            .windows(2)
            .map(|w| (((w[1] - w[0]) / radius * self.radial as f64).round() as usize).max(1))
            .collect();
        let total: usize = counts.iter().sum();
        let last = counts.len() - 1;
        counts[last] = (counts[last] as isize + self.radial as isize - total as isize).max(1) as usize;
        let dt = 2.0 * PI / self.angular as f64;
        let mut out = Vec::new();
        for (w, &m) in edges.windows(2).zip(&counts) {
            let dr = (w[1] - w[0]) / m as f64;
            for i in 0..m {
                let r = w[0] + (i as f64 + 0.5) * dr;
                for k in 0..self.angular {
                    let t = (k as f64 + 0.5) * dt;
                    out.push((unit(t) * r, r * dr * dt));
                }
            }
        }
        Ok(out)
    }
}

/// A medium solved for one Herglotz incidence with the series solver.
struct Solved {
    field: MaterialField,
    incident: IncidentField,
    series: Option<SeriesSolution>,
}

impl Solved {
    fn new(field: &MaterialField, incident: &IncidentField) -> Result<Self> {
        field.validate()?;
        let active: Vec<_> = field.active_inclusions().collect();
        let series = match active.as_slice() {
            [] => None,
            [inc] => Some(DiskScatterer::new(field.background, inc, None)?.solve_field(incident)),
            _ => {
                return Err(Error::InvalidInput(
                    "identity checks need at most one origin-centred disk".into(),
                ))
            }
        };
        Ok(Solved {
            field: field.clone(),
            incident: incident.clone(),
            series,
        })
    }

    fn support_radius(&self) -> f64 {
        self.series.as_ref().map_or(0.0, |s| s.support_radius())
    }

    fn total(&self, x: &Point) -> Result<FieldSample> {
        match &self.series {
            Some(s) => s.total(x),
            None => Ok(self.incident.eval(&self.field.background, x)),
        }
    }

    fn scattered(&self, x: &Point) -> Result<FieldSample> {
        match &self.series {
            Some(s) => s.scattered(x),
            None => Ok(FieldSample::default()),
        }
    }
}

fn disk_radii(field: &MaterialField) -> Vec<f64> {
    field
        .active_inclusions()
        .filter_map(|inc| match inc.shape {
            Shape::Disk { radius, .. } => Some(radius),
            _ => None,
        })
        .collect()
}

fn check_radius(radius: f64, support: f64, nodes: usize) -> Result<()> {
    if !(radius > support && radius.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "circle radius {radius} must exceed the support radius {support}"
        )));
    }
    if nodes < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 boundary nodes, got {nodes}")));
    }
    Ok(())
}

/// Trapezoid rule for `∮_{|x|=R} f(x, ν) ds`.
fn circle_integral<F>(radius: f64, nodes: usize, f: F) -> Result<C>
where
    F: Fn(&Point, &Point) -> Result<C> + Sync,
{
    let ds = 2.0 * PI * radius / nodes as f64;
    let parts = (0..nodes)
        .into_par_iter()
        .map(|j| {
            let nu = unit(2.0 * PI * j as f64 / nodes as f64);
            f(&(nu * radius), &nu)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().sum::<C>() * ds)
}

fn far_field_density(f: &FarFieldOperator, g: &HerglotzDensity) -> Result<HerglotzDensity> {
    let p = f.apply(g)?;
    Ok(HerglotzDensity { gp: p.up, gs: p.us })
}

/// `ρ0 ⟨g, F g⟩` against `(8πω)^{-1/2} ∮ (T0 v_g · ū^sc − T0 ū^sc · v_g) ds`
/// on `|x| = radius` with `nodes` trapezoid nodes.
pub fn check_energy_identity(
    field: &MaterialField,
    grid: DirectionGrid,
    g: &HerglotzDensity,
    radius: f64,
    nodes: usize,
) -> Result<IdentityCheck> {
    let bg = field.background;
    let inc = herglotz_incident(g, &grid, &bg)?;
    let solved = Solved::new(field, &inc)?;
    check_radius(radius, solved.support_radius(), nodes)?;
    if solved.series.is_none() {
        return Ok(IdentityCheck::new(C::new(0.0, 0.0), C::new(0.0, 0.0), 0.0));
    }
    let f = FarFieldOperator::assemble(field, grid, Backend::Series { order: None })?;
    let lhs = inner(g, &far_field_density(&f, g)?, &grid, &bg)? * bg.rho0;
    let integral = circle_integral(radius, nodes, |x, nu| {
        let v = inc.eval(&bg, x);
        let us = solved.scattered(x)?.conj();
        let tv = v.traction(bg.lambda0, bg.mu0, nu);
        let tu = us.traction(bg.lambda0, bg.mu0, nu);
        Ok(dot(&tv, &us.u) - dot(&tu, &v.u))
    })?;
    let rhs = integral / (8.0 * PI * bg.omega).sqrt();
    Ok(IdentityCheck::new(lhs, rhs, 0.0))
}

/// Three-term identity for two media sharing a background:
///
/// `ρ0 [√(8πω)(⟨F₁g, g⟩ − ⟨g, F₂g⟩) − 2iω⟨F₁g, F₂g⟩]`
/// against the boundary term `∮ (ū₂ − ū₁)·(T₂u₂ − T₁u₁) ds` plus
/// `∫ ρ₂ω²|u₂ − u₁|² − E₂(u₁ − u₂, ū₁ − ū₂) + E₂(ū₁, u₁) − E₁(ū₁, u₁) + (ρ₁ − ρ₂)ω²|u₁|²`
/// over `B_R`, all with total fields.
pub fn check_main_identity(
    field1: &MaterialField,
    field2: &MaterialField,
    grid: DirectionGrid,
    g: &HerglotzDensity,
    radius: f64,
    nodes: usize,
    volume: VolumeGrid,
) -> Result<IdentityCheck> {
    let bg = field1.background;
    if field2.background != bg {
        return Err(Error::InvalidInput("both media must share the background".into()));
    }
    let inc = herglotz_incident(g, &grid, &bg)?;
    let s1 = Solved::new(field1, &inc)?;
    let s2 = Solved::new(field2, &inc)?;
    check_radius(radius, s1.support_radius().max(s2.support_radius()), nodes)?;

    let backend = Backend::Series { order: None };
    let f1g = far_field_density(&FarFieldOperator::assemble(field1, grid, backend)?, g)?;
    let f2g = far_field_density(&FarFieldOperator::assemble(field2, grid, backend)?, g)?;
    let w = bg.omega;
    let a = inner(&f1g, g, &grid, &bg)? * (8.0 * PI * w).sqrt() * bg.rho0;
    let b = inner(g, &f2g, &grid, &bg)? * (8.0 * PI * w).sqrt() * bg.rho0;
    let c = I * 2.0 * w * bg.rho0 * inner(&f1g, &f2g, &grid, &bg)?;
    let lhs = a - b - c;

    let boundary = circle_integral(radius, nodes, |x, nu| {
        let u1 = s1.total(x)?;
        let u2 = s2.total(x)?;
        let t = u2.traction(bg.lambda0, bg.mu0, nu) - u1.traction(bg.lambda0, bg.mu0, nu);
        Ok(dot(&(u2 - u1).conj().u, &t))
    })?;

    let mut breaks = disk_radii(field1);
    breaks.extend(disk_radii(field2));
    let nodes_v = volume.nodes(radius, &breaks)?;
    let w2 = w * w;
    let parts = nodes_v
        .par_iter()
        .map(|(y, wt)| {
            let u1 = s1.total(y)?;
            let u2 = s2.total(y)?;
            let c1 = field1.eval(y)?;
            let c2 = field2.eval(y)?;
            let d = u1 - u2;
            let e2_diff = d.energy(&d.conj(), c2.lambda, c2.mu);
            let e2_u1 = u1.conj().energy(&u1, c2.lambda, c2.mu);
            let e1_u1 = u1.conj().energy(&u1, c1.lambda, c1.mu);
            let u1sq = u1.u.norm_squared();
            let dsq = d.u.norm_squared();
            let v = C::new(c2.rho * w2 * dsq, 0.0) - e2_diff + e2_u1 - e1_u1 + (c1.rho - c2.rho) * w2 * u1sq;
            Ok(v * *wt)
        })
        .collect::<Result<Vec<_>>>()?;
    let rhs = boundary + parts.into_iter().sum::<C>();
    Ok(IdentityCheck::new(lhs, rhs, a.norm() + b.norm() + c.norm()))
}
