//! Discrete Herglotz operator, far field operator and scattering operator.
//!
//! Densities and far fields live on a uniform direction grid with trapezoid
//! weight `w = 2π/N`. Adjoints are taken in the weighted inner product
//! `⟨g, h⟩ = (ω/kp0) Σ w g_p h̄_p + (ω/ks0) Σ w g_s h̄_s`; matrices handed to
//! eigen-solvers are first conjugated by the square root of those weights.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forward::{
    unit, DiskScatterer, FarFieldPattern, FieldSample, GridOptions, GridScatterer, IncidentField, Mode, PlaneWave,
    C, I,
};
use crate::medium::{Background, Inclusion, MaterialField, Point, Shape};

/// Uniform directions `θ_j = 2πj/N` on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectionGrid {
    n: usize,
}

impl DirectionGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "direction count must be even and at least 8, got {n}"
            )));
        }
        Ok(DirectionGrid { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn angle(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n as f64
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.angle(j)).collect()
    }

    pub fn direction(&self, j: usize) -> Point {
        unit(self.angle(j))
    }

    pub fn weight(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Inner-product weights `w ω/kp0` (first `N`) and `w ω/ks0` (last `N`).
    pub fn channel_weights(&self, bg: &Background) -> Vec<f64> {
        let k = bg.wavenumbers();
        let w = self.weight();
        let mut out = vec![w * bg.omega / k.kp; self.n];
        out.extend(std::iter::repeat_n(w * bg.omega / k.ks, self.n));
        out
    }
}

/// Pair `(g_p, g_s)` sampled on a direction grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HerglotzDensity {
    pub gp: Vec<C>,
    pub gs: Vec<C>,
}

impl HerglotzDensity {
    pub fn zeros(n: usize) -> Self {
        HerglotzDensity {
            gp: vec![C::new(0.0, 0.0); n],
            gs: vec![C::new(0.0, 0.0); n],
        }
    }

    /// Stacked `[g_p; g_s]`.
    pub fn stacked(&self) -> DVector<C> {
        DVector::from_iterator(self.gp.len() + self.gs.len(), self.gp.iter().chain(&self.gs).cloned())
    }

    pub fn from_stacked(v: &DVector<C>) -> Self {
        let n = v.len() / 2;
        HerglotzDensity {
            gp: v.rows(0, n).iter().cloned().collect(),
            gs: v.rows(n, n).iter().cloned().collect(),
        }
    }

    fn check(&self, grid: &DirectionGrid) -> Result<()> {
        if self.gp.len() != grid.len() || self.gs.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "density has {}/{} samples, grid has {}",
                self.gp.len(),
                self.gs.len(),
                grid.len()
            )));
        }
        Ok(())
    }
}

/// The Herglotz wave `v_g` as a weighted superposition of plane waves.
pub fn herglotz_incident(g: &HerglotzDensity, grid: &DirectionGrid, bg: &Background) -> Result<IncidentField> {
    g.check(grid)?;
    let k = bg.wavenumbers();
    let e = C::from_polar(grid.weight(), -PI / 4.0);
    let cp = e * (k.kp / bg.omega).sqrt();
    let cs = e * (k.ks / bg.omega).sqrt();
    let mut waves = Vec::with_capacity(2 * grid.len());
    for j in 0..grid.len() {
        let d = grid.direction(j);
        if g.gp[j] != C::new(0.0, 0.0) {
            waves.push((PlaneWave { mode: Mode::P, direction: d }, cp * g.gp[j]));
        }
        if g.gs[j] != C::new(0.0, 0.0) {
            waves.push((PlaneWave { mode: Mode::S, direction: d }, cs * g.gs[j]));
        }
    }
    Ok(IncidentField { waves })
}

/// `v_g` and its gradient at each point.
pub fn herglotz(g: &HerglotzDensity, grid: &DirectionGrid, bg: &Background, points: &[Point]) -> Result<Vec<FieldSample>> {
    let inc = herglotz_incident(g, grid, bg)?;
    Ok(points.iter().map(|x| inc.eval(bg, x)).collect())
}

/// Weighted inner product `⟨g, h⟩`.
pub fn inner(g: &HerglotzDensity, h: &HerglotzDensity, grid: &DirectionGrid, bg: &Background) -> Result<C> {
    g.check(grid)?;
    h.check(grid)?;
    let wts = grid.channel_weights(bg);
    let n = grid.len();
    let mut s = C::new(0.0, 0.0);
    for j in 0..n {
        s += g.gp[j] * h.gp[j].conj() * wts[j];
        s += g.gs[j] * h.gs[j].conj() * wts[n + j];
    }
    Ok(s)
}

/// Forward solver used to fill the far field operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    /// Mode-matching series; the medium must be one disk (translated if off-centre).
    Series { order: Option<usize> },
    /// Volume integral solver.
    Grid(GridOptions),
}

/// Far-field channel: compressional `P` or shear `S`.
pub type Channel = Mode;

fn channel_offset(c: Channel, n: usize) -> usize {
    match c {
        Mode::P => 0,
        Mode::S => n,
    }
}

/// `F_c` as a `2N × 2N` matrix with blocks `[[F_pp, F_ps], [F_sp, F_ss]]`
/// (row: far-field channel, column: incident channel).
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldOperator {
    pub background: Background,
    pub grid: DirectionGrid,
    pub matrix: DMatrix<C>,
}

impl FarFieldOperator {
    pub fn zeros(background: Background, grid: DirectionGrid) -> Self {
        let n = grid.len();
        FarFieldOperator {
            background,
            grid,
            matrix: DMatrix::zeros(2 * n, 2 * n),
        }
    }

    /// Column scaling `e^{−iπ/4} √(k_t/ω) w` of the incidence channel `t`.
    fn column_factor(bg: &Background, grid: &DirectionGrid, t: Channel) -> C {
        let k = t.wavenumber(bg);
        C::from_polar(grid.weight() * (k / bg.omega).sqrt(), -PI / 4.0)
    }

    /// Build from far-field patterns of unit plane waves: `column(t, j)`
    /// returns the pattern for incidence channel `t` from direction `d_j`.
    pub fn from_columns<F>(background: Background, grid: DirectionGrid, column: F) -> Result<Self>
    where
        F: Fn(Channel, usize) -> Result<FarFieldPattern> + Sync,
    {
        let n = grid.len();
        let jobs: Vec<(Channel, usize)> = [Mode::P, Mode::S]
            .iter()
            .flat_map(|&t| (0..n).map(move |j| (t, j)))
            .collect();
        let cols = jobs
            .par_iter()
            .map(|&(t, j)| column(t, j))
            .collect::<Result<Vec<_>>>()?;
        let mut op = FarFieldOperator::zeros(background, grid);
        for (&(t, j), pat) in jobs.iter().zip(&cols) {
            let f = Self::column_factor(&background, &grid, t);
            let c = channel_offset(t, n) + j;
            for i in 0..n {
                op.matrix[(i, c)] = pat.up[i] * f;
                op.matrix[(n + i, c)] = pat.us[i] * f;
            }
        }
        Ok(op)
    }

    /// Assemble `F_c` from `2N` forward solves.
    pub fn assemble(field: &MaterialField, grid: DirectionGrid, backend: Backend) -> Result<Self> {
        field.validate()?;
        let bg = field.background;
        if field.is_homogeneous() {
            return Ok(FarFieldOperator::zeros(bg, grid));
        }
        let angles = grid.angles();
        match backend {
            Backend::Series { order } => {
                let active: Vec<&Inclusion> = field.active_inclusions().collect();
                let [inc] = active.as_slice() else {
                    return Err(Error::InvalidInput(
                        "series backend needs exactly one active inclusion".into(),
                    ));
                };
                let Shape::Disk { center, radius } = inc.shape else {
                    return Err(Error::InvalidInput("series backend needs a disk inclusion".into()));
                };
                let at_origin = Inclusion {
                    shape: Shape::disk([0.0, 0.0], radius),
                    ..(*inc).clone()
                };
                let s = DiskScatterer::new(bg, &at_origin, order)?;
                let f0 = Self::from_columns(bg, grid, |t, j| {
                    Ok(s.solve(&PlaneWave::from_angle(t, grid.angle(j))).pattern(&angles))
                })?;
                Ok(f0.translate(&Point::new(center[0], center[1])))
            }
            Backend::Grid(opts) => {
                let s = GridScatterer::new(field, opts)?;
                Self::from_columns(bg, grid, |t, j| {
                    Ok(s.solve(&PlaneWave::from_angle(t, grid.angle(j)))?.pattern(&angles))
                })
            }
        }
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }

    /// Block `F_qt` (far-field channel `q`, incidence channel `t`).
    pub fn block(&self, q: Channel, t: Channel) -> DMatrix<C> {
        let n = self.n();
        self.matrix
            .view((channel_offset(q, n), channel_offset(t, n)), (n, n))
            .into_owned()
    }

    /// `F g` as a far-field pattern pair.
    pub fn apply(&self, g: &HerglotzDensity) -> Result<FarFieldPattern> {
        g.check(&self.grid)?;
        let v = &self.matrix * g.stacked();
        let n = self.n();
        Ok(FarFieldPattern {
            angles: self.grid.angles(),
            up: v.rows(0, n).iter().cloned().collect(),
            us: v.rows(n, n).iter().cloned().collect(),
        })
    }

    /// `W^{1/2} F W^{−1/2}`: the operator in orthonormal coordinates of the
    /// weighted inner product.
    pub fn weighted(&self) -> DMatrix<C> {
        let w: Vec<f64> = self.grid.channel_weights(&self.background).iter().map(|x| x.sqrt()).collect();
        let mut m = self.matrix.clone();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                m[(i, j)] *= w[i] / w[j];
            }
        }
        m
    }

    /// Far field operator of the same medium shifted by `z`:
    /// `(F_z)_qt = e^{−i k_q x̂·z} (F_0)_qt e^{i k_t d·z}`.
    pub fn translate(&self, z: &Point) -> Self {
        if z[0] == 0.0 && z[1] == 0.0 {
            return self.clone();
        }
        let n = self.n();
        let k = self.background.wavenumbers();
        let phase = |idx: usize, sign: f64| {
            let (kk, j) = if idx < n { (k.kp, idx) } else { (k.ks, idx - n) };
            C::from_polar(1.0, sign * kk * self.grid.direction(j).dot(z))
        };
        let left: Vec<C> = (0..2 * n).map(|i| phase(i, -1.0)).collect();
        let right: Vec<C> = (0..2 * n).map(|j| phase(j, 1.0)).collect();
        let mut m = self.matrix.clone();
        for i in 0..2 * n {
            for j in 0..2 * n {
                m[(i, j)] = left[i] * m[(i, j)] * right[j];
            }
        }
        FarFieldOperator {
            background: self.background,
            grid: self.grid,
            matrix: m,
        }
    }

    /// Multiply every entry by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        FarFieldOperator {
            background: self.background,
            grid: self.grid,
            matrix: &self.matrix * C::new(s, 0.0),
        }
    }

    /// Largest deviation from circulant structure within any block, relative
    /// to the largest entry.
    pub fn circulant_defect(&self) -> f64 {
        let n = self.n();
        let peak = self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for q in [Mode::P, Mode::S] {
            for t in [Mode::P, Mode::S] {
                let b = self.block(q, t);
                for i in 0..n {
                    for j in 0..n {
                        let d = (b[(i, j)] - b[((i + n - j) % n, 0)]).norm();
                        worst = worst.max(d);
                    }
                }
            }
        }
        worst / peak
    }

    /// CSV: `N,omega,lambda0,mu0,rho0`, its values, then `block,i,j,re,im`
    /// rows for `pp`, `ps`, `sp`, `ss`. Floats use the shortest round-trip form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let bg = &self.background;
        writeln!(w, "N,omega,lambda0,mu0,rho0")?;
        writeln!(w, "{},{:?},{:?},{:?},{:?}", self.n(), bg.omega, bg.lambda0, bg.mu0, bg.rho0)?;
        writeln!(w, "block,i,j,re,im")?;
        for (name, q, t) in BLOCKS {
            let b = self.block(q, t);
            for i in 0..self.n() {
                for j in 0..self.n() {
                    let z = b[(i, j)];
                    writeln!(w, "{name},{i},{j},{:?},{:?}", z.re, z.im)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {what}")))?
                .map_err(Error::from)
        };
        let header = next("header")?;
        if header.trim() != "N,omega,lambda0,mu0,rho0" {
            return Err(Error::Parse(format!("unexpected header {header:?}")));
        }
        let vals = next("parameter line")?;
        let parts: Vec<&str> = vals.trim().split(',').collect();
        if parts.len() != 5 {
            return Err(Error::Parse(format!("parameter line {vals:?}")));
        }
        let n: usize = parts[0].parse().map_err(|e| Error::Parse(format!("N: {e}")))?;
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
        let bg = Background::new(num(parts[2])?, num(parts[3])?, num(parts[4])?, num(parts[1])?)?;
        let grid = DirectionGrid::new(n)?;
        let rows = next("row header")?;
        if rows.trim() != "block,i,j,re,im" {
            return Err(Error::Parse(format!("unexpected row header {rows:?}")));
        }
        let mut op = FarFieldOperator::zeros(bg, grid);
        let mut seen = vec![false; 4 * n * n];
        let mut count = 0;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 5 {
                return Err(Error::Parse(format!("row {line:?}")));
            }
            let (q, t) = BLOCKS
                .iter()
                .find(|(name, _, _)| *name == f[0])
                .map(|&(_, q, t)| (q, t))
                .ok_or_else(|| Error::Parse(format!("unknown block {:?}", f[0])))?;
            let i: usize = f[1].parse().map_err(|e| Error::Parse(format!("i: {e}")))?;
            let j: usize = f[2].parse().map_err(|e| Error::Parse(format!("j: {e}")))?;
            if i >= n || j >= n {
                return Err(Error::Parse(format!("index out of range in {line:?}")));
            }
            let (r, c) = (channel_offset(q, n) + i, channel_offset(t, n) + j);
            if seen[r * 2 * n + c] {
                return Err(Error::Parse(format!("duplicate entry {line:?}")));
            }
            seen[r * 2 * n + c] = true;
            count += 1;
            op.matrix[(r, c)] = C::new(num(f[3])?, num(f[4])?);
        }
        if count != 4 * n * n {
            return Err(Error::Parse(format!("expected {} entries, found {count}", 4 * n * n)));
        }
        Ok(op)
    }
}

const BLOCKS: [(&str, Channel, Channel); 4] = [
    ("pp", Mode::P, Mode::P),
    ("ps", Mode::P, Mode::S),
    ("sp", Mode::S, Mode::P),
    ("ss", Mode::S, Mode::S),
];

/// `S = I + i √(ω/2π) F̃` in weighted coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringOperator {
    pub matrix: DMatrix<C>,
    /// Inner-product weights the coordinates are orthonormal for.
    pub weights: Vec<f64>,
}

impl ScatteringOperator {
    pub fn new(f: &FarFieldOperator) -> Self {
        let fw = f.weighted();
        let n = fw.nrows();
        let c = I * (f.background.omega / (2.0 * PI)).sqrt();
        ScatteringOperator {
            matrix: DMatrix::identity(n, n) + fw * c,
            weights: f.grid.channel_weights(&f.background),
        }
    }

    pub fn adjoint(&self) -> DMatrix<C> {
        self.matrix.adjoint()
    }

    /// `‖S*S − I‖₂`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let g = self.adjoint() * &self.matrix - DMatrix::<C>::identity(n, n);
        hermitian_norm(&g)
    }
}

/// Spectral norm of a Hermitian matrix.
pub fn hermitian_norm(a: &DMatrix<C>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let h = (a + a.adjoint()) * C::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Result of fitting a scalar `σ` so that `I + i√(ω/2π) σ F̃` is closest to unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub sigma: f64,
    /// `‖S*S − I‖₂` at the fitted `σ`.
    pub defect: f64,
    /// Defect at `σ = 1`.
    pub defect_at_one: f64,
}

impl Calibration {
    /// Whether `σ` is within `tol` of one.
    pub fn is_nominal(&self, tol: f64) -> bool {
        (self.sigma - 1.0).abs() <= tol
    }
}

/// Golden-section search for `σ ∈ [1/4, 4]` on a log scale.
pub fn calibrate(f: &FarFieldOperator) -> Calibration {
    let defect = |s: f64| ScatteringOperator::new(&f.scaled(s)).unitarity_defect();
    let at_one = defect(1.0);
    if f.matrix.iter().all(|z| *z == C::new(0.0, 0.0)) {
        return Calibration { sigma: 1.0, defect: at_one, defect_at_one: at_one };
    }
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.25f64.ln(), 4f64.ln());
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (defect(c.exp()), defect(d.exp()));
    while b - a > 1e-7 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = defect(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = defect(d.exp());
        }
    }
    let sigma = (0.5 * (a + b)).exp();
    Calibration {
        sigma,
        defect: defect(sigma),
        defect_at_one: at_one,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bg() -> Background {
        Background::new(2.0, 1.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn grid_rejects_odd_or_small() {
        assert!(DirectionGrid::new(7).is_err());
        assert!(DirectionGrid::new(9).is_err());
        assert!(DirectionGrid::new(6).is_err());
        assert!(DirectionGrid::new(8).is_ok());
    }

    #[test]
    fn inner_of_constant_density() {
        // ω = kp0 = 1: ⟨g, g⟩ = 2π
        let b = Background::new(1.0, 1.0, 3.0, 1.0).unwrap();
        assert!((b.wavenumbers().kp - 1.0).abs() < 1e-15);
        let grid = DirectionGrid::new(16).unwrap();
        let mut g = HerglotzDensity::zeros(16);
        g.gp.iter_mut().for_each(|z| *z = C::new(1.0, 0.0));
        let v = inner(&g, &g, &grid, &b).unwrap();
        assert!((v - C::new(2.0 * PI, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn inner_rejects_mismatch() {
        let grid = DirectionGrid::new(16).unwrap();
        let g = HerglotzDensity::zeros(8);
        assert!(matches!(inner(&g, &g, &grid, &bg()), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn zero_operator_gives_identity_scattering() {
        let f = FarFieldOperator::zeros(bg(), DirectionGrid::new(8).unwrap());
        let s = ScatteringOperator::new(&f);
        assert_eq!(s.matrix, DMatrix::identity(16, 16));
        assert_eq!(s.unitarity_defect(), 0.0);
    }

    #[test]
    fn translate_by_zero_is_identity() {
        let grid = DirectionGrid::new(8).unwrap();
        let mut f = FarFieldOperator::zeros(bg(), grid);
        f.matrix[(1, 3)] = C::new(0.2, -0.1);
        assert_eq!(f.translate(&Point::zeros()), f);
    }

    #[test]
    fn single_node_herglotz_is_weighted_plane_wave() {
        let grid = DirectionGrid::new(8).unwrap();
        let mut g = HerglotzDensity::zeros(8);
        g.gp[3] = C::new(1.0, 0.0);
        let x = Point::new(0.4, -0.3);
        let v = herglotz(&g, &grid, &bg(), &[x]).unwrap()[0];
        let pw = PlaneWave::from_angle(Mode::P, grid.angle(3)).eval(&bg(), &x);
        let k = bg().wavenumbers().kp;
        let f = C::from_polar(grid.weight() * (k / bg().omega).sqrt(), -PI / 4.0);
        assert!((v.u - pw.u * f).norm() < 1e-15);
    }
}
