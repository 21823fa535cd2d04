//! Lippmann–Schwinger volume integral solver on a uniform Cartesian grid.
//!
//! With `s = δρ ω² u` and `τ = δλ (∇·u) I + 2δμ ε(u)` the scattered field is
//! `u_i^sc = Γ_ij ∗ s_j + ∂_kΓ_ij ∗ τ_jk`. The contrast is piecewise constant
//! per cell (area-averaged), the equation is collocated at cell centres, and
//! the block-Toeplitz convolution runs through zero-padded FFTs.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::kernel::{KernelBlock, Navier};
use super::{perp, unit, FarFieldPattern, FieldSample, IncidentField, PlaneWave, Solution, CMat2, CVec2, C, I};
use crate::error::{Error, Result};
use crate::linalg::{self, KrylovReport};
use crate::medium::{Background, MaterialField, Point};

/// Inputs of the convolution: `s1, s2, τ11, τ22, τ12`.
const N_IN_LAME: usize = 5;
const N_IN_DENSITY: usize = 2;
/// Outputs: `u1, u2, ∂1u1, ∂2u1, ∂1u2, ∂2u2`.
const N_OUT: usize = 6;

/// Solver controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    /// Cell size.
    pub h: f64,
    /// Relative residual target.
    pub tol: f64,
    /// Total Krylov iteration cap.
    pub max_iter: usize,
    pub restart: usize,
    /// Unknown count up to which a dense LU factorisation is used.
    pub dense_max: usize,
    /// Extra background cells on each side of the support box.
    pub padding: usize,
    /// Contrast subsamples per cell edge.
    pub subsamples: usize,
    /// Minimum cells per shortest shear wavelength.
    pub cells_per_wavelength: f64,
}

impl GridOptions {
    pub fn new(h: f64) -> Self {
        GridOptions {
            h,
            tol: 1e-8,
            max_iter: 500,
            restart: 100,
            dense_max: 1200,
            padding: 2,
            subsamples: 8,
            cells_per_wavelength: 10.0,
        }
    }
}

/// Cell geometry: cell `(ix, iy)` has centre `origin + h (ix, iy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub origin: Point,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn center(&self, idx: usize) -> Point {
        let (ix, iy) = (idx % self.nx, idx / self.nx);
        self.origin + Point::new(ix as f64 * self.h, iy as f64 * self.h)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Averaged contrast of one active cell.
#[derive(Debug, Clone, Copy, PartialEq)]
struct CellContrast {
    cell: usize,
    d_rho: f64,
    d_lambda: f64,
    d_mu: f64,
}

/// Zero-padded 2D FFT convolution with a fixed set of kernels.
struct Convolver {
    nx: usize,
    ny: usize,
    px: usize,
    py: usize,
    n_in: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    /// Transformed kernels, `[out * n_in + in]`.
    kernels: Vec<Vec<C>>,
}

impl Convolver {
    fn new(nx: usize, ny: usize, n_in: usize, table: &OffsetTable) -> Self {
        let (px, py) = (2 * nx, 2 * ny);
        let mut planner = FftPlanner::new();
        let mut conv = Convolver {
            nx,
            ny,
            px,
            py,
            n_in,
            fwd_x: planner.plan_fft_forward(px),
            fwd_y: planner.plan_fft_forward(py),
            inv_x: planner.plan_fft_inverse(px),
            inv_y: planner.plan_fft_inverse(py),
            kernels: Vec::new(),
        };
        let zero = C::new(0.0, 0.0);
        let mut kernels = vec![vec![zero; px * py]; N_OUT * n_in];
        for dy in -(ny as i64 - 1)..ny as i64 {
            for dx in -(nx as i64 - 1)..nx as i64 {
                let m = table.entry(dx, dy);
                let ix = dx.rem_euclid(px as i64) as usize;
                let iy = dy.rem_euclid(py as i64) as usize;
                for o in 0..N_OUT {
                    for q in 0..n_in {
                        kernels[o * n_in + q][iy * px + ix] = m[o][q];
                    }
                }
            }
        }
        for k in kernels.iter_mut() {
            conv.transform(k, false);
        }
        conv.kernels = kernels;
        conv
    }

    fn transform(&self, buf: &mut [C], inverse: bool) {
        let (fx, fy) = if inverse {
            (&self.inv_x, &self.inv_y)
        } else {
            (&self.fwd_x, &self.fwd_y)
        };
        fx.process(buf);
        let mut t = transpose(buf, self.px, self.py);
        fy.process(&mut t);
        let back = transpose(&t, self.py, self.px);
        buf.copy_from_slice(&back);
        if inverse {
            let s = 1.0 / (self.px * self.py) as f64;
            buf.iter_mut().for_each(|z| *z *= s);
        }
    }

    /// `out[o][a] = Σ_q Σ_b K_oq(a − b) src[q][b]` for the requested outputs.
    fn apply(&self, src: &[Vec<C>], outputs: &[usize]) -> Vec<Vec<C>> {
        let zero = C::new(0.0, 0.0);
        let spectra: Vec<Vec<C>> = src
            .iter()
            .map(|s| {
                let mut buf = vec![zero; self.px * self.py];
                for iy in 0..self.ny {
                    buf[iy * self.px..iy * self.px + self.nx]
                        .copy_from_slice(&s[iy * self.nx..(iy + 1) * self.nx]);
                }
                self.transform(&mut buf, false);
                buf
            })
            .collect();
        outputs
            .iter()
            .map(|&o| {
                let mut acc = vec![zero; self.px * self.py];
                for (q, spec) in spectra.iter().enumerate() {
                    let k = &self.kernels[o * self.n_in + q];
                    acc.iter_mut()
                        .zip(k.iter().zip(spec))
                        .for_each(|(a, (kv, sv))| *a += kv * sv);
                }
                self.transform(&mut acc, true);
                let mut out = Vec::with_capacity(self.nx * self.ny);
                for iy in 0..self.ny {
                    out.extend_from_slice(&acc[iy * self.px..iy * self.px + self.nx]);
                }
                out
            })
            .collect()
    }
}

fn transpose(buf: &[C], cols: usize, rows: usize) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); buf.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = buf[r * cols + c];
        }
    }
    out
}

/// Cell-integrated kernel matrices `[out][in]` for every grid offset.
struct OffsetTable {
    nx: usize,
    ny: usize,
    values: Vec<[[C; N_IN_LAME]; N_OUT]>,
}

impl OffsetTable {
    fn build(nav: &Navier, grid: &Grid) -> Result<Self> {
        let (nx, ny) = (grid.nx as i64, grid.ny as i64);
        let h = grid.h;
        let offsets: Vec<(i64, i64)> = (-(ny - 1)..ny)
            .flat_map(|dy| (-(nx - 1)..nx).map(move |dx| (dx, dy)))
            .collect();
        let values = offsets
            .par_iter()
            .map(|&(dx, dy)| {
                let cheb = dx.abs().max(dy.abs());
                let block = if cheb == 0 {
                    nav.self_cell(h)?
                } else {
                    let order = match cheb {
                        1..=2 => 8,
                        3..=6 => 3,
                        _ => 1,
                    };
                    nav.cell(&Point::new(dx as f64 * h, dy as f64 * h), h, order)?
                };
                Ok(block_matrix(&block))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OffsetTable {
            nx: grid.nx,
            ny: grid.ny,
            values,
        })
    }

    fn entry(&self, dx: i64, dy: i64) -> &[[C; N_IN_LAME]; N_OUT] {
        let w = 2 * self.nx as i64 - 1;
        let idx = (dy + self.ny as i64 - 1) * w + (dx + self.nx as i64 - 1);
        &self.values[idx as usize]
    }
}

/// Arrange a kernel block as the `[out][in]` map from sources to `u, ∇u`.
fn block_matrix(b: &KernelBlock) -> [[C; N_IN_LAME]; N_OUT] {
    let mut m = [[C::new(0.0, 0.0); N_IN_LAME]; N_OUT];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = b.g0[i][j];
        }
        m[i][2] = b.g1[i][0][0];
        m[i][3] = b.g1[i][1][1];
        m[i][4] = b.g1[i][0][1] + b.g1[i][1][0];
        for l in 0..2 {
            let o = 2 + 2 * i + l;
            for j in 0..2 {
                m[o][j] = b.g1[i][j][l];
            }
            m[o][2] = b.g2[i][0][0][l];
            m[o][3] = b.g2[i][1][1][l];
            m[o][4] = b.g2[i][0][1][l] + b.g2[i][1][0][l];
        }
    }
    m
}

/// Unknown layout per active cell: `u1, u2` and, with Lamé contrast,
/// `ε11, ε22, ε12`.
fn unknowns_per_cell(lame: bool) -> usize {
    if lame {
        5
    } else {
        2
    }
}

/// Project the raw `u, ∇u` outputs onto the unknown layout.
fn project(raw: &[C; N_OUT], lame: bool, out: &mut [C]) {
    out[0] = raw[0];
    out[1] = raw[1];
    if lame {
        out[2] = raw[2];
        out[3] = raw[5];
        out[4] = (raw[3] + raw[4]) * 0.5;
    }
}

/// Sources `s1, s2, τ11, τ22, τ12` from one cell's unknowns.
fn sources(c: &CellContrast, omega2: f64, x: &[C], lame: bool) -> [C; N_IN_LAME] {
    let zero = C::new(0.0, 0.0);
    let mut s = [zero; N_IN_LAME];
    s[0] = x[0] * (c.d_rho * omega2);
    s[1] = x[1] * (c.d_rho * omega2);
    if lame {
        let tr = (x[2] + x[3]) * c.d_lambda;
        s[2] = tr + x[2] * (2.0 * c.d_mu);
        s[3] = tr + x[3] * (2.0 * c.d_mu);
        s[4] = x[4] * (2.0 * c.d_mu);
    }
    s
}

enum Factor {
    Dense(nalgebra::linalg::LU<C, nalgebra::Dyn, nalgebra::Dyn>, DMatrix<C>),
    Iterative,
}

/// Discretised contrast operator for one medium; solves any incidence.
pub struct GridScatterer {
    field: MaterialField,
    grid: Grid,
    opts: GridOptions,
    cells: Vec<CellContrast>,
    lame: bool,
    conv: Option<Convolver>,
    factor: Factor,
}

impl std::fmt::Debug for GridScatterer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridScatterer")
            .field("grid", &self.grid)
            .field("active_cells", &self.cells.len())
            .field("lame", &self.lame)
            .finish()
    }
}

impl GridScatterer {
    pub fn new(field: &MaterialField, opts: GridOptions) -> Result<Self> {
        field.validate()?;
        let h = opts.h;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("cell size {h} must be positive")));
        }
        let bg = field.background;
        let mut ks_max = bg.wavenumbers().ks;
        for inc in field.active_inclusions() {
            ks_max = ks_max.max(inc.params(&bg).wavenumbers(bg.omega)?.ks);
        }
        let wavelength = 2.0 * PI / ks_max;
        if h * opts.cells_per_wavelength > wavelength * (1.0 + 1e-12) {
            return Err(Error::UnderResolved(format!(
                "h = {h} gives {:.2} cells per shear wavelength, need {}",
                wavelength / h,
                opts.cells_per_wavelength
            )));
        }
        let grid = match field.support_bbox() {
            None => Grid {
                origin: Point::zeros(),
                h,
                nx: 1,
                ny: 1,
            },
            Some((lo, hi)) => {
                let pad = opts.padding as f64 * h;
                let nx = ((hi[0] - lo[0]) / h).ceil().max(1.0) as usize + 2 * opts.padding;
                let ny = ((hi[1] - lo[1]) / h).ceil().max(1.0) as usize + 2 * opts.padding;
                // centre the cell block on the support box
                let cx = 0.5 * (lo[0] + hi[0]);
                let cy = 0.5 * (lo[1] + hi[1]);
                let _ = pad;
                Grid {
                    origin: Point::new(
                        cx - 0.5 * (nx as f64 - 1.0) * h,
                        cy - 0.5 * (ny as f64 - 1.0) * h,
                    ),
                    h,
                    nx,
                    ny,
                }
            }
        };
        let cells = cell_contrasts(field, &grid, opts.subsamples)?;
        let lame = cells.iter().any(|c| c.d_lambda != 0.0 || c.d_mu != 0.0);
        let mut s = GridScatterer {
            field: field.clone(),
            grid,
            opts,
            cells,
            lame,
            conv: None,
            factor: Factor::Iterative,
        };
        if s.cells.is_empty() {
            return Ok(s);
        }
        let nav = Navier::new(&bg);
        let table = OffsetTable::build(&nav, &grid)?;
        let n_in = if lame { N_IN_LAME } else { N_IN_DENSITY };
        s.conv = Some(Convolver::new(grid.nx, grid.ny, n_in, &table));
        if s.unknowns() <= opts.dense_max {
            let a = s.dense_matrix(&table);
            s.factor = Factor::Dense(a.clone().lu(), a);
        }
        Ok(s)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn active_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn has_lame_contrast(&self) -> bool {
        self.lame
    }

    pub fn unknowns(&self) -> usize {
        self.cells.len() * unknowns_per_cell(self.lame)
    }

    fn omega2(&self) -> f64 {
        self.field.background.omega.powi(2)
    }

    fn dense_matrix(&self, table: &OffsetTable) -> DMatrix<C> {
        let p = unknowns_per_cell(self.lame);
        let n = self.unknowns();
        let w2 = self.omega2();
        let mut a = DMatrix::<C>::identity(n, n);
        let nx = self.grid.nx as i64;
        for (cb, cell_b) in self.cells.iter().enumerate() {
            // source map for unit unknowns at cell b
            let mut src_cols = Vec::with_capacity(p);
            for q in 0..p {
                let mut e = [C::new(0.0, 0.0); 5];
                e[q] = C::new(1.0, 0.0);
                src_cols.push(sources(cell_b, w2, &e, self.lame));
            }
            let (bx, by) = (cell_b.cell as i64 % nx, cell_b.cell as i64 / nx);
            for (ca, cell_a) in self.cells.iter().enumerate() {
                let (ax, ay) = (cell_a.cell as i64 % nx, cell_a.cell as i64 / nx);
                let k = table.entry(ax - bx, ay - by);
                for (q, src) in src_cols.iter().enumerate() {
                    let mut raw = [C::new(0.0, 0.0); N_OUT];
                    for (o, r) in raw.iter_mut().enumerate() {
                        *r = (0..N_IN_LAME).map(|i| k[o][i] * src[i]).sum();
                    }
                    let mut col = [C::new(0.0, 0.0); 5];
                    project(&raw, self.lame, &mut col);
                    for r in 0..p {
                        a[(ca * p + r, cb * p + q)] -= col[r];
                    }
                }
            }
        }
        a
    }

    /// Scatter per-cell sources onto full-grid arrays.
    fn source_grids(&self, x: &[C]) -> Vec<Vec<C>> {
        let p = unknowns_per_cell(self.lame);
        let n_in = if self.lame { N_IN_LAME } else { N_IN_DENSITY };
        let w2 = self.omega2();
        let mut grids = vec![vec![C::new(0.0, 0.0); self.grid.len()]; n_in];
        for (c, cell) in self.cells.iter().enumerate() {
            let s = sources(cell, w2, &x[c * p..(c + 1) * p], self.lame);
            for q in 0..n_in {
                grids[q][cell.cell] = s[q];
            }
        }
        grids
    }

    fn apply_operator(&self, x: &[C]) -> Vec<C> {
        let conv = self.conv.as_ref().expect("active cells imply a convolver");
        let p = unknowns_per_cell(self.lame);
        let outs: Vec<usize> = if self.lame { vec![0, 1, 2, 3, 4, 5] } else { vec![0, 1] };
        let res = conv.apply(&self.source_grids(x), &outs);
        let mut y = x.to_vec();
        let mut raw = [C::new(0.0, 0.0); N_OUT];
        let mut proj = [C::new(0.0, 0.0); 5];
        for (c, cell) in self.cells.iter().enumerate() {
            for (slot, &o) in outs.iter().enumerate() {
                raw[o] = res[slot][cell.cell];
            }
            project(&raw, self.lame, &mut proj);
            for r in 0..p {
                y[c * p + r] -= proj[r];
            }
        }
        y
    }

    /// Solve for one incident plane wave.
    pub fn solve(&self, incident: &PlaneWave) -> Result<GridSolution> {
        self.solve_field(&IncidentField::from(*incident))
    }

    /// Solve for a superposition of plane waves.
    pub fn solve_field(&self, incident: &IncidentField) -> Result<GridSolution> {
        let bg = self.field.background;
        let p = unknowns_per_cell(self.lame);
        let n_cells = self.grid.len();
        let inc: Vec<FieldSample> = (0..n_cells)
            .map(|i| incident.eval(&bg, &self.grid.center(i)))
            .collect();
        let mut rhs = vec![C::new(0.0, 0.0); self.unknowns()];
        for (c, cell) in self.cells.iter().enumerate() {
            project(&raw_of(&inc[cell.cell]), self.lame, &mut rhs[c * p..(c + 1) * p]);
        }
        let (x, report) = if self.cells.is_empty() {
            (Vec::new(), KrylovReport { iterations: 0, residual: 0.0 })
        } else {
            match &self.factor {
                Factor::Dense(lu, a) => {
                    let bv = nalgebra::DVector::from_column_slice(&rhs);
                    let xv = lu.solve(&bv).ok_or(Error::NonConvergence {
                        iterations: 0,
                        residual: f64::INFINITY,
                    })?;
                    let bn = bv.norm();
                    let res = if bn == 0.0 { 0.0 } else { (a * &xv - &bv).norm() / bn };
                    (xv.iter().cloned().collect(), KrylovReport { iterations: 0, residual: res })
                }
                Factor::Iterative => linalg::gmres(
                    |v| self.apply_operator(v),
                    &rhs,
                    0.5 * self.opts.tol,
                    self.opts.restart,
                    self.opts.max_iter,
                )?,
            }
        };
        if report.residual > self.opts.tol {
            return Err(Error::NonConvergence {
                iterations: report.iterations,
                residual: report.residual,
            });
        }
        // total field and gradient on every cell
        let mut total = inc.clone();
        let mut srcs = Vec::with_capacity(self.cells.len());
        if !self.cells.is_empty() {
            let grids = self.source_grids(&x);
            let conv = self.conv.as_ref().expect("convolver");
            let res = conv.apply(&grids, &[0, 1, 2, 3, 4, 5]);
            for (i, t) in total.iter_mut().enumerate() {
                t.u[0] += res[0][i];
                t.u[1] += res[1][i];
                t.grad[(0, 0)] += res[2][i];
                t.grad[(0, 1)] += res[3][i];
                t.grad[(1, 0)] += res[4][i];
                t.grad[(1, 1)] += res[5][i];
            }
            let w2 = self.omega2();
            for (c, cell) in self.cells.iter().enumerate() {
                srcs.push(CellSource {
                    center: self.grid.center(cell.cell),
                    s: sources(cell, w2, &x[c * p..(c + 1) * p], self.lame),
                });
            }
        }
        Ok(GridSolution {
            background: bg,
            field: self.field.clone(),
            incident: incident.clone(),
            grid: self.grid,
            lame: self.lame,
            total,
            sources: srcs,
            iterations: report.iterations,
            residual: report.residual,
        })
    }
}

fn raw_of(f: &FieldSample) -> [C; N_OUT] {
    [
        f.u[0],
        f.u[1],
        f.grad[(0, 0)],
        f.grad[(0, 1)],
        f.grad[(1, 0)],
        f.grad[(1, 1)],
    ]
}

fn cell_contrasts(field: &MaterialField, grid: &Grid, sub: usize) -> Result<Vec<CellContrast>> {
    if field.is_homogeneous() {
        return Ok(Vec::new());
    }
    let bg = field.background;
    let sub = sub.max(1);
    let h = grid.h;
    let mut out = Vec::new();
    for idx in 0..grid.len() {
        let c = grid.center(idx);
        let (mut dr, mut dl, mut dm) = (0.0, 0.0, 0.0);
        for a in 0..sub {
            for b in 0..sub {
                let x = c + Point::new(
                    ((a as f64 + 0.5) / sub as f64 - 0.5) * h,
                    ((b as f64 + 0.5) / sub as f64 - 0.5) * h,
                );
                let l = field.eval(&x)?;
                dr += l.rho - bg.rho0;
                dl += l.lambda - bg.lambda0;
                dm += l.mu - bg.mu0;
            }
        }
        let n = (sub * sub) as f64;
        if dr != 0.0 || dl != 0.0 || dm != 0.0 {
            out.push(CellContrast {
                cell: idx,
                d_rho: dr / n,
                d_lambda: dl / n,
                d_mu: dm / n,
            });
        }
    }
    Ok(out)
}

/// Contrast source of one active cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSource {
    pub center: Point,
    /// `s1, s2, τ11, τ22, τ12`
    pub s: [C; N_IN_LAME],
}

impl CellSource {
    fn tau(&self) -> CMat2 {
        CMat2::new(self.s[2], self.s[4], self.s[4], self.s[3])
    }
}

/// Grid solution for one incident wave.
#[derive(Debug, Clone)]
pub struct GridSolution {
    pub background: Background,
    pub field: MaterialField,
    pub incident: IncidentField,
    pub grid: Grid,
    pub lame: bool,
    /// Total field and gradient at every cell centre.
    pub total: Vec<FieldSample>,
    pub sources: Vec<CellSource>,
    pub iterations: usize,
    pub residual: f64,
}

/// Solve the transmission problem on a grid with cell size `h`.
pub fn solve_grid(field: &MaterialField, incident: &PlaneWave, h: f64) -> Result<GridSolution> {
    GridScatterer::new(field, GridOptions::new(h))?.solve(incident)
}

impl GridSolution {
    /// Bilinear interpolation of the stored total field, if `x` lies inside
    /// the hull of cell centres.
    fn interpolate(&self, x: &Point) -> Option<FieldSample> {
        let g = &self.grid;
        let fx = (x[0] - g.origin[0]) / g.h;
        let fy = (x[1] - g.origin[1]) / g.h;
        if fx < 0.0 || fy < 0.0 || fx > (g.nx - 1) as f64 || fy > (g.ny - 1) as f64 {
            return None;
        }
        if g.nx < 2 || g.ny < 2 {
            return None;
        }
        let ix = (fx.floor() as usize).min(g.nx - 2);
        let iy = (fy.floor() as usize).min(g.ny - 2);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let at = |a: usize, b: usize| self.total[b * g.nx + a];
        let mix = at(ix, iy) * C::new((1.0 - tx) * (1.0 - ty), 0.0)
            + at(ix + 1, iy) * C::new(tx * (1.0 - ty), 0.0)
            + at(ix, iy + 1) * C::new((1.0 - tx) * ty, 0.0)
            + at(ix + 1, iy + 1) * C::new(tx * ty, 0.0);
        Some(mix)
    }

    /// Volume-potential representation of the scattered field.
    fn represent(&self, x: &Point) -> Result<FieldSample> {
        let nav = Navier::new(&self.background);
        let h = self.grid.h;
        let mut out = FieldSample::default();
        for src in &self.sources {
            let z = x - src.center;
            let cheb = z[0].abs().max(z[1].abs()) / h;
            let order = if cheb < 3.0 { 6 } else { 1 };
            let k = block_matrix(&nav.cell(&z, h, order)?);
            let mut raw = [C::new(0.0, 0.0); N_OUT];
            for (o, r) in raw.iter_mut().enumerate() {
                *r = (0..N_IN_LAME).map(|q| k[o][q] * src.s[q]).sum();
            }
            out.u[0] += raw[0];
            out.u[1] += raw[1];
            out.grad[(0, 0)] += raw[2];
            out.grad[(0, 1)] += raw[3];
            out.grad[(1, 0)] += raw[4];
            out.grad[(1, 1)] += raw[5];
        }
        Ok(out)
    }

    /// Far-field amplitudes of the piecewise-constant contrast sources.
    pub fn pattern(&self, angles: &[f64]) -> FarFieldPattern {
        let bg = &self.background;
        let w = bg.wavenumbers();
        let e = C::from_polar(1.0, PI / 4.0);
        let cp = e / ((bg.lambda0 + 2.0 * bg.mu0) * (8.0 * PI * w.kp).sqrt());
        let cs = e / (bg.mu0 * (8.0 * PI * w.ks).sqrt());
        let h = self.grid.h;
        let sinc = |t: f64| if t.abs() < 1e-8 { 1.0 - t * t / 6.0 } else { t.sin() / t };
        let mut out = FarFieldPattern::zeros(angles);
        for (t, &theta) in angles.iter().enumerate() {
            let xh = unit(theta);
            let xp = perp(&xh);
            let xhc = CVec2::new(C::new(xh[0], 0.0), C::new(xh[1], 0.0));
            let xpc = CVec2::new(C::new(xp[0], 0.0), C::new(xp[1], 0.0));
            let fp = h * h * sinc(0.5 * w.kp * xh[0] * h) * sinc(0.5 * w.kp * xh[1] * h);
            let fs = h * h * sinc(0.5 * w.ks * xh[0] * h) * sinc(0.5 * w.ks * xh[1] * h);
            let (mut sp, mut ss) = (C::new(0.0, 0.0), C::new(0.0, 0.0));
            for src in &self.sources {
                let s = CVec2::new(src.s[0], src.s[1]);
                let tau_x = src.tau() * xhc;
                let y = src.center;
                let ep = C::from_polar(1.0, -w.kp * xh.dot(&y));
                let es = C::from_polar(1.0, -w.ks * xh.dot(&y));
                sp += ep * (super::dot(&xhc, &s) + I * w.kp * super::dot(&xhc, &tau_x));
                ss += es * (super::dot(&xpc, &s) + I * w.ks * super::dot(&xpc, &tau_x));
            }
            out.up[t] = cp * fp * sp;
            out.us[t] = cs * fs * ss;
        }
        out
    }

    fn support_box(&self) -> Option<(Point, Point)> {
        let mut it = self.sources.iter().map(|s| s.center);
        let first = it.next()?;
        let (mut lo, mut hi) = (first, first);
        for c in it {
            lo = lo.inf(&c);
            hi = hi.sup(&c);
        }
        let half = Point::new(0.5 * self.grid.h, 0.5 * self.grid.h);
        Some((lo - half, hi + half))
    }
}

impl Solution for GridSolution {
    fn background(&self) -> &Background {
        &self.background
    }

    fn incident(&self) -> &IncidentField {
        &self.incident
    }

    fn scattered(&self, x: &Point) -> Result<FieldSample> {
        Ok(self.total(x)? - self.incident.eval(&self.background, x))
    }

    fn total(&self, x: &Point) -> Result<FieldSample> {
        if let Some(f) = self.interpolate(x) {
            return Ok(f);
        }
        Ok(self.represent(x)? + self.incident.eval(&self.background, x))
    }

    fn far_field(&self, angles: &[f64]) -> Result<FarFieldPattern> {
        Ok(self.pattern(angles))
    }

    fn support_radius(&self) -> f64 {
        match self.support_box() {
            None => 0.0,
            Some((lo, hi)) => [lo, hi, Point::new(lo[0], hi[1]), Point::new(hi[0], lo[1])]
                .iter()
                .map(|p| p.norm())
                .fold(0.0, f64::max),
        }
    }
}
