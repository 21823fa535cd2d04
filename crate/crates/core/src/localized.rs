//! Localized potentials: Herglotz densities whose total fields are large on
//! one region and small on another, found from a regularized generalized
//! eigenproblem.

use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::farfield::{DirectionGrid, HerglotzDensity};
use crate::forward::{DiskScatterer, FieldSample, Mode, PlaneWave, SeriesSolution, Solution, C};
use crate::medium::{Background, Inclusion, MaterialField, Point, Shape};

/// Which quantity of the total field is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Displacement and full gradient.
    FieldGradient,
    /// Displacement.
    Field,
    /// Divergence.
    Divergence,
    /// Symmetric gradient.
    SymGrad,
}

impl Variant {
    pub fn from_index(j: usize) -> Result<Self> {
        match j {
            0 => Ok(Variant::FieldGradient),
            1 => Ok(Variant::Field),
            2 => Ok(Variant::Divergence),
            3 => Ok(Variant::SymGrad),
            _ => Err(Error::InvalidInput(format!("variant must be 0..=3, got {j}"))),
        }
    }

    pub fn index(&self) -> usize {
        match self {
            Variant::FieldGradient => 0,
            Variant::Field => 1,
            Variant::Divergence => 2,
            Variant::SymGrad => 3,
        }
    }

    /// Rows contributed per sample point.
    pub fn rows(&self) -> usize {
        match self {
            Variant::FieldGradient => 6,
            Variant::Field => 2,
            Variant::Divergence => 1,
            Variant::SymGrad => 3,
        }
    }

    /// Components whose squared moduli sum to the pointwise density.
    fn components(&self, f: &FieldSample) -> Vec<C> {
        match self {
            Variant::FieldGradient => vec![
                f.u[0],
                f.u[1],
                f.grad[(0, 0)],
                f.grad[(0, 1)],
                f.grad[(1, 0)],
                f.grad[(1, 1)],
            ],
            Variant::Field => vec![f.u[0], f.u[1]],
            Variant::Divergence => vec![f.div()],
            Variant::SymGrad => {
                let e = f.sym_grad();
                vec![e[(0, 0)], e[(1, 1)], e[(0, 1)] * std::f64::consts::SQRT_2]
            }
        }
    }
}

/// Midpoint quadrature of a region on a square covering grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSamples {
    pub shape: Shape,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub variant: Variant,
}

impl RegionSamples {
    /// Cells of side `h` aligned with the bounding box; keeps the centres
    /// inside `shape`.
    pub fn new(shape: Shape, h: f64, variant: Variant) -> Result<Self> {
        shape.validate()?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("sample spacing {h} must be positive")));
        }
        let (lo, hi) = shape.bbox();
        let nx = ((hi[0] - lo[0]) / h).ceil() as usize;
        let ny = ((hi[1] - lo[1]) / h).ceil() as usize;
        let mut points = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                let x = Point::new(lo[0] + (ix as f64 + 0.5) * h, lo[1] + (iy as f64 + 0.5) * h);
                if shape.contains(&x) {
                    points.push(x);
                }
            }
        }
        if points.is_empty() {
            return Err(Error::InvalidInput(format!("spacing {h} leaves no samples in {shape:?}")));
        }
        let weights = vec![h * h; points.len()];
        Ok(RegionSamples {
            shape,
            points,
            weights,
            variant,
        })
    }

    pub fn with_variant(&self, variant: Variant) -> Self {
        RegionSamples {
            variant,
            ..self.clone()
        }
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Total field of a unit-amplitude plane wave in the medium, as a function
/// of position.
enum Medium {
    Background(Background),
    Disk {
        offset: Point,
        solutions: Vec<SeriesSolution>,
    },
}

impl Medium {
    fn new(field: &MaterialField, waves: &[PlaneWave]) -> Result<Self> {
        field.validate()?;
        let active: Vec<&Inclusion> = field.active_inclusions().collect();
        match active.as_slice() {
            [] => Ok(Medium::Background(field.background)),
            [inc] => {
                let Shape::Disk { center, radius } = inc.shape else {
                    return Err(Error::InvalidInput("localized potentials need a disk inclusion".into()));
                };
                let centred = Inclusion {
                    shape: Shape::disk([0.0, 0.0], radius),
                    ..(*inc).clone()
                };
                let s = DiskScatterer::new(field.background, &centred, None)?;
                Ok(Medium::Disk {
                    offset: Point::new(center[0], center[1]),
                    solutions: waves.par_iter().map(|pw| s.solve(pw)).collect(),
                })
            }
            _ => Err(Error::InvalidInput(
                "localized potentials support the background or a single disk".into(),
            )),
        }
    }

    /// Field of wave `j` at `x`. A disk centred at `z` sees the plane wave
    /// `e^{i k d·z}` times the wave incident on the centred disk at `x − z`.
    fn eval(&self, waves: &[PlaneWave], j: usize, x: &Point) -> Result<FieldSample> {
        match self {
            Medium::Background(bg) => Ok(waves[j].eval(bg, x)),
            Medium::Disk { offset, solutions } => {
                let s = &solutions[j];
                let k = waves[j].mode.wavenumber(s.background());
                let phase = C::from_polar(1.0, k * waves[j].direction.dot(offset));
                Ok(s.total(&(x - offset))? * phase)
            }
        }
    }
}

/// Columns are the unit Herglotz densities `e_j` (P block, then S block);
/// each row block is `√w` times the sampled quantity at one point, so
/// `‖L g‖²` approximates the region integral.
pub fn restriction_matrix(field: &MaterialField, region: &RegionSamples, grid: &DirectionGrid) -> Result<DMatrix<C>> {
    let bg = field.background;
    let n = grid.len();
    let waves: Vec<PlaneWave> = [Mode::P, Mode::S]
        .iter()
        .flat_map(|&m| (0..n).map(move |j| PlaneWave::from_angle(m, grid.angle(j))))
        .collect();
    let scale: Vec<C> = waves
        .iter()
        .map(|pw| {
            let k = pw.mode.wavenumber(&bg);
            C::from_polar(grid.weight() * (k / bg.omega).sqrt(), -std::f64::consts::FRAC_PI_4)
        })
        .collect();
    let medium = Medium::new(field, &waves)?;
    let rows = region.variant.rows();
    let blocks = region
        .points
        .par_iter()
        .zip(&region.weights)
        .map(|(x, w)| {
            let sw = w.sqrt();
            let mut block = DMatrix::<C>::zeros(rows, 2 * n);
            for j in 0..2 * n {
                let f = medium.eval(&waves, j, x)?;
                for (r, v) in region.variant.components(&f).into_iter().enumerate() {
                    block[(r, j)] = v * scale[j] * sw;
                }
            }
            Ok(block)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut l = DMatrix::<C>::zeros(rows * region.points.len(), 2 * n);
    for (p, b) in blocks.iter().enumerate() {
        l.view_mut((p * rows, 0), (rows, 2 * n)).copy_from(b);
    }
    Ok(l)
}

/// Top generalized eigenpair of `L_Bᴴ L_B g = Λ (L_Dᴴ L_D + δ W) g`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationResult {
    /// Normalized so that `⟨g, g⟩ = 1`.
    pub g: HerglotzDensity,
    /// `‖L_B g‖² / ‖L_D g‖²`.
    pub ratio: f64,
    pub delta: f64,
    pub lambda: f64,
    pub norm_b: f64,
    pub norm_d: f64,
}

/// `weights` are the inner-product weights of the density space.
pub fn localize(lb: &DMatrix<C>, ld: &DMatrix<C>, weights: &[f64], delta: f64) -> Result<LocalizationResult> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!("regularization {delta} must be positive")));
    }
    let m = weights.len();
    if lb.ncols() != m || ld.ncols() != m {
        return Err(Error::GridMismatch(format!(
            "operators have {} and {} columns, density space has {m}",
            lb.ncols(),
            ld.ncols()
        )));
    }
    let a = lb.adjoint() * lb;
    let mut b = ld.adjoint() * ld;
    for (i, w) in weights.iter().enumerate() {
        b[(i, i)] += C::new(delta * w, 0.0);
    }
    let b = (&b + b.adjoint()) * C::new(0.5, 0.0);
    let chol = Cholesky::new(b).ok_or_else(|| Error::Eigen("regularized Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    // C = L⁻¹ A L⁻ᴴ
    let linv_a = l
        .solve_lower_triangular(&a)
        .ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&linv_a.adjoint())
        .ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?
        .adjoint();
    let c = (&c + c.adjoint()) * C::new(0.5, 0.0);
    let eig = c.symmetric_eigen();
    let (top, lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, v)| (i, *v))
        .ok_or_else(|| Error::Eigen("empty spectrum".into()))?;
    if !lambda.is_finite() {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    let y: DVector<C> = eig.eigenvectors.column(top).into_owned();
    let mut g = l
        .adjoint()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    let nrm: f64 = g.iter().zip(weights).map(|(z, w)| z.norm_sqr() * w).sum::<f64>().sqrt();
    g /= C::new(nrm, 0.0);
    let norm_b = (lb * &g).norm();
    let norm_d = (ld * &g).norm();
    Ok(LocalizationResult {
        g: HerglotzDensity::from_stacked(&g),
        ratio: if norm_d == 0.0 { f64::INFINITY } else { (norm_b / norm_d).powi(2) },
        delta,
        lambda,
        norm_b,
        norm_d,
    })
}

/// One point of a localization curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub delta: f64,
    pub ratio: f64,
    pub norm_b: f64,
    pub norm_d: f64,
}

/// Localization results for each `δ`, from shared restriction matrices.
pub fn localization_curve(
    b: &RegionSamples,
    d: &RegionSamples,
    field: &MaterialField,
    grid: &DirectionGrid,
    deltas: &[f64],
) -> Result<Vec<CurvePoint>> {
    if b.variant != d.variant {
        return Err(Error::InvalidInput("both regions must sample the same variant".into()));
    }
    let lb = restriction_matrix(field, b, grid)?;
    let ld = restriction_matrix(field, d, grid)?;
    let weights = grid.channel_weights(&field.background);
    deltas
        .par_iter()
        .map(|&delta| {
            let r = localize(&lb, &ld, &weights, delta)?;
            Ok(CurvePoint {
                delta,
                ratio: r.ratio,
                norm_b: r.norm_b,
                norm_d: r.norm_d,
            })
        })
        .collect()
}

/// `delta,ratio,norm_B,norm_D`.
pub fn write_curve_csv<W: Write>(curve: &[CurvePoint], mut w: W) -> Result<()> {
    writeln!(w, "delta,ratio,norm_B,norm_D")?;
    for p in curve {
        writeln!(w, "{:?},{:?},{:?},{:?}", p.delta, p.ratio, p.norm_b, p.norm_d)?;
    }
    Ok(())
}
