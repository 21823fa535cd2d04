//! Monotonicity test: eigenvalue sign counts of `Re(S*(F♭ − F))` for test
//! balls, a ladder-based classification rule and indicator maps.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::farfield::{Backend, DirectionGrid, FarFieldOperator, ScatteringOperator};
use crate::forward::C;
use crate::medium::{Background, Inclusion, MaterialField, Point, Shape};

mod identities;

pub use identities::{check_energy_identity, check_main_identity, IdentityCheck, VolumeGrid};

/// Ball `B` with coefficients `λ0 + α1`, `μ0 + α2`, `ρ0 − α3` inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestBall {
    pub center: [f64; 2],
    pub radius: f64,
    pub alpha: [f64; 3],
}

impl TestBall {
    pub fn new(center: [f64; 2], radius: f64, alpha: [f64; 3]) -> Result<Self> {
        let b = TestBall { center, radius, alpha };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        validate_ball(self.radius, &self.alpha)?;
        if !self.center.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput(format!("ball centre {:?} must be finite", self.center)));
        }
        Ok(())
    }

    pub fn inclusion(&self) -> Inclusion {
        Inclusion::new(Shape::disk(self.center, self.radius), self.alpha[0], self.alpha[1], self.alpha[2])
    }
}

fn validate_ball(radius: f64, alpha: &[f64; 3]) -> Result<()> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!("ball radius {radius} must be positive")));
    }
    if !alpha.iter().all(|a| a.is_finite() && *a >= 0.0) {
        return Err(Error::InvalidInput(format!("alpha {alpha:?} must be finite and nonnegative")));
    }
    if alpha.iter().all(|a| *a == 0.0) {
        return Err(Error::InvalidInput("alpha must be nonzero".into()));
    }
    Ok(())
}

/// Threshold policy and ladder classification constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Lower bound on `τ / ‖A‖₂`.
    pub tau_floor: f64,
    /// `τ / ‖A‖₂` is at least this multiple of the unitarity defect.
    pub defect_factor: f64,
    pub c_in: usize,
    pub c_out: usize,
    pub growth: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            tau_floor: 1e-8,
            defect_factor: 10.0,
            c_in: 3,
            c_out: 8,
            growth: 4,
        }
    }
}

impl Thresholds {
    /// `τ = max(tau_floor, defect_factor · defect) · ‖A‖₂`.
    pub fn tau(&self, a_norm: f64, defect: f64) -> f64 {
        self.tau_floor.max(self.defect_factor * defect) * a_norm
    }

    pub fn classify(&self, counts: &[usize]) -> Class {
        let (Some(&first), Some(&last)) = (counts.first(), counts.last()) else {
            return Class::Undecided;
        };
        if last <= self.c_in && last <= first + 1 {
            Class::Inside
        } else if last >= first + self.growth && last > self.c_out {
            Class::Outside
        } else {
            Class::Undecided
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Class {
    Inside,
    Outside,
    Undecided,
}

impl Class {
    pub fn as_str(&self) -> &'static str {
        match self {
            Class::Inside => "INSIDE",
            Class::Outside => "OUTSIDE",
            Class::Undecided => "UNDECIDED",
        }
    }
}

/// Spectrum summary of one test operator.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub tau: f64,
    pub neg_count: usize,
    pub pos_count: usize,
    pub n: usize,
}

impl MonotonicityReport {
    pub fn from_matrix(a: &DMatrix<C>, tau: f64) -> Result<Self> {
        let eigenvalues = hermitian_eigenvalues(a)?;
        Ok(MonotonicityReport {
            neg_count: eigenvalues.iter().filter(|&&v| v < -tau).count(),
            pos_count: eigenvalues.iter().filter(|&&v| v > tau).count(),
            n: a.nrows() / 2,
            eigenvalues,
            tau,
        })
    }

    /// `max |λ|`.
    pub fn norm(&self) -> f64 {
        self.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// `W⁻¹ Aᴴ W`: the adjoint of `A` in the inner product with diagonal weights.
pub fn weighted_adjoint(a: &DMatrix<C>, weights: &[f64]) -> DMatrix<C> {
    let mut b = a.adjoint();
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            b[(i, j)] *= weights[j] / weights[i];
        }
    }
    b
}

/// `(A + A^#)/2` with the weighted adjoint `A^#`.
pub fn hermitian_part(a: &DMatrix<C>, weights: &[f64]) -> Result<DMatrix<C>> {
    if !a.is_square() || a.nrows() != weights.len() {
        return Err(Error::InvalidInput(format!(
            "hermitian part needs a square matrix matching {} weights, got {}×{}",
            weights.len(),
            a.nrows(),
            a.ncols()
        )));
    }
    Ok((a + weighted_adjoint(a, weights)) * C::new(0.5, 0.0))
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(a: &DMatrix<C>) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::InvalidInput("eigenvalues need a square matrix".into()));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Eigen("matrix has non-finite entries".into()));
    }
    let mut v: Vec<f64> = a.clone().symmetric_eigenvalues().iter().cloned().collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Eigen("eigenvalues did not converge".into()));
    }
    v.sort_by(|x, y| x.total_cmp(y));
    Ok(v)
}

/// Number of eigenvalues below `−τ`.
pub fn neg_eig_count(a: &DMatrix<C>, tau: f64) -> Result<usize> {
    if !(tau > 0.0) {
        return Err(Error::InvalidInput(format!("threshold {tau} must be positive")));
    }
    Ok(hermitian_eigenvalues(a)?.iter().filter(|&&v| v < -tau).count())
}

fn check_compatible(a: &FarFieldOperator, b: &FarFieldOperator) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch(format!("N = {} vs N = {}", a.n(), b.n())));
    }
    if a.background != b.background {
        return Err(Error::GridMismatch("operators use different backgrounds".into()));
    }
    Ok(())
}

/// `Re(S_base* (F_test − F_data))` in orthonormal weighted coordinates,
/// where `S_base` is built from `base`.
pub fn test_operator_with(
    base: &FarFieldOperator,
    data: &FarFieldOperator,
    test: &FarFieldOperator,
) -> Result<DMatrix<C>> {
    check_compatible(base, data)?;
    check_compatible(data, test)?;
    let s = ScatteringOperator::new(base);
    let diff = test.weighted() - data.weighted();
    let a = s.adjoint() * diff;
    Ok((&a + a.adjoint()) * C::new(0.5, 0.0))
}

/// `Re(S_data* (F_test − F_data))` in orthonormal weighted coordinates.
pub fn test_operator(data: &FarFieldOperator, test: &FarFieldOperator) -> Result<DMatrix<C>> {
    test_operator_with(data, data, test)
}

/// Far field data paired with its scattering-operator unitarity defect.
#[derive(Debug, Clone)]
pub struct Data {
    pub f: FarFieldOperator,
    pub defect: f64,
}

impl Data {
    pub fn new(f: FarFieldOperator) -> Self {
        let defect = ScatteringOperator::new(&f).unitarity_defect();
        Data { f, defect }
    }

    /// Report for a given test operator `F♭`.
    pub fn report(&self, test: &FarFieldOperator, thr: &Thresholds) -> Result<MonotonicityReport> {
        let a = test_operator(&self.f, test)?;
        let norm = crate::farfield::hermitian_norm(&a);
        MonotonicityReport::from_matrix(&a, thr.tau(norm, self.defect).max(f64::MIN_POSITIVE))
    }
}

/// `F♭` for an origin-centred ball, ready to be moved to any centre.
#[derive(Debug, Clone)]
pub struct BallOperator {
    pub radius: f64,
    pub alpha: [f64; 3],
    origin: FarFieldOperator,
}

impl BallOperator {
    pub fn new(background: Background, grid: DirectionGrid, radius: f64, alpha: [f64; 3]) -> Result<Self> {
        validate_ball(radius, &alpha)?;
        let inc = Inclusion::new(Shape::disk([0.0, 0.0], radius), alpha[0], alpha[1], alpha[2]);
        let field = MaterialField::new(background, vec![inc])?;
        let origin = FarFieldOperator::assemble(&field, grid, Backend::Series { order: None })?;
        Ok(BallOperator { radius, alpha, origin })
    }

    pub fn at(&self, center: [f64; 2]) -> FarFieldOperator {
        self.origin.translate(&Point::new(center[0], center[1]))
    }
}

/// Report for one test ball against far field data.
pub fn indicator(data: &FarFieldOperator, ball: &TestBall, thr: &Thresholds) -> Result<MonotonicityReport> {
    ball.validate()?;
    let b = BallOperator::new(data.background, data.grid, ball.radius, ball.alpha)?;
    Data::new(data.clone()).report(&b.at(ball.center), thr)
}

/// Rectangular grid of ball centres, `nx × ny` points from `lo` to `hi`
/// inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterGrid {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

impl CenterGrid {
    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidInput("centre grid needs at least one point per axis".into()));
        }
        let ok = (0..2).all(|i| self.lo[i].is_finite() && self.hi[i].is_finite() && self.lo[i] <= self.hi[i]);
        if !ok {
            return Err(Error::InvalidInput(format!("centre grid bounds {:?}..{:?}", self.lo, self.hi)));
        }
        Ok(())
    }

    fn axis(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    }

    /// Row-major from `lo`: x varies fastest.
    pub fn centers(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                out.push([
                    Self::axis(self.lo[0], self.hi[0], self.nx, ix),
                    Self::axis(self.lo[1], self.hi[1], self.ny, iy),
                ]);
            }
        }
        out
    }
}

/// Ladder counts and classification for every centre of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorMap {
    pub grid: CenterGrid,
    pub radius: f64,
    pub alpha: [f64; 3],
    pub ladder: Vec<usize>,
    pub thresholds: Thresholds,
    pub centers: Vec<[f64; 2]>,
    /// `counts[c][k]`: negative eigenvalue count at centre `c` and ladder rung `k`.
    pub counts: Vec<Vec<usize>>,
    pub classes: Vec<Class>,
    /// Unitarity defect of each data operator.
    pub defects: Vec<f64>,
}

/// Sweep test balls over a centre grid. `data` holds one operator per
/// ladder rung, in increasing `N`.
pub fn reconstruct(
    data: &[FarFieldOperator],
    centers: CenterGrid,
    radius: f64,
    alpha: [f64; 3],
    thr: &Thresholds,
) -> Result<IndicatorMap> {
    validate_ball(radius, &alpha)?;
    centers.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidInput("reconstruction needs at least one far field operator".into()));
    }
    for w in data.windows(2) {
        if w[0].background != w[1].background || w[0].n() >= w[1].n() {
            return Err(Error::InvalidInput("ladder must share a background and strictly increase in N".into()));
        }
    }
    let prepared: Vec<Data> = data.iter().map(|f| Data::new(f.clone())).collect();
    let balls = data
        .iter()
        .map(|f| BallOperator::new(f.background, f.grid, radius, alpha))
        .collect::<Result<Vec<_>>>()?;
    let points = centers.centers();
    let counts = points
        .par_iter()
        .map(|c| {
            prepared
                .iter()
                .zip(&balls)
                .map(|(d, b)| Ok(d.report(&b.at(*c), thr)?.neg_count))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let classes = counts.iter().map(|c| thr.classify(c)).collect();
    Ok(IndicatorMap {
        grid: centers,
        radius,
        alpha,
        ladder: data.iter().map(|f| f.n()).collect(),
        thresholds: *thr,
        centers: points,
        counts,
        classes,
        defects: prepared.iter().map(|d| d.defect).collect(),
    })
}

impl IndicatorMap {
    /// `center_x,center_y,neg_count@N…,class`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "center_x,center_y")?;
        for n in &self.ladder {
            write!(w, ",neg_count@{n}")?;
        }
        writeln!(w, ",class")?;
        for ((c, k), cls) in self.centers.iter().zip(&self.counts).zip(&self.classes) {
            write!(w, "{:?},{:?}", c[0], c[1])?;
            for v in k {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{}", cls.as_str())?;
        }
        Ok(())
    }

    /// Plain PGM of the count at the largest `N`, clipped to 255, top row at
    /// the largest `y`.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        writeln!(w, "P2\n{nx} {ny}\n255")?;
        for iy in (0..ny).rev() {
            let row: Vec<String> = (0..nx)
                .map(|ix| {
                    let c = self.counts[iy * nx + ix].last().copied().unwrap_or(0);
                    c.min(255).to_string()
                })
                .collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn count(&self, class: Class) -> usize {
        self.classes.iter().filter(|c| **c == class).count()
    }

    /// Jaccard index between the centres classified `INSIDE` and those where
    /// `truth` holds.
    pub fn jaccard<F: Fn(&[f64; 2]) -> bool>(&self, truth: F) -> f64 {
        let mut inter = 0;
        let mut union = 0;
        for (c, cls) in self.centers.iter().zip(&self.classes) {
            let a = *cls == Class::Inside;
            let b = truth(c);
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::I;

    #[test]
    fn hermitian_part_of_i_is_zero() {
        let a = DMatrix::<C>::identity(4, 4) * I;
        let h = hermitian_part(&a, &[1.0; 4]).unwrap();
        assert!(h.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn hermitian_part_keeps_weighted_self_adjoint() {
        let w = [1.0, 2.0, 0.5];
        let base = DMatrix::<C>::from_fn(3, 3, |i, j| C::new((i + j) as f64, i as f64 - j as f64));
        // W⁻¹ H is self-adjoint in the W inner product for Hermitian H
        let mut a = base.clone();
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] = (base[(i, j)] + base[(j, i)].conj()) / w[i];
            }
        }
        let h = hermitian_part(&a, &w).unwrap();
        assert!((h - &a).norm() < 1e-14 * a.norm());
    }

    #[test]
    fn neg_count_diag() {
        let a = DMatrix::<C>::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C::new(1.0, 0.0),
            C::new(-0.5, 0.0),
            C::new(-1e-12, 0.0),
        ]));
        assert_eq!(neg_eig_count(&a, 1e-6).unwrap(), 1);
        assert_eq!(neg_eig_count(&DMatrix::zeros(3, 3), 1e-6).unwrap(), 0);
        assert!(neg_eig_count(&a, 0.0).is_err());
    }

    #[test]
    fn eigen_rejects_nan() {
        let mut a = DMatrix::<C>::identity(2, 2);
        a[(0, 1)] = C::new(f64::NAN, 0.0);
        assert!(matches!(hermitian_eigenvalues(&a), Err(Error::Eigen(_))));
    }

    #[test]
    fn zero_alpha_rejected() {
        assert!(TestBall::new([0.0, 0.0], 0.2, [0.0; 3]).is_err());
        assert!(TestBall::new([0.0, 0.0], 0.2, [-1.0, 0.0, 0.0]).is_err());
        assert!(TestBall::new([0.0, 0.0], 0.0, [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn classification_rule() {
        let t = Thresholds::default();
        assert_eq!(t.classify(&[2, 3]), Class::Inside);
        assert_eq!(t.classify(&[1, 3]), Class::Undecided);
        assert_eq!(t.classify(&[5, 9]), Class::Outside);
        assert_eq!(t.classify(&[5, 8]), Class::Undecided);
        assert_eq!(t.classify(&[6, 9]), Class::Undecided);
    }

    #[test]
    fn centre_grid_order() {
        let g = CenterGrid { lo: [0.0, 0.0], hi: [1.0, 2.0], nx: 2, ny: 3 };
        assert_eq!(g.centers(), vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.0, 2.0], [1.0, 2.0]]);
    }
}
