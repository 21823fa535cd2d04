//! Piecewise-constant elastic media: a homogeneous background with inclusions
//! where `λ` and `μ` increase and `ρ` decreases by a constant contrast.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;

/// Homogeneous background `(λ0, μ0, ρ0)` at circular frequency `ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Background {
    pub lambda0: f64,
    pub mu0: f64,
    pub rho0: f64,
    pub omega: f64,
}

impl Background {
    pub fn new(lambda0: f64, mu0: f64, rho0: f64, omega: f64) -> Result<Self> {
        let b = Background {
            lambda0,
            mu0,
            rho0,
            omega,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.mu0 > 0.0
            && self.mu0 + self.lambda0 > 0.0
            && self.rho0 > 0.0
            && self.omega > 0.0
            && [self.lambda0, self.mu0, self.rho0, self.omega]
                .iter()
                .all(|v| v.is_finite());
        if !ok {
            return Err(Error::InvalidInput(format!(
                "background requires mu0 > 0, mu0 + lambda0 > 0, rho0 > 0, omega > 0; got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn wavenumbers(&self) -> Wavenumbers {
        // validated at construction
        wavenumbers(self.lambda0, self.mu0, self.rho0, self.omega)
            .expect("background parameters are admissible")
    }

    pub fn params(&self) -> Lame {
        Lame {
            lambda: self.lambda0,
            mu: self.mu0,
            rho: self.rho0,
        }
    }
}

/// Pointwise material triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lame {
    pub lambda: f64,
    pub mu: f64,
    pub rho: f64,
}

impl Lame {
    pub fn wavenumbers(&self, omega: f64) -> Result<Wavenumbers> {
        wavenumbers(self.lambda, self.mu, self.rho, omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavenumbers {
    pub kp: f64,
    pub ks: f64,
}

/// `kp = ω √(ρ / (2μ + λ))`, `ks = ω √(ρ / μ)`.
pub fn wavenumbers(lambda: f64, mu: f64, rho: f64, omega: f64) -> Result<Wavenumbers> {
    if !(mu > 0.0 && 2.0 * mu + lambda > 0.0 && rho > 0.0 && omega > 0.0) {
        return Err(Error::Domain(format!(
            "wavenumbers need mu > 0, 2mu + lambda > 0, rho > 0, omega > 0 (lambda={lambda}, mu={mu}, rho={rho}, omega={omega})"
        )));
    }
    Ok(Wavenumbers {
        kp: omega * (rho / (2.0 * mu + lambda)).sqrt(),
        ks: omega * (rho / mu).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Disk { center: [f64; 2], radius: f64 },
    Rect { lo: [f64; 2], hi: [f64; 2] },
    Union(Vec<Shape>),
}

impl Shape {
    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        Shape::Disk { center, radius }
    }

    pub fn rect(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Shape::Rect { lo, hi }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Shape::Disk { center, radius } => {
                if !(*radius > 0.0 && radius.is_finite() && center.iter().all(|c| c.is_finite()))
                {
                    return Err(Error::InvalidInput(format!(
                        "disk needs a finite positive radius, got {radius}"
                    )));
                }
            }
            Shape::Rect { lo, hi } => {
                if !(lo[0] < hi[0] && lo[1] < hi[1]) {
                    return Err(Error::InvalidInput(format!(
                        "rectangle needs lo < hi componentwise, got {lo:?} / {hi:?}"
                    )));
                }
            }
            Shape::Union(parts) => {
                if parts.is_empty() {
                    return Err(Error::InvalidInput("empty union".into()));
                }
                for p in parts {
                    p.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Closed-set membership: boundary points are inside.
    pub fn contains(&self, x: &Point) -> bool {
        match self {
            Shape::Disk { center, radius } => {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                dx * dx + dy * dy <= radius * radius
            }
            Shape::Rect { lo, hi } => {
                x[0] >= lo[0] && x[0] <= hi[0] && x[1] >= lo[1] && x[1] <= hi[1]
            }
            Shape::Union(parts) => parts.iter().any(|p| p.contains(x)),
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            Shape::Disk { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            Shape::Rect { lo, hi } => (*lo, *hi),
            Shape::Union(parts) => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for p in parts {
                    let (l, h) = p.bbox();
                    for k in 0..2 {
                        lo[k] = lo[k].min(l[k]);
                        hi[k] = hi[k].max(h[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Largest distance from the origin to a point of the shape.
    pub fn max_origin_distance(&self) -> f64 {
        match self {
            Shape::Disk { center, radius } => center[0].hypot(center[1]) + radius,
            Shape::Rect { lo, hi } => {
                let mut best: f64 = 0.0;
                for cx in [lo[0], hi[0]] {
                    for cy in [lo[1], hi[1]] {
                        best = best.max(cx.hypot(cy));
                    }
                }
                best
            }
            Shape::Union(parts) => parts
                .iter()
                .map(Shape::max_origin_distance)
                .fold(0.0, f64::max),
        }
    }

    /// Smallest distance from the origin to a point of the shape (0 if it
    /// contains the origin).
    pub fn min_origin_distance(&self) -> f64 {
        match self {
            Shape::Disk { center, radius } => (center[0].hypot(center[1]) - radius).max(0.0),
            Shape::Rect { lo, hi } => {
                let dx = (lo[0] - 0.0).max(0.0).max(0.0 - hi[0]);
                let dy = (lo[1] - 0.0).max(0.0).max(0.0 - hi[1]);
                dx.hypot(dy)
            }
            Shape::Union(parts) => parts
                .iter()
                .map(Shape::min_origin_distance)
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// A few points used for the admissibility check.
    fn probe_points(&self) -> Vec<Point> {
        match self {
            Shape::Disk { center, radius } => {
                let c = Point::new(center[0], center[1]);
                let mut pts = vec![c];
                for k in 0..4 {
                    let t = k as f64 * std::f64::consts::FRAC_PI_2;
                    pts.push(c + Point::new(t.cos(), t.sin()) * *radius);
                }
                pts
            }
            Shape::Rect { lo, hi } => vec![
                Point::new(0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])),
                Point::new(lo[0], lo[1]),
                Point::new(hi[0], lo[1]),
                Point::new(lo[0], hi[1]),
                Point::new(hi[0], hi[1]),
            ],
            Shape::Union(parts) => parts.iter().flat_map(Shape::probe_points).collect(),
        }
    }
}

/// One inclusion: `λ = λ0 + ψ_λ`, `μ = μ0 + ψ_μ`, `ρ = ρ0 − ψ_ρ` on `shape`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inclusion {
    pub shape: Shape,
    #[serde(default)]
    pub psi_lambda: f64,
    #[serde(default)]
    pub psi_mu: f64,
    #[serde(default)]
    pub psi_rho: f64,
}

impl Inclusion {
    pub fn new(shape: Shape, psi_lambda: f64, psi_mu: f64, psi_rho: f64) -> Self {
        Inclusion {
            shape,
            psi_lambda,
            psi_mu,
            psi_rho,
        }
    }

    pub fn is_inactive(&self) -> bool {
        self.psi_lambda == 0.0 && self.psi_mu == 0.0 && self.psi_rho == 0.0
    }

    pub fn params(&self, bg: &Background) -> Lame {
        Lame {
            lambda: bg.lambda0 + self.psi_lambda,
            mu: bg.mu0 + self.psi_mu,
            rho: bg.rho0 - self.psi_rho,
        }
    }
}

/// Background plus inclusions. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialField {
    pub background: Background,
    #[serde(default)]
    pub inclusions: Vec<Inclusion>,
    /// Accept contrasts of either sign. The reconstruction theory only covers
    /// the default sign convention.
    #[serde(default, rename = "unsafe_signed_contrast")]
    pub allow_signed: bool,
}

impl MaterialField {
    pub fn homogeneous(background: Background) -> Self {
        MaterialField {
            background,
            inclusions: Vec::new(),
            allow_signed: false,
        }
    }

    pub fn new(background: Background, inclusions: Vec<Inclusion>) -> Result<Self> {
        let f = MaterialField {
            background,
            inclusions,
            allow_signed: false,
        };
        f.validate()?;
        Ok(f)
    }

    /// Same as [`MaterialField::new`] but contrasts may take either sign.
    pub fn new_signed(background: Background, inclusions: Vec<Inclusion>) -> Result<Self> {
        let f = MaterialField {
            background,
            inclusions,
            allow_signed: true,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        self.background.validate()?;
        for (i, inc) in self.inclusions.iter().enumerate() {
            inc.shape.validate()?;
            let psi = [inc.psi_lambda, inc.psi_mu, inc.psi_rho];
            if psi.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("inclusion {i}: non-finite contrast")));
            }
            if !self.allow_signed && psi.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "inclusion {i}: contrasts must be nonnegative (set unsafe_signed_contrast to override)"
                )));
            }
            let p = inc.params(&self.background);
            if !(p.mu > 0.0 && p.mu + p.lambda > 0.0 && p.rho > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "inclusion {i}: interior parameters {p:?} violate mu > 0, mu + lambda > 0, rho > 0"
                )));
            }
        }
        for inc in &self.inclusions {
            for x in inc.shape.probe_points() {
                self.eval(&x)?;
            }
        }
        Ok(())
    }

    /// Material triple at `x`; errors where two inclusions with contrast in the
    /// same parameter both contain `x`.
    pub fn eval(&self, x: &Point) -> Result<Lame> {
        let bg = &self.background;
        let mut out = bg.params();
        let mut hit = [false; 3];
        for inc in &self.inclusions {
            if !inc.shape.contains(x) {
                continue;
            }
            let parts = [
                (inc.psi_lambda, "lambda"),
                (inc.psi_mu, "mu"),
                (inc.psi_rho, "rho"),
            ];
            for (k, (psi, name)) in parts.iter().enumerate() {
                if *psi == 0.0 {
                    continue;
                }
                if hit[k] {
                    return Err(Error::Overlap {
                        x: x[0],
                        y: x[1],
                        parameter: name,
                    });
                }
                hit[k] = true;
            }
            out.lambda += inc.psi_lambda;
            out.mu += inc.psi_mu;
            out.rho -= inc.psi_rho;
        }
        Ok(out)
    }

    pub fn active_inclusions(&self) -> impl Iterator<Item = &Inclusion> {
        self.inclusions.iter().filter(|i| !i.is_inactive())
    }

    pub fn is_homogeneous(&self) -> bool {
        self.active_inclusions().next().is_none()
    }

    /// Origin-centred disk enclosing every inclusion, inflated by 10%.
    pub fn bounding_disk(&self) -> Result<(Point, f64)> {
        if self.inclusions.is_empty() {
            return Err(Error::InvalidInput("bounding disk of an empty field".into()));
        }
        let r = self
            .inclusions
            .iter()
            .map(|i| i.shape.max_origin_distance())
            .fold(0.0, f64::max);
        Ok((Point::zeros(), 1.1 * r))
    }

    /// Union bounding box of the active inclusions.
    pub fn support_bbox(&self) -> Option<([f64; 2], [f64; 2])> {
        let mut it = self.active_inclusions().map(|i| i.shape.bbox());
        let first = it.next()?;
        Some(it.fold(first, |(lo, hi), (l, h)| {
            (
                [lo[0].min(l[0]), lo[1].min(l[1])],
                [hi[0].max(h[0]), hi[1].max(h[1])],
            )
        }))
    }
}
