use std::path::{Path, PathBuf};

use elastic_monotonicity::farfield::{Backend, DirectionGrid};
use elastic_monotonicity::forward::GridOptions;
use elastic_monotonicity::localized::Variant;
use elastic_monotonicity::medium::{MaterialField, Shape};
use elastic_monotonicity::monotonicity::{CenterGrid, TestBall, Thresholds};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub scene: MaterialField,
    #[serde(default = "default_ladder")]
    pub ladder: Vec<usize>,
    #[serde(default)]
    pub backend: BackendConfig,
    /// Far field CSV files, one per ladder rung. Relative paths resolve
    /// against the config file. Without them data is synthesized.
    #[serde(default)]
    pub data: Option<Vec<PathBuf>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub recon: Option<ReconConfig>,
    #[serde(default)]
    pub validate: Option<ValidateConfig>,
    #[serde(default)]
    pub localize: Option<LocalizeConfig>,
}

fn default_ladder() -> Vec<usize> {
    vec![32, 64]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendConfig {
    Series {
        #[serde(default)]
        order: Option<usize>,
    },
    Grid {
        h: f64,
        #[serde(default)]
        tol: Option<f64>,
        #[serde(default)]
        max_iter: Option<usize>,
    },
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Series { order: None }
    }
}

impl BackendConfig {
    pub fn backend(&self) -> Backend {
        match *self {
            BackendConfig::Series { order } => Backend::Series { order },
            BackendConfig::Grid { h, tol, max_iter } => {
                let mut o = GridOptions::new(h);
                if let Some(t) = tol {
                    o.tol = t;
                }
                if let Some(m) = max_iter {
                    o.max_iter = m;
                }
                Backend::Grid(o)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconConfig {
    pub centers: CenterGrid,
    pub radius: f64,
    pub alpha: [f64; 3],
    #[serde(default)]
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub unitarity: f64,
    pub energy: f64,
    pub main_identity: f64,
    pub spectra: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            unitarity: 1e-3,
            energy: 1e-6,
            main_identity: 1e-3,
            spectra: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    pub tolerances: Tolerances,
    pub boundary_nodes: usize,
    pub densities: usize,
    /// Radius of the integration circle; defaults to the support radius plus 0.5.
    pub circle_radius: Option<f64>,
    pub volume_cells: [usize; 2],
    /// Second medium for the main identity and spectra checks; defaults to the
    /// background.
    pub reference: Option<MaterialField>,
    /// Multiplies the far field operator before the unitarity check.
    pub sigma_injection: f64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            tolerances: Tolerances::default(),
            boundary_nodes: 512,
            densities: 5,
            circle_radius: None,
            volume_cells: [200, 200],
            reference: None,
            sigma_injection: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizeConfig {
    pub b: Shape,
    pub d: Shape,
    #[serde(default = "default_spacing")]
    pub h: f64,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    /// Direction count; defaults to the largest ladder rung.
    #[serde(default)]
    pub n: Option<usize>,
}

fn default_spacing() -> f64 {
    0.05
}

fn default_variant() -> Variant {
    Variant::Field
}

fn default_deltas() -> Vec<f64> {
    vec![1e-2, 1e-4, 1e-6]
}

fn positive(name: &str, v: f64) -> Result<(), String> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(format!("{name} must be positive and finite, got {v}"))
    }
}

/// Whether the series solver can handle `field` directly (no translation).
fn origin_disk_or_empty(field: &MaterialField) -> bool {
    let active: Vec<_> = field.active_inclusions().collect();
    match active.as_slice() {
        [] => true,
        [inc] => matches!(inc.shape, Shape::Disk { center, .. } if center == [0.0, 0.0]),
        _ => false,
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), String> {
        let bytes = std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_slice(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
        if let Some(files) = cfg.data.as_mut() {
            let base = path.parent().unwrap_or(Path::new("."));
            for f in files.iter_mut() {
                if f.is_relative() {
                    *f = base.join(&*f);
                }
            }
        }
        Ok((cfg, bytes))
    }

    /// Precondition checks shared by every subcommand.
    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        self.scene.validate().map_err(|e| e.to_string())?;
        if self.ladder.is_empty() {
            return Err("ladder must list at least one direction count".into());
        }
        for n in &self.ladder {
            DirectionGrid::new(*n).map_err(|e| e.to_string())?;
        }
        if self.ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("ladder {:?} must strictly increase", self.ladder));
        }
        match self.backend {
            BackendConfig::Series { .. } => {
                if self.data.is_none() && self.scene.active_inclusions().count() > 1 {
                    return Err("series backend handles at most one inclusion".into());
                }
            }
            BackendConfig::Grid { h, tol, .. } => {
                positive("grid spacing", h)?;
                if let Some(t) = tol {
                    positive("grid tolerance", t)?;
                }
            }
        }
        if let Some(files) = &self.data {
            if files.len() != self.ladder.len() {
                return Err(format!("{} data files for a ladder of {}", files.len(), self.ladder.len()));
            }
        }
        Ok(())
    }

    pub fn validate_recon(&self) -> Result<&ReconConfig, String> {
        let r = self.recon.as_ref().ok_or("config has no recon section")?;
        r.centers.validate().map_err(|e| e.to_string())?;
        TestBall::new(r.centers.lo, r.radius, r.alpha).map_err(|e| e.to_string())?;
        let t = &r.thresholds;
        positive("tau_floor", t.tau_floor)?;
        if !(t.defect_factor >= 0.0 && t.defect_factor.is_finite()) {
            return Err(format!("defect_factor {} must be nonnegative", t.defect_factor));
        }
        Ok(r)
    }

    pub fn validate_checks(&self) -> Result<ValidateConfig, String> {
        let v = self.validate.clone().unwrap_or_default();
        let t = v.tolerances;
        for (name, x) in [
            ("unitarity tolerance", t.unitarity),
            ("energy tolerance", t.energy),
            ("main identity tolerance", t.main_identity),
            ("spectra tolerance", t.spectra),
            ("sigma_injection", v.sigma_injection),
        ] {
            positive(name, x)?;
        }
        if let Some(r) = v.circle_radius {
            positive("circle_radius", r)?;
        }
        if v.boundary_nodes < 3 || v.densities == 0 || v.volume_cells.contains(&0) {
            return Err("boundary_nodes ≥ 3, densities ≥ 1 and nonzero volume_cells required".into());
        }
        if !origin_disk_or_empty(&self.scene) {
            return Err("validation needs a background scene or one origin-centred disk".into());
        }
        if let Some(r) = &v.reference {
            r.validate().map_err(|e| e.to_string())?;
            if r.background != self.scene.background || !origin_disk_or_empty(r) {
                return Err("reference medium must share the background and be one origin-centred disk".into());
            }
        }
        Ok(v)
    }

    pub fn validate_localize(&self) -> Result<&LocalizeConfig, String> {
        let l = self.localize.as_ref().ok_or("config has no localize section")?;
        l.b.validate().map_err(|e| format!("region b: {e}"))?;
        l.d.validate().map_err(|e| format!("region d: {e}"))?;
        positive("sample spacing h", l.h)?;
        if l.deltas.is_empty() {
            return Err("deltas must be nonempty".into());
        }
        for d in &l.deltas {
            positive("delta", *d)?;
        }
        if let Some(n) = l.n {
            DirectionGrid::new(n).map_err(|e| e.to_string())?;
        }
        if self.scene.active_inclusions().count() > 1 {
            return Err("localization handles at most one inclusion".into());
        }
        Ok(l)
    }
}
