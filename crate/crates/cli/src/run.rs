use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use elastic_monotonicity::farfield::{calibrate, DirectionGrid, FarFieldOperator, HerglotzDensity, ScatteringOperator};
use elastic_monotonicity::forward::C;
use elastic_monotonicity::localized::{localization_curve, write_curve_csv, RegionSamples};
use elastic_monotonicity::medium::{MaterialField, Shape};
use elastic_monotonicity::monotonicity::{
    check_energy_identity, check_main_identity, hermitian_eigenvalues, reconstruct, test_operator_with, Class,
    VolumeGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::manifest::RunManifest;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Solver(String),
    Validation(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Validation(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Solver(m) | Failure::Validation(m) => m,
        }
    }
}

type Outcome = Result<(), Failure>;

fn solver<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Solver(e.to_string())
}

fn create(out: &Path, name: &str, m: &mut RunManifest) -> Result<BufWriter<File>, Failure> {
    let f = File::create(out.join(name)).map_err(|e| Failure::Solver(format!("cannot create {name}: {e}")))?;
    m.outputs.push(name.to_string());
    Ok(BufWriter::new(f))
}

/// One far field operator per ladder rung, loaded or synthesized, with
/// calibration recorded in the manifest.
fn data_operators(cfg: &ExperimentConfig, m: &mut RunManifest) -> Result<Vec<FarFieldOperator>, Failure> {
    let mut ops = Vec::with_capacity(cfg.ladder.len());
    for (k, &n) in cfg.ladder.iter().enumerate() {
        let f = match &cfg.data {
            Some(files) => {
                let path = &files[k];
                let file = File::open(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
                let f = FarFieldOperator::read_csv(BufReader::new(file))
                    .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
                if f.n() != n || f.background != cfg.scene.background {
                    return Err(Failure::Config(format!(
                        "{} holds N = {} for another background or rung (expected N = {n})",
                        path.display(),
                        f.n()
                    )));
                }
                f
            }
            None => {
                let grid = DirectionGrid::new(n).map_err(solver)?;
                m.time("assemble", || FarFieldOperator::assemble(&cfg.scene, grid, cfg.backend.backend()))
                    .map_err(solver)?
            }
        };
        let c = m.time("calibrate", || calibrate(&f));
        m.record_calibration(n, &c);
        ops.push(f);
    }
    Ok(ops)
}

pub fn forward(cfg: &ExperimentConfig, out: &Path, m: &mut RunManifest) -> Outcome {
    let ops = data_operators(cfg, m)?;
    for f in &ops {
        let mut w = create(out, &format!("far_field_N{}.csv", f.n()), m)?;
        f.write_csv(&mut w).map_err(solver)?;
        w.flush().map_err(solver)?;
    }
    Ok(())
}

fn alpha_warnings(cfg: &ExperimentConfig, alpha: &[f64; 3]) -> Vec<String> {
    let names = ["psi_lambda", "psi_mu", "psi_rho"];
    let mut peak = [0.0f64; 3];
    for inc in cfg.scene.active_inclusions() {
        for (p, v) in peak.iter_mut().zip([inc.psi_lambda, inc.psi_mu, inc.psi_rho]) {
            *p = p.max(v);
        }
    }
    (0..3)
        .filter(|&i| alpha[i] > peak[i])
        .map(|i| {
            format!(
                "alpha[{i}] = {} exceeds the largest scene {} = {}; balls inside the scatterer may not test INSIDE",
                alpha[i], names[i], peak[i]
            )
        })
        .collect()
}

pub fn recon(cfg: &ExperimentConfig, out: &Path, m: &mut RunManifest) -> Outcome {
    let r = cfg.validate_recon().map_err(Failure::Config)?.clone();
    m.tolerances = serde_json::to_value(r.thresholds).map_err(solver)?;
    for w in alpha_warnings(cfg, &r.alpha) {
        m.warn(w);
    }
    let ops = data_operators(cfg, m)?;
    let map = m
        .time("reconstruct", || reconstruct(&ops, r.centers, r.radius, r.alpha, &r.thresholds))
        .map_err(solver)?;
    let mut w = create(out, "indicator.csv", m)?;
    map.write_csv(&mut w).map_err(solver)?;
    w.flush().map_err(solver)?;
    let mut w = create(out, "indicator.pgm", m)?;
    map.write_pgm(&mut w).map_err(solver)?;
    w.flush().map_err(solver)?;
    println!(
        "{} centres: {} INSIDE, {} OUTSIDE, {} UNDECIDED",
        map.centers.len(),
        map.count(Class::Inside),
        map.count(Class::Outside),
        map.count(Class::Undecided)
    );
    Ok(())
}

struct Row {
    check: &'static str,
    n: usize,
    residual: f64,
    tolerance: f64,
}

impl Row {
    fn pass(&self) -> bool {
        self.residual <= self.tolerance
    }
}

fn random_density(n: usize, rng: &mut ChaCha8Rng) -> HerglotzDensity {
    let mut g = HerglotzDensity::zeros(n);
    for z in g.gp.iter_mut().chain(g.gs.iter_mut()) {
        *z = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    g
}

fn support_radius(field: &MaterialField) -> f64 {
    field
        .active_inclusions()
        .map(|inc| inc.shape.max_origin_distance())
        .fold(0.0, f64::max)
}

pub fn validate(cfg: &ExperimentConfig, out: &Path, m: &mut RunManifest) -> Outcome {
    let v = cfg.validate_checks().map_err(Failure::Config)?;
    let tol = v.tolerances;
    m.tolerances = serde_json::json!({ "checks": tol, "sigma_injection": v.sigma_injection });
    let reference = v.reference.clone().unwrap_or_else(|| MaterialField::homogeneous(cfg.scene.background));
    let mut rows = Vec::new();

    let ops = data_operators(cfg, m)?;
    for f in &ops {
        let defect = m.time("unitarity", || ScatteringOperator::new(&f.scaled(v.sigma_injection)).unitarity_defect());
        rows.push(Row { check: "unitarity", n: f.n(), residual: defect, tolerance: tol.unitarity });
    }

    let n = *cfg.ladder.last().expect("validated ladder");
    let grid = DirectionGrid::new(n).map_err(solver)?;
    let radius = v
        .circle_radius
        .unwrap_or(support_radius(&cfg.scene).max(support_radius(&reference)) + 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut worst: f64 = 0.0;
    for _ in 0..v.densities {
        let g = random_density(n, &mut rng);
        let c = m
            .time("energy", || check_energy_identity(&cfg.scene, grid, &g, radius, v.boundary_nodes))
            .map_err(solver)?;
        worst = worst.max(c.residual);
    }
    rows.push(Row { check: "energy", n, residual: worst, tolerance: tol.energy });

    let g = random_density(n, &mut rng);
    let volume = VolumeGrid::new(v.volume_cells[0], v.volume_cells[1]);
    let c = m
        .time("main_identity", || {
            check_main_identity(&cfg.scene, &reference, grid, &g, radius, v.boundary_nodes, volume)
        })
        .map_err(solver)?;
    rows.push(Row { check: "main_identity", n, residual: c.residual, tolerance: tol.main_identity });

    let spectra = m.time("spectra", || -> elastic_monotonicity::Result<f64> {
        let f1 = ops.last().expect("nonempty ladder");
        let f2 = FarFieldOperator::assemble(&reference, grid, cfg.backend.backend())?;
        let e1 = hermitian_eigenvalues(&test_operator_with(f1, f1, &f2)?)?;
        let e2 = hermitian_eigenvalues(&test_operator_with(&f2, f1, &f2)?)?;
        let scale = e1.iter().chain(&e2).map(|x| x.abs()).fold(0.0, f64::max);
        let gap = e1.iter().zip(&e2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok(if scale == 0.0 { 0.0 } else { gap / scale })
    });
    rows.push(Row { check: "spectra", n, residual: spectra.map_err(solver)?, tolerance: tol.spectra });

    let mut w = create(out, "validation.csv", m)?;
    let mut table = String::from("check,n,residual,tolerance,pass\n");
    for r in &rows {
        table += &format!("{},{},{:e},{:e},{}\n", r.check, r.n, r.residual, r.tolerance, r.pass());
    }
    w.write_all(table.as_bytes()).map_err(solver)?;
    w.flush().map_err(solver)?;
    print!("{table}");

    let failed: Vec<_> = rows.iter().filter(|r| !r.pass()).map(|r| format!("{}@{}", r.check, r.n)).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(format!("checks failed: {}", failed.join(", "))))
    }
}

fn boxes_disjoint(a: &Shape, b: &Shape) -> bool {
    let (alo, ahi) = a.bbox();
    let (blo, bhi) = b.bbox();
    (0..2).any(|i| ahi[i] < blo[i] || bhi[i] < alo[i])
}

pub fn localize(cfg: &ExperimentConfig, out: &Path, m: &mut RunManifest) -> Outcome {
    let l = cfg.validate_localize().map_err(Failure::Config)?.clone();
    m.tolerances = serde_json::json!({ "deltas": l.deltas, "h": l.h, "variant": l.variant });
    let n = l.n.unwrap_or(*cfg.ladder.last().expect("validated ladder"));
    let grid = DirectionGrid::new(n).map_err(solver)?;
    let f = m
        .time("assemble", || FarFieldOperator::assemble(&cfg.scene, grid, cfg.backend.backend()))
        .map_err(solver)?;
    let c = calibrate(&f);
    m.record_calibration(n, &c);

    let b = RegionSamples::new(l.b.clone(), l.h, l.variant).map_err(|e| Failure::Config(format!("region b: {e}")))?;
    let d = RegionSamples::new(l.d.clone(), l.h, l.variant).map_err(|e| Failure::Config(format!("region d: {e}")))?;
    let curve = m
        .time("localize", || localization_curve(&b, &d, &cfg.scene, &grid, &l.deltas))
        .map_err(solver)?;
    let mut w = create(out, "curve.csv", m)?;
    write_curve_csv(&curve, &mut w).map_err(solver)?;
    w.flush().map_err(solver)?;

    if boxes_disjoint(&l.b, &l.d) {
        let mut sorted = curve.clone();
        sorted.sort_by(|p, q| q.delta.total_cmp(&p.delta));
        if sorted.windows(2).any(|w| w[1].ratio <= w[0].ratio) {
            return Err(Failure::Validation(
                "ratio does not increase as delta decreases for disjoint regions".into(),
            ));
        }
    }
    Ok(())
}
