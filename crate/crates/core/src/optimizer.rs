//! The optimization loop: simulate donor and acceptor columns, evaluate
//! `Q`, build the boundary velocity, advect, reinitialize, repeat.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::container::Snapshot;
use crate::domain::{make_grid, rasterize, Grid2D, MaterialMap, UnitSystem};
use crate::error::{invalid, Error, Result};
use crate::fdtd::{ComplexFieldMap, StopRule};
use crate::greens::{moment_column, GreensSettings};
use crate::levelset::{
    advect_with, constraint_velocity, init_shape, normalize_and_mask, normalize_on_interface,
    reinitialize,
    AdvectOptions, CurvatureConstraint, LevelSetField, ShapeSpec, VelocityField,
};
use crate::merit::{predicted_gain, DipoleSpec, GreensMerit, MeritInputs, MeritReport, RetMerit};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    pub grid: Grid2D,
    pub wavelength: f64,
    pub eps_in: f64,
    pub eps_out: f64,
    pub donor: DipoleSpec,
    pub acceptor: DipoleSpec,
    pub shape: ShapeSpec,
    /// Maximal boundary displacement per iteration, µm.
    pub step_size: f64,
    pub max_iterations: usize,
    pub constraint: Option<CurvatureConstraint>,
    /// Stop after this many iterations without a new best `Q`.
    pub stall_iterations: Option<usize>,
    pub greens: GreensSettings,
    /// Velocity is zeroed within this distance of either dipole, µm.
    pub exclusion_radius: f64,
    pub advect: AdvectOptions,
    pub normalization: Normalization,
}

/// How the masked velocity is scaled before advection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// `max|v| = 1` over the whole domain.
    Global,
    /// `max|v| = 1` on the nodes next to the boundary, clamped elsewhere,
    /// so the boundary itself moves by up to one step.
    #[default]
    Interface,
}

impl OptimizeConfig {
    /// Two x-aligned dipoles 4 µm apart around an ε = 12, R = 1 µm
    /// cylinder in a 7×7 µm² domain at λ = 2 µm.
    pub fn cylinder_defaults(resolution: u32) -> Result<Self> {
        let grid = make_grid(7.0, 7.0, resolution)?;
        Ok(Self {
            grid,
            wavelength: 2.0,
            eps_in: 12.0,
            eps_out: 1.0,
            donor: DipoleSpec::x_aligned((-2.0, 0.0)),
            acceptor: DipoleSpec::x_aligned((2.0, 0.0)),
            shape: ShapeSpec::Cylinder {
                center: (0.0, 0.0),
                radius: 1.0,
            },
            step_size: 0.1,
            max_iterations: 100,
            constraint: None,
            stall_iterations: None,
            greens: GreensSettings::for_wavelength(2.0, resolution),
            exclusion_radius: 2.0 * grid.h(),
            advect: AdvectOptions::default(),
            normalization: Normalization::default(),
        })
    }

    pub fn omega(&self) -> f64 {
        UnitSystem::angular_frequency(self.wavelength)
    }

    /// Hard errors for inconsistent input; soft warnings are returned.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        let h = self.grid.h();
        if !(self.wavelength > 0.0 && self.wavelength.is_finite()) {
            return Err(invalid("wavelength must be positive"));
        }
        if !(self.eps_in >= 1.0 && self.eps_out >= 1.0) {
            return Err(invalid("permittivities must be >= 1"));
        }
        self.donor.check_on_grid(&self.grid)?;
        self.acceptor.check_on_grid(&self.grid)?;
        let sep = (self.donor.position.0 - self.acceptor.position.0)
            .hypot(self.donor.position.1 - self.acceptor.position.1);
        if sep <= self.wavelength / 4.0 {
            return Err(invalid(format!(
                "dipole separation {sep} must exceed a quarter wavelength"
            )));
        }
        if !(self.step_size >= h / 4.0 && self.step_size <= 5.0 * h) {
            return Err(invalid(format!(
                "step size {} outside [h/4, 5h] = [{}, {}]",
                self.step_size,
                h / 4.0,
                5.0 * h
            )));
        }
        if self.step_size < 0.025 || self.step_size > 0.25 {
            warnings.push(format!(
                "step size {} is outside the tested range [0.025, 0.25] µm",
                self.step_size
            ));
        }
        if !(self.exclusion_radius >= 0.0) {
            return Err(invalid("exclusion radius must be non-negative"));
        }
        if let Some(c) = &self.constraint {
            c.validate()?;
        }
        if self.stall_iterations == Some(0) {
            return Err(invalid("stall_iterations must be positive"));
        }
        Ok(warnings)
    }
}

/// Where and what the loop writes. With `dir = None` nothing touches disk
/// except the optional reference cache.
#[derive(Debug, Clone, Default)]
pub struct OutputOptions {
    pub dir: Option<PathBuf>,
    /// Write `phi_%05d.gshl` every this many iterations (0 = never; the
    /// initial, final and best shapes are always written).
    pub snapshot_every: usize,
    pub save_velocity: bool,
    /// Directory for cached free-space reference rates.
    pub reference_cache: Option<PathBuf>,
    /// Canonical config text echoed to `config.snapshot`.
    pub config_echo: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub gamma: f64,
    pub q: f64,
    /// First-order gain predicted for the step taken out of this shape.
    pub predicted_df: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// Ran the full iteration budget.
    Completed,
    /// Stopped by the stall rule.
    Plateau,
    /// The masked velocity vanished identically.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct RunHistory {
    pub records: Vec<IterationRecord>,
    pub gamma0: f64,
    pub best_iteration: usize,
    pub best_q: f64,
    pub status: RunStatus,
    pub best_phi: LevelSetField,
    pub final_phi: LevelSetField,
    pub snapshots: Vec<PathBuf>,
}

impl RunHistory {
    pub fn q_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.q).collect()
    }

    /// Number of sign flips in consecutive `ΔQ`.
    pub fn sign_changes(&self) -> usize {
        count_sign_changes(&self.q_values())
    }

    /// First iteration with `Q >= target`.
    pub fn first_reaching(&self, target: f64) -> Option<usize> {
        self.records.iter().find(|r| r.q >= target).map(|r| r.iteration)
    }

    pub fn to_csv(&self) -> String {
        history_csv(&self.records)
    }
}

pub fn count_sign_changes(q: &[f64]) -> usize {
    let signs: Vec<f64> = q
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d != 0.0)
        .map(f64::signum)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

fn history_csv(records: &[IterationRecord]) -> String {
    let mut s = String::from("iter,gamma,Q,predicted_dF,wall_ms\n");
    for r in records {
        let pred = r
            .predicted_df
            .map_or_else(|| "nan".to_string(), |p| format!("{p:e}"));
        let _ = writeln!(
            s,
            "{},{:e},{:e},{},{:.3}",
            r.iteration, r.gamma, r.q, pred, r.wall_ms
        );
    }
    s
}

/// Stable key for the free-space reference of a configuration.
fn reference_key(cfg: &OptimizeConfig) -> String {
    let g = &cfg.grid;
    let s = &cfg.greens;
    let stop = match s.solver.stop {
        StopRule::EnergyDecay { ratio, max_steps } => format!("decay:{ratio:e}:{max_steps}"),
        StopRule::FixedSteps(n) => format!("fixed:{n}"),
    };
    let m = |d: &DipoleSpec| {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e}",
            d.position.0, d.position.1, d.moment[0].re, d.moment[0].im, d.moment[1].re, d.moment[1].im
        )
    };
    format!(
        "v1|{}x{}@{}|{:e}x{:e}|lambda={:e}|courant={:e}|pml={}|{}|width={:?}|D={}|A={}",
        g.nx,
        g.ny,
        g.resolution,
        g.extent_x,
        g.extent_y,
        cfg.wavelength,
        s.solver.courant,
        s.solver.pml_cells,
        stop,
        s.source_width,
        m(&cfg.donor),
        m(&cfg.acceptor)
    )
}

fn cache_path(dir: &Path, key: &str) -> PathBuf {
    let digest = Sha256::digest(key.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    dir.join(format!("gamma0-{}.txt", &hex[..16]))
}

/// `Γ0` in vacuum, read from or written to the cache when one is given.
pub fn reference_gamma(cfg: &OptimizeConfig, cache: Option<&Path>) -> Result<f64> {
    let key = reference_key(cfg);
    if let Some(dir) = cache {
        let path = cache_path(dir, &key);
        if let Ok(text) = fs::read_to_string(&path) {
            let mut lines = text.lines();
            if lines.next() == Some(key.as_str()) {
                if let Some(v) = lines.next().and_then(|l| l.trim().parse::<f64>().ok()) {
                    if v > 0.0 && v.is_finite() {
                        return Ok(v);
                    }
                }
            }
        }
    }
    let vacuum = MaterialMap::uniform(cfg.grid, 1.0);
    let merit = RetMerit;
    let donor_field = donor_column(cfg, &vacuum)?;
    let gamma0 = merit.value(&MeritInputs {
        donor: &cfg.donor,
        acceptor: &cfg.acceptor,
        donor_field: &donor_field,
        acceptor_field: None,
    })?;
    if !(gamma0 > 0.0) {
        return Err(invalid("free-space reference rate vanishes for this dipole pair"));
    }
    if let Some(dir) = cache {
        fs::create_dir_all(dir)?;
        let path = cache_path(dir, &key);
        // Write-then-rename so concurrent runs never see a partial file.
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, format!("{key}\n{gamma0:e}\n"))?;
        fs::rename(&tmp, &path)?;
    }
    Ok(gamma0)
}

pub fn donor_column(cfg: &OptimizeConfig, material: &MaterialMap) -> Result<ComplexFieldMap> {
    moment_column(
        material,
        cfg.donor.position,
        cfg.donor.moment,
        cfg.omega(),
        &cfg.greens,
    )
}

pub fn acceptor_column(cfg: &OptimizeConfig, material: &MaterialMap) -> Result<ComplexFieldMap> {
    moment_column(
        material,
        cfg.acceptor.position,
        cfg.acceptor.conj_moment(),
        cfg.omega(),
        &cfg.greens,
    )
}

/// Donor and acceptor columns, simulated concurrently.
pub fn both_columns(
    cfg: &OptimizeConfig,
    material: &MaterialMap,
) -> Result<(ComplexFieldMap, ComplexFieldMap)> {
    let (d, a) = thread::scope(|s| {
        let hd = s.spawn(|| donor_column(cfg, material));
        let a = acceptor_column(cfg, material);
        (hd.join().expect("donor worker panicked"), a)
    });
    Ok((d?, a?))
}

/// `Q` of a fixed material distribution.
pub fn q_of_material(
    cfg: &OptimizeConfig,
    material: &MaterialMap,
    cache: Option<&Path>,
) -> Result<MeritReport> {
    cfg.grid.ensure_same(&material.grid, "material")?;
    let gamma0 = reference_gamma(cfg, cache)?;
    let donor_field = donor_column(cfg, material)?;
    let gamma = RetMerit.value(&MeritInputs {
        donor: &cfg.donor,
        acceptor: &cfg.acceptor,
        donor_field: &donor_field,
        acceptor_field: None,
    })?;
    MeritReport::new(gamma, gamma0)
}

/// `Q` of a level-set shape rasterized with the configured permittivities.
pub fn q_of_shape(
    cfg: &OptimizeConfig,
    phi: &LevelSetField,
    cache: Option<&Path>,
) -> Result<MeritReport> {
    let material = rasterize(phi, cfg.eps_in, cfg.eps_out)?;
    q_of_material(cfg, &material, cache)
}

/// Merit velocity plus optional curvature regularization, masked and
/// normalized to `max|v| = 1`.
fn step_velocity(
    cfg: &OptimizeConfig,
    phi: &LevelSetField,
    raw: &VelocityField,
) -> Result<VelocityField> {
    let exclusion = [cfg.donor.position, cfg.acceptor.position];
    let band = std::f64::consts::SQRT_2 * cfg.grid.h();
    let normalize = |v: &VelocityField| match cfg.normalization {
        Normalization::Global => normalize_and_mask(v, &exclusion, cfg.exclusion_radius),
        Normalization::Interface => {
            normalize_on_interface(v, phi, &exclusion, cfg.exclusion_radius, band)
        }
    };
    let vn = normalize(raw)?;
    let Some(c) = &cfg.constraint else {
        return Ok(vn);
    };
    let vg = constraint_velocity(phi, c)?;
    // Curvature is clamped to 1/h, so scaling by h makes tau the speed of the
    // sharpest representable feature relative to the unit merit term.
    let scale = cfg.grid.h();
    let mut total = vn;
    for (t, g) in total.v.iter_mut().zip(&vg.v) {
        *t += scale * g;
    }
    normalize(&total)
}

struct RunWriter {
    dir: Option<PathBuf>,
    snapshot_every: usize,
    save_velocity: bool,
    written: Vec<PathBuf>,
}

impl RunWriter {
    fn new(opts: &OutputOptions) -> Result<Self> {
        if let Some(dir) = &opts.dir {
            fs::create_dir_all(dir)?;
            if let Some(echo) = &opts.config_echo {
                fs::write(dir.join("config.snapshot"), echo)?;
            }
        }
        Ok(Self {
            dir: opts.dir.clone(),
            snapshot_every: opts.snapshot_every,
            save_velocity: opts.save_velocity,
            written: Vec::new(),
        })
    }

    fn phi(&mut self, name: &str, phi: &LevelSetField) -> Result<()> {
        if let Some(dir) = &self.dir {
            let path = dir.join(name);
            Snapshot::from(phi).write(&path)?;
            if !self.written.contains(&path) {
                self.written.push(path);
            }
        }
        Ok(())
    }

    fn iteration(&mut self, k: usize, last: bool, phi: &LevelSetField) -> Result<()> {
        let due = k == 0 || last || (self.snapshot_every > 0 && k % self.snapshot_every == 0);
        if due {
            self.phi(&format!("phi_{k:05}.gshl"), phi)?;
        }
        Ok(())
    }

    fn velocity(&mut self, k: usize, v: &VelocityField) -> Result<()> {
        if let (Some(dir), true) = (&self.dir, self.save_velocity) {
            let path = dir.join(format!("vel_{k:05}.gshv"));
            Snapshot::from(v).write(&path)?;
            self.written.push(path);
        }
        Ok(())
    }

    fn history(&self, records: &[IterationRecord], best: usize, best_q: f64) -> Result<()> {
        if let Some(dir) = &self.dir {
            fs::write(dir.join("history.csv"), history_csv(records))?;
            fs::write(dir.join("best.txt"), format!("{best} {best_q:e}\n"))?;
        }
        Ok(())
    }
}

/// Runs the loop described in the module docs.
pub fn optimize(cfg: &OptimizeConfig, out: &OutputOptions) -> Result<RunHistory> {
    optimize_with(cfg, out, &mut |_| {})
}

/// As [`optimize`], calling `progress` after each recorded iteration.
pub fn optimize_with(
    cfg: &OptimizeConfig,
    out: &OutputOptions,
    progress: &mut dyn FnMut(&IterationRecord),
) -> Result<RunHistory> {
    cfg.validate()?;
    let mut writer = RunWriter::new(out)?;
    let gamma0 = reference_gamma(cfg, out.reference_cache.as_deref())?;
    let merit = RetMerit;

    let mut phi = init_shape(&cfg.shape, &cfg.grid)?;
    let mut records: Vec<IterationRecord> = Vec::with_capacity(cfg.max_iterations + 1);
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut best_phi = phi.clone();
    let mut status = RunStatus::Completed;

    for k in 0..=cfg.max_iterations {
        let started = Instant::now();
        let last = k == cfg.max_iterations;
        let material = rasterize(&phi, cfg.eps_in, cfg.eps_out)?;
        let (donor_field, acceptor_field) = if last {
            (donor_column(cfg, &material)?, None)
        } else {
            let (d, a) = both_columns(cfg, &material)?;
            (d, Some(a))
        };
        let inputs = MeritInputs {
            donor: &cfg.donor,
            acceptor: &cfg.acceptor,
            donor_field: &donor_field,
            acceptor_field: acceptor_field.as_ref(),
        };
        let report = MeritReport::new(merit.value(&inputs)?, gamma0)?;
        if report.q > best.1 {
            best = (k, report.q);
            best_phi = phi.clone();
            writer.phi("phi_best.gshl", &phi)?;
        }
        writer.iteration(k, last, &phi)?;

        let stalled_out = cfg
            .stall_iterations
            .is_some_and(|n| k >= best.0 + n);
        let mut next = None;
        let mut predicted = None;
        if !last && !stalled_out {
            let raw = merit.velocity(&inputs)?;
            match step_velocity(cfg, &phi, &raw) {
                Ok(v) => {
                    predicted = Some(predicted_gain(&v, &phi, cfg.step_size)?);
                    writer.velocity(k, &v)?;
                    let moved = advect_with(&phi, &v, cfg.step_size, cfg.advect)?;
                    next = Some(if moved.has_sign_change() {
                        reinitialize(&moved)?
                    } else {
                        moved
                    });
                }
                Err(Error::ZeroVelocity) => status = RunStatus::Stalled,
                Err(e) => return Err(e),
            }
        }
        let record = IterationRecord {
            iteration: k,
            gamma: report.gamma,
            q: report.q,
            predicted_df: predicted,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        records.push(record);
        writer.history(&records, best.0, best.1)?;
        progress(&record);

        if stalled_out {
            status = RunStatus::Plateau;
        }
        match next {
            Some(p) => phi = p,
            None => {
                // Early exit: make sure the terminal shape is on disk.
                writer.iteration(k, true, &phi)?;
                break;
            }
        }
    }

    Ok(RunHistory {
        records,
        gamma0,
        best_iteration: best.0,
        best_q: best.1,
        status,
        best_phi,
        final_phi: phi,
        snapshots: writer.written,
    })
}
