//! TOML run configuration with flat sections.
//!
//! Parsing fills every derived default (PML thickness, source width,
//! exclusion radius, constraint width), so [`ConfigFile::canonical`] is a
//! complete description of the run and re-parses to the same text.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::container::Snapshot;
use crate::domain::make_grid;
use crate::error::{Error, Result};
use crate::fdtd::{pml_thickness, SolverSettings, StopRule};
use crate::greens::GreensSettings;
use crate::levelset::{
    AdvectOptions, ConstraintMode, CurvatureConstraint, LevelSetField, ShapeSpec,
};
use crate::merit::DipoleSpec;
use crate::optimizer::{Normalization, OptimizeConfig};

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub extent_x: f64,
    pub extent_y: f64,
    pub resolution: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub wavelength: f64,
    pub eps_in: f64,
    #[serde(default = "one")]
    pub eps_out: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipoleSection {
    pub x: f64,
    pub y: f64,
    pub moment_re: [f64; 2],
    #[serde(default)]
    pub moment_im: [f64; 2],
}

impl DipoleSection {
    fn to_spec(&self) -> Result<DipoleSpec> {
        DipoleSpec::new(
            (self.x, self.y),
            [
                Complex64::new(self.moment_re[0], self.moment_im[0]),
                Complex64::new(self.moment_re[1], self.moment_im[1]),
            ],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Cylinder,
    Wall,
    Waveguide,
    TwoBars,
    Custom,
}

/// Parameters used by each kind: cylinder `radius`; wall `width, height`;
/// waveguide `length, thickness`; two_bars `length, thickness, gap`;
/// custom `path` to a level-set snapshot (relative to the config file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSection {
    pub kind: ShapeKind,
    #[serde(default)]
    pub center_x: f64,
    #[serde(default)]
    pub center_y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thickness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationKind {
    Interface,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_courant")]
    pub courant: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pml_cells: Option<usize>,
    #[serde(default = "default_ratio")]
    pub stop_energy_ratio: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Run exactly this many steps instead of the energy-decay rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_steps: Option<usize>,
    /// Gaussian width of the source pulse; defaults to `10 / f`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_width: Option<f64>,
    /// Defaults to two cells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclusion_radius: Option<f64>,
    #[serde(default)]
    pub eno2: bool,
    #[serde(default = "default_normalization")]
    pub normalization: NormalizationKind,
}

fn default_courant() -> f64 {
    0.5
}
fn default_ratio() -> f64 {
    1e-8
}
fn default_max_steps() -> usize {
    1_000_000
}
fn default_normalization() -> NormalizationKind {
    NormalizationKind::Interface
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            courant: default_courant(),
            pml_cells: None,
            stop_energy_ratio: default_ratio(),
            max_steps: default_max_steps(),
            fixed_steps: None,
            source_width: None,
            exclusion_radius: None,
            eno2: false,
            normalization: default_normalization(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default = "default_step")]
    pub step_size: f64,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stall_iterations: Option<usize>,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    #[serde(default)]
    pub save_velocity: bool,
}

fn default_step() -> f64 {
    0.1
}
fn default_iterations() -> usize {
    100
}
fn default_snapshot_every() -> usize {
    1
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            step_size: default_step(),
            max_iterations: default_iterations(),
            stall_iterations: None,
            snapshot_every: default_snapshot_every(),
            save_velocity: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintModeKind {
    Localized,
    Thresholded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSection {
    pub mode: ConstraintModeKind,
    /// Constraint speed at the clamp curvature 1/h, relative to the unit merit velocity.
    pub tau: f64,
    /// Gaussian band width in µm²; defaults to `(2h)²`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub grid: GridSection,
    pub physics: PhysicsSection,
    pub donor: DipoleSection,
    pub acceptor: DipoleSection,
    pub shape: ShapeSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ConstraintSection>,
}

impl ConfigFile {
    /// Parses and fills derived defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: ConfigFile = toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
        cfg.fill_defaults()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn fill_defaults(&mut self) -> Result<()> {
        let g = &self.grid;
        if !(g.resolution >= 4) || !(self.physics.wavelength > 0.0) {
            return Err(cfg_err("resolution must be >= 4 and wavelength positive"));
        }
        let h = 1.0 / g.resolution as f64;
        let s = &mut self.solver;
        s.pml_cells
            .get_or_insert(pml_thickness(self.physics.wavelength, g.resolution));
        s.source_width.get_or_insert(10.0 * self.physics.wavelength);
        s.exclusion_radius.get_or_insert(2.0 * h);
        if let Some(c) = &mut self.constraint {
            c.sigma.get_or_insert(4.0 * h * h);
            if c.mode == ConstraintModeKind::Thresholded {
                c.kappa0.get_or_insert(1.0);
            }
        }
        Ok(())
    }

    /// Complete, re-parseable description of the run.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config sections always serialize")
    }

    /// Replaces `section.key` with a TOML literal, e.g.
    /// `("optimizer.step_size", "0.05")`.
    pub fn with_override(&self, key: &str, literal: &str) -> Result<Self> {
        let (section, field) = key
            .split_once('.')
            .ok_or_else(|| cfg_err(format!("override key {key} must be section.key")))?;
        let mut doc: toml::Table = toml::from_str(&self.canonical()).expect("canonical echo parses");
        // Derived defaults must be recomputed when their inputs change.
        if key == "grid.resolution" {
            if let Some(t) = doc.get_mut("solver").and_then(|v| v.as_table_mut()) {
                t.remove("pml_cells");
                t.remove("exclusion_radius");
            }
            if let Some(t) = doc.get_mut("constraint").and_then(|v| v.as_table_mut()) {
                t.remove("sigma");
            }
        }
        let value: toml::Value = toml::from_str::<toml::Table>(&format!("v = {literal}"))
            .map_err(|e| cfg_err(format!("bad override value {literal}: {e}")))?
            .remove("v")
            .expect("parsed key");
        doc.entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| cfg_err(format!("{section} is not a section")))?
            .insert(field.to_string(), value);
        Self::parse(&toml::to_string(&doc).expect("table serializes"))
    }

    fn shape_spec(&self, base_dir: &Path, grid: &crate::domain::Grid2D) -> Result<ShapeSpec> {
        let s = &self.shape;
        let center = (s.center_x, s.center_y);
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| cfg_err(format!("shape kind {:?} requires {name}", s.kind)))
        };
        Ok(match s.kind {
            ShapeKind::Cylinder => ShapeSpec::Cylinder {
                center,
                radius: need("radius", s.radius)?,
            },
            ShapeKind::Wall => ShapeSpec::Wall {
                center,
                width: need("width", s.width)?,
                height: need("height", s.height)?,
            },
            ShapeKind::Waveguide => ShapeSpec::Waveguide {
                center,
                length: need("length", s.length)?,
                thickness: need("thickness", s.thickness)?,
            },
            ShapeKind::TwoBars => ShapeSpec::TwoBars {
                center,
                length: need("length", s.length)?,
                thickness: need("thickness", s.thickness)?,
                gap: need("gap", s.gap)?,
            },
            ShapeKind::Custom => {
                let rel = s
                    .path
                    .as_ref()
                    .ok_or_else(|| cfg_err("custom shape requires path"))?;
                let path: PathBuf = base_dir.join(rel);
                let snap = Snapshot::read(&path)?;
                let mut phi = LevelSetField::try_from(&snap)?;
                grid.ensure_same(&phi.grid, "custom shape")?;
                phi.grid = *grid;
                ShapeSpec::Custom(phi)
            }
        })
    }

    /// Builds and validates the optimizer input. Relative paths resolve
    /// against `base_dir`.
    pub fn to_optimize_config(&self, base_dir: &Path) -> Result<OptimizeConfig> {
        let g = &self.grid;
        let grid = make_grid(g.extent_x, g.extent_y, g.resolution)
            .map_err(|e| cfg_err(e.to_string()))?;
        let s = &self.solver;
        let stop = match s.fixed_steps {
            Some(n) => StopRule::FixedSteps(n),
            None => StopRule::EnergyDecay {
                ratio: s.stop_energy_ratio,
                max_steps: s.max_steps,
            },
        };
        let mut solver = SolverSettings::for_wavelength(self.physics.wavelength, g.resolution);
        solver.courant = s.courant;
        solver.stop = stop;
        if let Some(p) = s.pml_cells {
            solver.pml_cells = p;
        }
        let constraint = match &self.constraint {
            None => None,
            Some(c) => Some(CurvatureConstraint {
                mode: match c.mode {
                    ConstraintModeKind::Localized => ConstraintMode::Localized,
                    ConstraintModeKind::Thresholded => ConstraintMode::Thresholded {
                        kappa0: c.kappa0.unwrap_or(1.0),
                    },
                },
                tau: c.tau,
                sigma: c.sigma.unwrap_or(4.0 * grid.h() * grid.h()),
            }),
        };
        let cfg = OptimizeConfig {
            grid,
            wavelength: self.physics.wavelength,
            eps_in: self.physics.eps_in,
            eps_out: self.physics.eps_out,
            donor: self.donor.to_spec().map_err(|e| cfg_err(format!("donor: {e}")))?,
            acceptor: self
                .acceptor
                .to_spec()
                .map_err(|e| cfg_err(format!("acceptor: {e}")))?,
            shape: self.shape_spec(base_dir, &grid)?,
            step_size: self.optimizer.step_size,
            max_iterations: self.optimizer.max_iterations,
            constraint,
            stall_iterations: self.optimizer.stall_iterations,
            greens: GreensSettings {
                solver,
                source_width: s.source_width,
            },
            exclusion_radius: s.exclusion_radius.unwrap_or(2.0 * grid.h()),
            advect: AdvectOptions {
                eno2: s.eno2,
                ..AdvectOptions::default()
            },
            normalization: match s.normalization {
                NormalizationKind::Interface => Normalization::Interface,
                NormalizationKind::Global => Normalization::Global,
            },
        };
        cfg.validate().map_err(|e| cfg_err(e.to_string()))?;
        crate::levelset::init_shape(&cfg.shape, &cfg.grid).map_err(|e| cfg_err(e.to_string()))?;
        Ok(cfg)
    }
}

/// Configuration reproducing the cylinder example at the given resolution.
pub fn cylinder_example(resolution: u32, step_size: f64, max_iterations: usize) -> String {
    format!(
        r#"[grid]
extent_x = 7.0
extent_y = 7.0
resolution = {resolution}

[physics]
wavelength = 2.0
eps_in = 12.0
eps_out = 1.0

[donor]
x = -2.0
y = 0.0
moment_re = [1.0, 0.0]
moment_im = [0.0, 0.0]

[acceptor]
x = 2.0
y = 0.0
moment_re = [1.0, 0.0]
moment_im = [0.0, 0.0]

[shape]
kind = "cylinder"
radius = 1.0

[optimizer]
step_size = {step_size:?}
max_iterations = {max_iterations}
"#
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_parses_and_echo_round_trips() {
        let cfg = ConfigFile::parse(&cylinder_example(10, 0.1, 5)).unwrap();
        let echo = cfg.canonical();
        let again = ConfigFile::parse(&echo).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.canonical(), echo);
        assert_eq!(cfg.solver.pml_cells, Some(10));
        assert_eq!(cfg.solver.source_width, Some(20.0));
        let opt = cfg.to_optimize_config(Path::new(".")).unwrap();
        assert_eq!(opt.grid.nx, 70);
        assert_eq!(opt.max_iterations, 5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = cylinder_example(10, 0.1, 5).replace("eps_out = 1.0", "eps_out = 1.0\nepsilon = 3");
        assert!(matches!(ConfigFile::parse(&text), Err(Error::Config(_))));
        let text = format!("{}\n[extra]\na = 1\n", cylinder_example(10, 0.1, 5));
        assert!(ConfigFile::parse(&text).is_err());
    }

    #[test]
    fn off_grid_dipole_is_a_config_error() {
        let text = cylinder_example(10, 0.1, 5).replace("x = 2.0", "x = 2.03");
        let cfg = ConfigFile::parse(&text).unwrap();
        assert!(matches!(
            cfg.to_optimize_config(Path::new(".")),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn overrides_recompute_derived_defaults() {
        let cfg = ConfigFile::parse(&cylinder_example(10, 0.1, 5)).unwrap();
        let r20 = cfg.with_override("grid.resolution", "20").unwrap();
        assert_eq!(r20.solver.pml_cells, Some(20));
        assert_eq!(r20.solver.exclusion_radius, Some(0.1));
        let s = cfg.with_override("optimizer.step_size", "0.25").unwrap();
        assert_eq!(s.optimizer.step_size, 0.25);
        assert!(cfg.with_override("nodot", "1").is_err());
        assert!(cfg.with_override("optimizer.bogus", "1").is_err());
    }

    #[test]
    fn missing_shape_parameter() {
        let text = cylinder_example(10, 0.1, 5).replace("radius = 1.0", "");
        let cfg = ConfigFile::parse(&text).unwrap();
        assert!(cfg.to_optimize_config(Path::new(".")).is_err());
    }

    #[test]
    fn constraint_defaults() {
        let text = format!(
            "{}\n[constraint]\nmode = \"localized\"\ntau = 1.0\n",
            cylinder_example(10, 0.1, 5)
        );
        let cfg = ConfigFile::parse(&text).unwrap();
        let sigma = cfg.constraint.as_ref().unwrap().sigma.unwrap();
        assert!((sigma - 0.04).abs() < 1e-15);
        let opt = cfg.to_optimize_config(Path::new(".")).unwrap();
        assert!(opt.constraint.is_some());
    }
}
