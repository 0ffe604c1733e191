use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Child, Command};

use anyhow::{anyhow, Context};
use greenshape::config::ConfigFile;
use greenshape::container::{Kind, Snapshot};
use greenshape::domain::{make_grid, rasterize, MaterialMap, UnitSystem};
use greenshape::greens::{analytic_freespace_g2d, greens_columns, tensor_from_columns, GreensSettings};
use greenshape::levelset::{contour, LevelSetField};
use greenshape::optimizer::{optimize_with, q_of_material, OutputOptions, RunStatus};
use greenshape::Error;

use crate::SweepParameter;

pub mod exit {
    pub const VALIDATION: u8 = 1;
    pub const INVALID_CONFIG: u8 = 2;
    pub const SOLVER: u8 = 3;
    pub const STALLED: u8 = 4;
    pub const FORMAT: u8 = 5;
    pub const EXISTS: u8 = 6;
}

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self {
            code,
            error: error.into(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn code_of(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidInput(_) | Error::GridMismatch(_) => exit::INVALID_CONFIG,
        Error::Format(_) => exit::FORMAT,
        Error::ZeroVelocity => exit::STALLED,
        Error::NonDecaying { .. } | Error::WeakSpectrum { .. } | Error::NonFinite(_) | Error::Io(_) => {
            exit::SOLVER
        }
    }
}

fn lib(e: Error) -> Failure {
    Failure::new(code_of(&e), e)
}

fn default_cache() -> PathBuf {
    std::env::var_os("GREENSHAPE_CACHE")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("greenshape-cache"))
}

fn base_dir(config: &Path) -> PathBuf {
    config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn load_config(path: &Path) -> Result<ConfigFile, Failure> {
    ConfigFile::load(path).map_err(|e| Failure::new(exit::INVALID_CONFIG, e))
}

/// Refuses to touch an existing non-empty directory unless forced.
fn prepare_dir(dir: &Path, force: bool) -> CmdResult {
    let occupied = fs::read_dir(dir).map(|mut d| d.next().is_some()).unwrap_or(false);
    if occupied {
        if !force {
            return Err(Failure::new(
                exit::EXISTS,
                anyhow!("{} exists; pass --force to overwrite", dir.display()),
            ));
        }
        fs::remove_dir_all(dir)
            .with_context(|| format!("removing {}", dir.display()))
            .map_err(|e| Failure::new(exit::SOLVER, e))?;
    }
    Ok(())
}

pub fn optimize(
    config: &Path,
    out: &Path,
    force: bool,
    cache_dir: Option<PathBuf>,
    quiet: bool,
) -> CmdResult {
    let file = load_config(config)?;
    let cfg = file
        .to_optimize_config(&base_dir(config))
        .map_err(|e| Failure::new(exit::INVALID_CONFIG, e))?;
    for w in cfg.validate().map_err(lib)? {
        eprintln!("warning: {w}");
    }
    prepare_dir(out, force)?;
    let opts = OutputOptions {
        dir: Some(out.to_path_buf()),
        snapshot_every: file.optimizer.snapshot_every,
        save_velocity: file.optimizer.save_velocity,
        reference_cache: Some(cache_dir.unwrap_or_else(default_cache)),
        config_echo: Some(file.canonical()),
    };
    let history = optimize_with(&cfg, &opts, &mut |r| {
        if !quiet {
            eprintln!("iter {:>5}  Q {:.6e}  ({:.0} ms)", r.iteration, r.q, r.wall_ms);
        }
    })
    .map_err(lib)?;
    println!(
        "best iteration {} Q {:.6e} ({} records)",
        history.best_iteration,
        history.best_q,
        history.records.len()
    );
    match history.status {
        RunStatus::Stalled => Err(Failure::new(
            exit::STALLED,
            anyhow!("velocity vanished at iteration {}", history.records.len() - 1),
        )),
        RunStatus::Completed | RunStatus::Plateau => Ok(()),
    }
}

struct Comparison {
    pair: &'static str,
    component: &'static str,
    fdtd: greenshape::greens::Tensor2,
    exact: greenshape::greens::Tensor2,
}

pub fn validate(resolution: u32, wavelength: f64, separation: f64) -> CmdResult {
    let bad = |m: String| Failure::new(exit::INVALID_CONFIG, anyhow!(m));
    if !(separation > 0.0) {
        return Err(bad("separation must be positive; G is singular at coincidence".into()));
    }
    if !(wavelength > 0.0) {
        return Err(bad("wavelength must be positive".into()));
    }
    // Same margins as the reference setup: 1.5 µm between sources and PML.
    let extent = separation + 3.0;
    let grid = make_grid(extent, extent, resolution).map_err(lib)?;
    let vacuum = MaterialMap::uniform(grid, 1.0);
    let settings = GreensSettings::for_wavelength(wavelength, resolution);
    let omega = UnitSystem::angular_frequency(wavelength);
    let snap = |x: f64, y: f64| {
        let (i, j) = grid.nearest_node(x, y);
        (grid.x(i), grid.y(j))
    };
    let pairs = [
        ("on_axis", snap(-separation / 2.0, 0.0), snap(separation / 2.0, 0.0)),
        (
            "oblique",
            snap(-0.3 * separation, -0.4 * separation),
            snap(0.3 * separation, 0.4 * separation),
        ),
    ];
    let mut rows = Vec::new();
    for (pair, s, r) in pairs {
        let cols = greens_columns(&vacuum, s, omega, &settings).map_err(lib)?;
        let fdtd = tensor_from_columns(&cols, r).map_err(lib)?.tensor;
        let exact = analytic_freespace_g2d(r, s, omega, 1.0).map_err(lib)?;
        rows.push(Comparison {
            pair,
            component: "",
            fdtd,
            exact,
        });
    }
    let names = [["xx", "xy"], ["yx", "yy"]];
    let mut out = String::from(
        "pair,component,fdtd_re,fdtd_im,exact_re,exact_im,modulus_error,phase_error_deg\n",
    );
    let mut worst: f64 = 0.0;
    for row in &rows {
        let scale = row
            .exact
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        for a in 0..2 {
            for b in 0..2 {
                let (f, e) = (row.fdtd[a][b], row.exact[a][b]);
                // Components that vanish by symmetry are judged against the
                // largest component of the tensor.
                let significant = e.norm() > 1e-3 * scale;
                let denom = if significant { e.norm() } else { scale };
                let modulus = (f.norm() - e.norm()).abs() / denom;
                let phase = if significant {
                    (f / e).arg().to_degrees().abs().to_string()
                } else {
                    "nan".to_string()
                };
                worst = worst.max(modulus);
                let _ = writeln!(
                    out,
                    "{},{}{},{:e},{:e},{:e},{:e},{:e},{}",
                    row.pair, row.component, names[a][b], f.re, f.im, e.re, e.im, modulus, phase
                );
            }
        }
    }
    print!("{out}");
    if resolution >= 20 && worst > 0.05 {
        return Err(Failure::new(
            exit::VALIDATION,
            anyhow!("largest modulus error {:.2}% exceeds 5%", worst * 100.0),
        ));
    }
    eprintln!("largest modulus error {:.3}%", worst * 100.0);
    Ok(())
}

fn sweep_key(p: SweepParameter) -> &'static str {
    match p {
        SweepParameter::Resolution => "grid.resolution",
        SweepParameter::StepSize => "optimizer.step_size",
    }
}

fn parse_value(p: SweepParameter, v: &str) -> Result<String, Failure> {
    let v = v.trim();
    let ok = match p {
        SweepParameter::Resolution => v.parse::<u32>().is_ok(),
        SweepParameter::StepSize => v.parse::<f64>().map(|x| x > 0.0).unwrap_or(false),
    };
    if !ok {
        return Err(Failure::new(
            exit::INVALID_CONFIG,
            anyhow!("invalid {p:?} value {v:?}"),
        ));
    }
    Ok(match p {
        SweepParameter::Resolution => v.to_string(),
        // A TOML float literal.
        SweepParameter::StepSize => format!("{:?}", v.parse::<f64>().unwrap()),
    })
}

struct SweepRun {
    value: String,
    dir: PathBuf,
    outcome: Option<u8>,
}

fn wait_child(child: &mut Child) -> u8 {
    match child.wait() {
        Ok(s) => s.code().map(|c| c as u8).unwrap_or(exit::SOLVER),
        Err(_) => exit::SOLVER,
    }
}

pub fn sweep(
    config: &Path,
    parameter: SweepParameter,
    values: &[String],
    out: &Path,
    jobs: usize,
    force: bool,
    cache_dir: Option<PathBuf>,
) -> CmdResult {
    let values: Vec<String> = values.iter().filter(|v| !v.trim().is_empty()).cloned().collect();
    if values.is_empty() {
        return Err(Failure::new(exit::INVALID_CONFIG, anyhow!("no sweep values given")));
    }
    let literals = values
        .iter()
        .map(|v| parse_value(parameter, v))
        .collect::<Result<Vec<_>, _>>()?;
    let mut base = load_config(config)?;
    if let Some(p) = &base.shape.path {
        let abs = base_dir(config).join(p);
        base.shape.path = Some(abs.to_string_lossy().into_owned());
    }
    prepare_dir(out, force)?;
    fs::create_dir_all(out).map_err(|e| Failure::new(exit::SOLVER, e))?;
    let cache = cache_dir.unwrap_or_else(default_cache);
    let key = sweep_key(parameter);
    let exe = std::env::current_exe().map_err(|e| Failure::new(exit::SOLVER, e))?;

    let mut runs = Vec::new();
    let mut running: Vec<(usize, Child)> = Vec::new();
    for (value, literal) in values.iter().zip(&literals) {
        let name = format!("{}_{}", key.split('.').nth(1).unwrap(), value.trim());
        let dir = out.join(&name);
        let idx = runs.len();
        runs.push(SweepRun {
            value: value.trim().to_string(),
            dir: dir.clone(),
            outcome: None,
        });
        let cfg = match base
            .with_override(key, literal)
            .and_then(|c| c.to_optimize_config(Path::new(".")).map(|_| c))
        {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{name}: invalid configuration: {e}");
                runs[idx].outcome = Some(exit::INVALID_CONFIG);
                continue;
            }
        };
        let cfg_path = out.join(format!("{name}.toml"));
        fs::write(&cfg_path, cfg.canonical()).map_err(|e| Failure::new(exit::SOLVER, e))?;
        if jobs <= 1 {
            eprintln!("{name}: running");
            let code = match optimize(&cfg_path, &dir, true, Some(cache.clone()), true) {
                Ok(()) => 0,
                Err(f) => {
                    eprintln!("{name}: {:#}", f.error);
                    f.code
                }
            };
            runs[idx].outcome = Some(code);
            continue;
        }
        if running.len() >= jobs {
            let (k, mut child) = running.remove(0);
            runs[k].outcome = Some(wait_child(&mut child));
        }
        let child = Command::new(&exe)
            .arg("optimize")
            .arg("--config")
            .arg(&cfg_path)
            .arg("--out")
            .arg(&dir)
            .arg("--force")
            .arg("--quiet")
            .arg("--cache-dir")
            .arg(&cache)
            .spawn()
            .map_err(|e| Failure::new(exit::SOLVER, e))?;
        running.push((idx, child));
    }
    for (k, mut child) in running {
        runs[k].outcome = Some(wait_child(&mut child));
    }

    let mut table = String::from("value,iteration,Q\n");
    let mut failed = Vec::new();
    for run in &runs {
        let code = run.outcome.unwrap_or(exit::SOLVER);
        // Stalled runs still carry a valid history.
        if code != 0 && code != exit::STALLED {
            failed.push(format!("{}: exit {code}", run.value));
            continue;
        }
        let history = fs::read_to_string(run.dir.join("history.csv"))
            .with_context(|| format!("reading history of {}", run.dir.display()))
            .map_err(|e| Failure::new(exit::SOLVER, e))?;
        for line in history.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() >= 3 {
                let _ = writeln!(table, "{},{},{}", run.value, cols[0], cols[2]);
            }
        }
    }
    fs::write(out.join("sweep.csv"), table).map_err(|e| Failure::new(exit::SOLVER, e))?;
    if !failed.is_empty() {
        let text = failed.join("\n") + "\n";
        let _ = fs::write(out.join("failures.txt"), &text);
        return Err(Failure::new(
            exit::SOLVER,
            anyhow!("{} of {} runs failed:\n{text}", failed.len(), runs.len()),
        ));
    }
    Ok(())
}

fn read_snapshot(path: &Path) -> Result<Snapshot, Failure> {
    Snapshot::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| Failure::new(exit::FORMAT, e))
}

pub fn rate(phi: &Path, config: &Path, cache_dir: Option<PathBuf>) -> CmdResult {
    let file = load_config(config)?;
    let cfg = file
        .to_optimize_config(&base_dir(config))
        .map_err(|e| Failure::new(exit::INVALID_CONFIG, e))?;
    let snap = read_snapshot(phi)?;
    let material = match snap.kind {
        Kind::LevelSet => {
            let mut field = LevelSetField::try_from(&snap).map_err(lib)?;
            cfg.grid.ensure_same(&field.grid, "level set").map_err(lib)?;
            field.grid = cfg.grid;
            rasterize(&field, cfg.eps_in, cfg.eps_out).map_err(lib)?
        }
        Kind::Material => {
            let mut m = MaterialMap::try_from(&snap).map_err(lib)?;
            cfg.grid.ensure_same(&m.grid, "material").map_err(lib)?;
            m.grid = cfg.grid;
            m
        }
        other => {
            return Err(Failure::new(
                exit::FORMAT,
                anyhow!("expected a level-set or material snapshot, found {other:?}"),
            ))
        }
    };
    let cache = cache_dir.unwrap_or_else(default_cache);
    let report = q_of_material(&cfg, &material, Some(&cache)).map_err(lib)?;
    println!("gamma,gamma0,Q");
    println!("{:e},{:e},{:e}", report.gamma, report.gamma0, report.q);
    Ok(())
}

pub fn export(input: &Path, output: &Path, contour_only: bool, force: bool) -> CmdResult {
    let snap = read_snapshot(input)?;
    if output.exists() && !force {
        return Err(Failure::new(
            exit::EXISTS,
            anyhow!("{} exists; pass --force to overwrite", output.display()),
        ));
    }
    let text = if contour_only {
        if snap.kind != Kind::LevelSet {
            return Err(Failure::new(
                exit::FORMAT,
                anyhow!("--contour needs a level-set snapshot, found {:?}", snap.kind),
            ));
        }
        let phi = LevelSetField::try_from(&snap).map_err(lib)?;
        contour::polylines_csv(&phi)
    } else {
        snap.to_csv().map_err(lib)?
    };
    fs::write(output, text)
        .with_context(|| format!("writing {}", output.display()))
        .map_err(|e| Failure::new(exit::SOLVER, e))?;
    Ok(())
}
