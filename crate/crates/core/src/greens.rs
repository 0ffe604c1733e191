//! Dyadic Green's tensor data from FDTD runs, plus the analytic free-space
//! 2D tensor used as a validation oracle.
//!
//! A point current `j(ω)` at `s` radiates `E(r) = iω G(r, s) j(ω)` (μ0 = 1),
//! so one run with a Cartesian source yields one column of `G(·, s)`.

use std::f64::consts::PI;
use std::thread;

use num_complex::Complex64;
use puruspe::{Jn, Yn};

use crate::domain::MaterialMap;
use crate::error::{invalid, Result};
use crate::fdtd::{self, Axis, ComplexFieldMap, SolverSettings, SourceSpec};

pub type Tensor2 = [[Complex64; 2]; 2];

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Solver settings plus the source pulse width used for column extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreensSettings {
    pub solver: SolverSettings,
    /// Gaussian width `w`; `None` selects `10 / f`.
    pub source_width: Option<f64>,
}

impl GreensSettings {
    pub fn for_wavelength(wavelength: f64, resolution: u32) -> Self {
        Self {
            solver: SolverSettings::for_wavelength(wavelength, resolution),
            source_width: None,
        }
    }

    fn width(&self, frequency: f64) -> f64 {
        self.source_width.unwrap_or(10.0 / frequency)
    }
}

/// `G(·, s, ω) · ê_axis` over the physical grid.
#[derive(Debug, Clone)]
pub struct GreensColumn {
    pub source: (f64, f64),
    pub axis: Axis,
    pub omega: f64,
    pub field: ComplexFieldMap,
}

/// A sampled 2×2 in-plane block `G(r, s, ω)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreensSample {
    pub r: (f64, f64),
    pub s: (f64, f64),
    pub omega: f64,
    pub tensor: Tensor2,
}

/// Runs one FDTD simulation and deconvolves the source spectrum.
pub fn greens_column(
    material: &MaterialMap,
    source: (f64, f64),
    axis: Axis,
    omega: f64,
    settings: &GreensSettings,
) -> Result<GreensColumn> {
    if !(omega > 0.0) {
        return Err(invalid("omega must be positive"));
    }
    let f = omega / (2.0 * PI);
    let src = SourceSpec::gaussian(source, axis, f, settings.width(f));
    let j = fdtd::source_spectrum(&src, omega)?;
    let out = fdtd::run(material, &src, omega, &settings.solver)?;
    let norm = (I * omega * j).inv();
    let mut field = out.field.scale(norm);
    field.frequency = f;
    Ok(GreensColumn {
        source,
        axis,
        omega,
        field,
    })
}

/// Both Cartesian columns for a source point, computed concurrently.
pub fn greens_columns(
    material: &MaterialMap,
    source: (f64, f64),
    omega: f64,
    settings: &GreensSettings,
) -> Result<[GreensColumn; 2]> {
    let (x, y) = thread::scope(|s| {
        let hx = s.spawn(|| greens_column(material, source, Axis::X, omega, settings));
        let y = greens_column(material, source, Axis::Y, omega, settings);
        (hx.join().expect("column worker panicked"), y)
    });
    Ok([x?, y?])
}

/// Field radiated by a complex in-plane moment `m` at `source`: the
/// linear combination `m_x G·ê_x + m_y G·ê_y`. Axes with zero weight are not
/// simulated.
pub fn moment_column(
    material: &MaterialMap,
    source: (f64, f64),
    moment: [Complex64; 2],
    omega: f64,
    settings: &GreensSettings,
) -> Result<ComplexFieldMap> {
    let needs_x = moment[0] != ZERO;
    let needs_y = moment[1] != ZERO;
    match (needs_x, needs_y) {
        (true, true) => {
            let [cx, cy] = greens_columns(material, source, omega, settings)?;
            cx.field.combine(moment[0], &cy.field, moment[1])
        }
        (true, false) => {
            Ok(greens_column(material, source, Axis::X, omega, settings)?
                .field
                .scale(moment[0]))
        }
        (false, true) => {
            Ok(greens_column(material, source, Axis::Y, omega, settings)?
                .field
                .scale(moment[1]))
        }
        (false, false) => Err(invalid("dipole moment is zero")),
    }
}

/// Value of a column at an observation node other than the source.
pub fn sample(column: &GreensColumn, r: (f64, f64)) -> Result<[Complex64; 2]> {
    let grid = column.field.grid;
    let (i, j) = grid.node_at(r.0, r.1)?;
    let (si, sj) = grid.node_at(column.source.0, column.source.1)?;
    if (i, j) == (si, sj) {
        return Err(invalid(
            "observation point coincides with the source; the Green's tensor is singular there",
        ));
    }
    Ok(column.field.at(i, j))
}

/// Assembles `G(r, s)` from the x- and y-source columns at `s`.
pub fn tensor_from_columns(columns: &[GreensColumn; 2], r: (f64, f64)) -> Result<GreensSample> {
    let cx = sample(&columns[0], r)?;
    let cy = sample(&columns[1], r)?;
    Ok(GreensSample {
        r,
        s: columns[0].source,
        omega: columns[0].omega,
        tensor: [[cx[0], cy[0]], [cx[1], cy[1]]],
    })
}

fn hankel1(n: u32, x: f64) -> Complex64 {
    Complex64::new(Jn(n, x), Yn(n, x))
}

/// Closed-form in-plane block of the outgoing free-space Green's tensor in
/// 2D: `G = (I + ∇∇/k²) (i/4) H0⁽¹⁾(kρ)` with `k = √ε ω`. Splitting along
/// `ρ̂ = (r - s)/ρ`, the transverse part is `(i/4) H1⁽¹⁾'(kρ)` and the
/// longitudinal part `(i/4) H1⁽¹⁾(kρ)/(kρ)`.
pub fn analytic_freespace_g2d(
    r: (f64, f64),
    s: (f64, f64),
    omega: f64,
    eps_background: f64,
) -> Result<Tensor2> {
    if !(eps_background >= 1.0) {
        return Err(invalid("background permittivity must be >= 1"));
    }
    if !(omega > 0.0) {
        return Err(invalid("omega must be positive"));
    }
    let (dx, dy) = (r.0 - s.0, r.1 - s.1);
    let rho = dx.hypot(dy);
    if rho == 0.0 {
        return Err(invalid("r and s coincide"));
    }
    let k = eps_background.sqrt() * omega;
    let x = k * rho;
    let h0 = hankel1(0, x);
    let h1 = hankel1(1, x);
    let longitudinal = 0.25 * I * h1 / x;
    let transverse = 0.25 * I * (h0 - h1 / x);
    let u = [dx / rho, dy / rho];
    let mut g = [[ZERO; 2]; 2];
    for (a, row) in g.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            let delta = if a == b { 1.0 } else { 0.0 };
            *v = transverse * delta + (longitudinal - transverse) * (u[a] * u[b]);
        }
    }
    Ok(g)
}

fn max_norm(t: &Tensor2) -> f64 {
    t.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
}

/// `max_ij |G_ij(r,s) - G_ji(s,r)| / max_ij |G_ij(r,s)|` from four runs.
pub fn reciprocity_defect(
    material: &MaterialMap,
    r: (f64, f64),
    s: (f64, f64),
    omega: f64,
    settings: &GreensSettings,
) -> Result<f64> {
    let at_s = greens_columns(material, s, omega, settings)?;
    let at_r = greens_columns(material, r, omega, settings)?;
    let g_rs = tensor_from_columns(&at_s, r)?.tensor;
    let g_sr = tensor_from_columns(&at_r, s)?.tensor;
    Ok(defect_of(&g_rs, &g_sr))
}

/// Reciprocity defect of two sampled tensors, normalized by the first.
pub fn defect_of(g_rs: &Tensor2, g_sr: &Tensor2) -> f64 {
    let mut num: f64 = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            num = num.max((g_rs[a][b] - g_sr[b][a]).norm());
        }
    }
    num / max_norm(g_rs)
}
