//! 2D FDTD solver for the in-plane electric polarization (Ex, Ey, Hz).
//!
//! The physical domain of a [`Grid2D`] is surrounded by a split-field PML
//! with cubic conductivity grading and terminated by a perfect conductor.
//! Yee layout in FDTD node indices: `Ex` lives on x-edges `(i + ½, j)`,
//! `Ey` on y-edges `(i, j + ½)`, `Hz` on cell centres. Conductive terms are
//! averaged in time (semi-implicit), which makes the single-frequency DFT of
//! the discrete fields solve a complex-symmetric stretched-coordinate system;
//! discrete reciprocity then holds up to DFT truncation.
//!
//! Sources sit on grid nodes and are split evenly between the two edges of
//! the matching component adjacent to the node; node fields are read back
//! as the average of the same two edges, so source and probe are transposes
//! of each other.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;

use crate::domain::{Grid2D, MaterialMap};
use crate::error::{invalid, Error, Result};

/// Design reflection coefficient of the PML at normal incidence.
const PML_REFLECTION: f64 = 1e-8;
/// Polynomial grading order of the PML conductivity.
const PML_ORDER: f64 = 3.0;

/// Cartesian in-plane polarization axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

/// Gaussian-modulated point current, `j(t) = j0 cos(2π f t) exp(-(t - t0)² / 2w²)`,
/// switched off outside `[0, cutoff]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub position: (f64, f64),
    pub axis: Axis,
    pub frequency: f64,
    pub width: f64,
    pub peak_time: f64,
    pub cutoff: f64,
    pub amplitude: f64,
}

impl SourceSpec {
    /// Unit-amplitude source with the default timing: peak at `5w`, cutoff
    /// five widths after the peak.
    pub fn gaussian(position: (f64, f64), axis: Axis, frequency: f64, width: f64) -> Self {
        Self {
            position,
            axis,
            frequency,
            width,
            peak_time: 5.0 * width,
            cutoff: 10.0 * width,
            amplitude: 1.0,
        }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn with_peak_time(mut self, peak_time: f64) -> Self {
        self.cutoff = peak_time + 5.0 * self.width;
        self.peak_time = peak_time;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.frequency > 0.0 && self.width > 0.0) {
            return Err(invalid("source frequency and width must be positive"));
        }
        if !self.amplitude.is_finite() || !self.peak_time.is_finite() || !self.cutoff.is_finite() {
            return Err(Error::NonFinite("source parameters"));
        }
        Ok(())
    }

    /// Current at time `t`.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        if t < 0.0 || t > self.cutoff {
            return 0.0;
        }
        let s = (t - self.peak_time) / self.width;
        self.amplitude * (2.0 * PI * self.frequency * t).cos() * (-0.5 * s * s).exp()
    }
}

/// Continuous-time Fourier transform `∫ j(t) e^{+iωt} dt` of the
/// (untruncated) source waveform. This is the convention used by the field
/// DFT, so `E(ω) / (iω j(ω))` is the outgoing Green's function.
pub fn source_spectrum(src: &SourceSpec, omega: f64) -> Result<Complex64> {
    if !(omega > 0.0) {
        return Err(invalid(format!("omega must be positive, got {omega}")));
    }
    src.validate()?;
    let omega0 = 2.0 * PI * src.frequency;
    let w = src.width;
    let gauss = |big_omega: f64| {
        Complex64::from_polar(
            w * (2.0 * PI).sqrt() * (-0.5 * big_omega * big_omega * w * w).exp(),
            big_omega * src.peak_time,
        )
    };
    let j = 0.5 * src.amplitude * (gauss(omega - omega0) + gauss(omega + omega0));
    let peak = 0.5 * src.amplitude.abs() * w * (2.0 * PI).sqrt();
    if j.norm() < 1e-12 * peak {
        return Err(Error::WeakSpectrum {
            magnitude: j.norm(),
            peak,
        });
    }
    Ok(j)
}

/// Stable time step `courant · h / √2` (c = 1).
pub fn cfl_timestep(grid: &Grid2D, courant: f64) -> Result<f64> {
    if !(courant > 0.0 && courant < 1.0) {
        return Err(invalid(format!(
            "Courant number must lie in (0, 1), got {courant}"
        )));
    }
    Ok(courant * grid.h() / SQRT_2)
}

/// Default PML thickness in cells: half a wavelength.
pub fn pml_thickness(wavelength: f64, resolution: u32) -> usize {
    (wavelength / 2.0 * resolution as f64 - 1e-9).ceil().max(1.0) as usize
}

/// When to end a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// After the source cutoff, stop once the field energy falls below
    /// `ratio` times its recorded peak; fail if that has not happened after
    /// `max_steps`.
    EnergyDecay { ratio: f64, max_steps: usize },
    /// Exactly this many steps, no decay requirement.
    FixedSteps(usize),
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule::EnergyDecay {
            ratio: 1e-8,
            max_steps: 1_000_000,
        }
    }
}

/// Numerical knobs of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub courant: f64,
    pub pml_cells: usize,
    pub stop: StopRule,
    /// Energy is sampled every this many steps.
    pub energy_every: usize,
}

impl SolverSettings {
    pub fn for_wavelength(wavelength: f64, resolution: u32) -> Self {
        Self {
            courant: 0.5,
            pml_cells: pml_thickness(wavelength, resolution),
            stop: StopRule::default(),
            energy_every: 10,
        }
    }
}

/// Complex in-plane field `(Ex, Ey)` on every node of the physical grid at a
/// single frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexFieldMap {
    pub grid: Grid2D,
    pub values: Vec<[Complex64; 2]>,
    /// Frequency in `c/µm`.
    pub frequency: f64,
    /// The Yee edge values the node values were averaged from, when known.
    pub edges: Option<EdgeFields>,
}

/// Edge components around the physical nodes: `ex[j·(nx+1) + i]` is the
/// x-edge left of node `(i, j)` (`i = nx` is right of the last node),
/// `ey[j·nx + i]` the y-edge below node `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFields {
    pub ex: Vec<Complex64>,
    pub ey: Vec<Complex64>,
}

impl EdgeFields {
    fn map(&self, other: Option<&EdgeFields>, f: impl Fn(Complex64, Complex64) -> Complex64) -> Option<Self> {
        let zero = Complex64::new(0.0, 0.0);
        let pick = |a: &[Complex64], b: Option<&[Complex64]>| -> Vec<Complex64> {
            match b {
                Some(b) => a.iter().zip(b).map(|(u, v)| f(*u, *v)).collect(),
                None => a.iter().map(|u| f(*u, zero)).collect(),
            }
        };
        Some(Self {
            ex: pick(&self.ex, other.map(|o| o.ex.as_slice())),
            ey: pick(&self.ey, other.map(|o| o.ey.as_slice())),
        })
    }

    /// Left/right x-edges and lower/upper y-edges of node `(i, j)`.
    #[inline]
    pub fn around(&self, grid: &Grid2D, i: usize, j: usize) -> [Complex64; 4] {
        let (nx, w) = (grid.nodes_x(), grid.nodes_x() + 1);
        [
            self.ex[j * w + i],
            self.ex[j * w + i + 1],
            self.ey[j * nx + i],
            self.ey[(j + 1) * nx + i],
        ]
    }
}

impl ComplexFieldMap {
    pub fn zeros(grid: Grid2D, frequency: f64) -> Self {
        Self {
            grid,
            values: vec![[Complex64::new(0.0, 0.0); 2]; grid.node_count()],
            frequency,
            edges: None,
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> [Complex64; 2] {
        self.values[self.grid.index(i, j)]
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|[a, b]| a.is_finite() && b.is_finite())
    }

    /// Pointwise `self * a + other * b`.
    pub fn combine(&self, a: Complex64, other: &ComplexFieldMap, b: Complex64) -> Result<Self> {
        self.grid.ensure_same(&other.grid, "field combination")?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| [u[0] * a + v[0] * b, u[1] * a + v[1] * b])
            .collect();
        // Edge data survives only if both operands carry it.
        let edges = match (&self.edges, &other.edges) {
            (Some(e), Some(o)) => e.map(Some(o), |u, v| u * a + v * b),
            _ => None,
        };
        Ok(Self {
            grid: self.grid,
            values,
            frequency: self.frequency,
            edges,
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|[a, b]| [a * s, b * s]).collect(),
            frequency: self.frequency,
            edges: self.edges.as_ref().and_then(|e| e.map(None, |u, _| u * s)),
        }
    }
}

/// Result of one time-domain run.
#[derive(Debug, Clone)]
pub struct FdtdRun {
    /// `Σ_n E(t_n) e^{iωt_n} dt` on the physical nodes.
    pub field: ComplexFieldMap,
    pub steps: usize,
    pub dt: f64,
    /// `(time, energy)` samples.
    pub energy: Vec<(f64, f64)>,
    pub peak_energy: f64,
}

/// Layout of the padded FDTD lattice.
struct Lattice {
    /// Nodes along x and y including PML.
    nx: usize,
    ny: usize,
    pml: usize,
}

impl Lattice {
    /// Depth into the PML (fraction of its thickness) of the lattice
    /// coordinate `u` along an axis with `n_phys` physical cells.
    fn depth(&self, u: f64, n_phys: usize) -> f64 {
        let lo = self.pml as f64;
        let hi = (self.pml + n_phys) as f64;
        let d = if u < lo {
            lo - u
        } else if u > hi {
            u - hi
        } else {
            0.0
        };
        d / self.pml as f64
    }
}

fn pml_sigma(depth: f64, pml_len: f64) -> f64 {
    if depth <= 0.0 {
        return 0.0;
    }
    let sigma_max = -(PML_ORDER + 1.0) * PML_REFLECTION.ln() / (2.0 * pml_len);
    sigma_max * depth.powf(PML_ORDER)
}

/// Runs the solver for one source and returns the single-frequency DFT of
/// the electric field.
pub fn run(
    material: &MaterialMap,
    src: &SourceSpec,
    omega: f64,
    settings: &SolverSettings,
) -> Result<FdtdRun> {
    src.validate()?;
    if !(omega > 0.0) {
        return Err(invalid("omega must be positive"));
    }
    if settings.pml_cells == 0 {
        return Err(invalid("PML needs at least one cell"));
    }
    if material.eps.iter().any(|e| !e.is_finite() || *e < 1.0) {
        return Err(invalid("permittivity must be finite and >= 1"));
    }
    let grid = material.grid;
    let (si, sj) = grid.node_at(src.position.0, src.position.1).map_err(|_| {
        invalid(format!(
            "source at {:?} is not a physical grid node (sources may not sit in the PML)",
            src.position
        ))
    })?;
    let dt = cfl_timestep(&grid, settings.courant)?;
    let h = grid.h();
    let p = settings.pml_cells;
    let lat = Lattice {
        nx: grid.nodes_x() + 2 * p,
        ny: grid.nodes_y() + 2 * p,
        pml: p,
    };
    let (nx, ny) = (lat.nx, lat.ny);
    let pml_len = p as f64 * h;

    let sig = |u: f64, n_phys: usize| pml_sigma(lat.depth(u, n_phys), pml_len) ;
    let decay = |s: f64| (1.0 - 0.5 * s * dt) / (1.0 + 0.5 * s * dt);
    let gain = |s: f64| dt / (1.0 + 0.5 * s * dt);

    // Node permittivity over the padded lattice (vacuum in the PML).
    let eps_node = |i: usize, j: usize| -> f64 {
        if i < p || j < p || i >= p + grid.nodes_x() || j >= p + grid.nodes_y() {
            1.0
        } else {
            material.at(i - p, j - p)
        }
    };

    // Ex: (nx-1) x ny, Ey: nx x (ny-1), Hz: (nx-1) x (ny-1).
    let ex_w = nx - 1;
    let ey_w = nx;
    let hz_w = nx - 1;
    let mut ex = vec![0.0; ex_w * ny];
    let mut ey = vec![0.0; ey_w * (ny - 1)];
    let mut hzx = vec![0.0; hz_w * (ny - 1)];
    let mut hzy = vec![0.0; hz_w * (ny - 1)];
    let mut hz = vec![0.0; hz_w * (ny - 1)];

    // Update coefficients.
    let ex_decay: Vec<f64> = (0..ny).map(|j| decay(sig(j as f64, grid.ny))).collect();
    let ey_decay: Vec<f64> = (0..nx).map(|i| decay(sig(i as f64, grid.nx))).collect();
    let hx_decay: Vec<f64> = (0..nx - 1)
        .map(|i| decay(sig(i as f64 + 0.5, grid.nx)))
        .collect();
    let hx_gain: Vec<f64> = (0..nx - 1)
        .map(|i| gain(sig(i as f64 + 0.5, grid.nx)) / h)
        .collect();
    let hy_decay: Vec<f64> = (0..ny - 1)
        .map(|j| decay(sig(j as f64 + 0.5, grid.ny)))
        .collect();
    let hy_gain: Vec<f64> = (0..ny - 1)
        .map(|j| gain(sig(j as f64 + 0.5, grid.ny)) / h)
        .collect();
    let mut ex_eps = vec![1.0; ex.len()];
    let mut ex_gain = vec![0.0; ex.len()];
    for j in 0..ny {
        let g = gain(sig(j as f64, grid.ny)) / h;
        for i in 0..ex_w {
            let e = 0.5 * (eps_node(i, j) + eps_node(i + 1, j));
            ex_eps[j * ex_w + i] = e;
            ex_gain[j * ex_w + i] = g / e;
        }
    }
    let mut ey_eps = vec![1.0; ey.len()];
    let mut ey_gain = vec![0.0; ey.len()];
    for j in 0..ny - 1 {
        for i in 0..ey_w {
            let g = gain(sig(i as f64, grid.nx)) / h;
            let e = 0.5 * (eps_node(i, j) + eps_node(i, j + 1));
            ey_eps[j * ey_w + i] = e;
            ey_gain[j * ey_w + i] = g / e;
        }
    }

    // Source edges: the two edges of the source component adjacent to the node.
    let (li, lj) = (si + p, sj + p);
    let src_edges: [usize; 2] = match src.axis {
        Axis::X => [lj * ex_w + li - 1, lj * ex_w + li],
        Axis::Y => [(lj - 1) * ey_w + li, lj * ey_w + li],
    };
    // Edge value = -gain·h·J/(2h²), i.e. current density split over two cells.
    let src_scale: [f64; 2] = match src.axis {
        Axis::X => [ex_gain[src_edges[0]] / (2.0 * h), ex_gain[src_edges[1]] / (2.0 * h)],
        Axis::Y => [ey_gain[src_edges[0]] / (2.0 * h), ey_gain[src_edges[1]] / (2.0 * h)],
    };

    // DFT accumulation windows (edges touching physical nodes).
    let gnx = grid.nodes_x();
    let gny = grid.nodes_y();
    let acc_ex_w = gnx + 1; // edges p-1 ..= p+nx
    let acc_ey_h = gny + 1;
    let mut acc_ex = vec![Complex64::new(0.0, 0.0); acc_ex_w * gny];
    let mut acc_ey = vec![Complex64::new(0.0, 0.0); gnx * acc_ey_h];

    let (max_steps, ratio) = match settings.stop {
        StopRule::EnergyDecay { ratio, max_steps } => (max_steps, Some(ratio)),
        StopRule::FixedSteps(n) => (n, None),
    };
    let energy_every = settings.energy_every.max(1);
    let mut energy_trace = Vec::new();
    let mut peak_energy: f64 = 0.0;
    let mut last_energy = f64::INFINITY;
    let mut steps = 0usize;
    let mut decayed = false;

    while steps < max_steps {
        let n = steps;
        let sample_energy = n % energy_every == 0;

        // Electric energy at t_n, before H moves to n + ½.
        let mut energy = 0.0;
        if sample_energy {
            energy += ex.iter().zip(&ex_eps).map(|(e, k)| k * e * e).sum::<f64>();
            energy += ey.iter().zip(&ey_eps).map(|(e, k)| k * e * e).sum::<f64>();
        }

        // H update: n - ½ -> n + ½.
        let mut h_energy = 0.0;
        for j in 0..ny - 1 {
            let row = j * hz_w;
            let ey_row = &ey[j * ey_w..(j + 1) * ey_w];
            let ex_lo = &ex[j * ex_w..(j + 1) * ex_w];
            let ex_hi = &ex[(j + 1) * ex_w..(j + 2) * ex_w];
            let hzx_row = &mut hzx[row..row + hz_w];
            let hzy_row = &mut hzy[row..row + hz_w];
            let hz_row = &mut hz[row..row + hz_w];
            let (hyd, hyg) = (hy_decay[j], hy_gain[j]);
            for i in 0..hz_w {
                let d_ey = ey_row[i + 1] - ey_row[i];
                let d_ex = ex_hi[i] - ex_lo[i];
                let a = hx_decay[i] * hzx_row[i] - hx_gain[i] * d_ey;
                let b = hyd * hzy_row[i] + hyg * d_ex;
                hzx_row[i] = a;
                hzy_row[i] = b;
                let new = a + b;
                if sample_energy {
                    h_energy += hz_row[i] * new;
                }
                hz_row[i] = new;
            }
        }

        // E update: n -> n + 1, source at (n + ½) dt.
        for j in 1..ny - 1 {
            let hz_lo = &hz[(j - 1) * hz_w..j * hz_w];
            let hz_hi = &hz[j * hz_w..(j + 1) * hz_w];
            let row = j * ex_w;
            let ex_row = &mut ex[row..row + ex_w];
            let g_row = &ex_gain[row..row + ex_w];
            let d = ex_decay[j];
            for i in 0..ex_w {
                ex_row[i] = d * ex_row[i] + g_row[i] * (hz_hi[i] - hz_lo[i]);
            }
        }
        for j in 0..ny - 1 {
            let hz_row = &hz[j * hz_w..(j + 1) * hz_w];
            let row = j * ey_w;
            let ey_row = &mut ey[row..row + ey_w];
            let g_row = &ey_gain[row..row + ey_w];
            for i in 1..ey_w - 1 {
                ey_row[i] = ey_decay[i] * ey_row[i] - g_row[i] * (hz_row[i] - hz_row[i - 1]);
            }
        }
        let t_half = (n as f64 + 0.5) * dt;
        let j_now = src.value(t_half);
        if j_now != 0.0 {
            let target = match src.axis {
                Axis::X => &mut ex,
                Axis::Y => &mut ey,
            };
            target[src_edges[0]] -= src_scale[0] * j_now;
            target[src_edges[1]] -= src_scale[1] * j_now;
        }

        // Running DFT of E(t_{n+1}).
        let t_next = (n + 1) as f64 * dt;
        let phasor = Complex64::from_polar(dt, omega * t_next);
        for jj in 0..gny {
            let src_row = &ex[(jj + p) * ex_w + p - 1..(jj + p) * ex_w + p - 1 + acc_ex_w];
            let acc_row = &mut acc_ex[jj * acc_ex_w..(jj + 1) * acc_ex_w];
            for (a, &e) in acc_row.iter_mut().zip(src_row) {
                a.re += e * phasor.re;
                a.im += e * phasor.im;
            }
        }
        for jj in 0..acc_ey_h {
            let start = (jj + p - 1) * ey_w + p;
            let src_row = &ey[start..start + gnx];
            let acc_row = &mut acc_ey[jj * gnx..(jj + 1) * gnx];
            for (a, &e) in acc_row.iter_mut().zip(src_row) {
                a.re += e * phasor.re;
                a.im += e * phasor.im;
            }
        }

        steps += 1;

        if sample_energy {
            let total = (energy + h_energy) * h * h;
            if !total.is_finite() {
                return Err(Error::NonFinite("FDTD fields"));
            }
            let t = n as f64 * dt;
            energy_trace.push((t, total));
            peak_energy = peak_energy.max(total);
            last_energy = total;
            if let Some(r) = ratio {
                if t > src.cutoff && total <= r * peak_energy {
                    decayed = true;
                    break;
                }
            }
        }
    }

    if let Some(_r) = ratio {
        if !decayed {
            return Err(Error::NonDecaying {
                steps,
                ratio: if peak_energy > 0.0 {
                    last_energy / peak_energy
                } else {
                    f64::NAN
                },
            });
        }
    }

    let mut values = vec![[Complex64::new(0.0, 0.0); 2]; grid.node_count()];
    for jj in 0..gny {
        for ii in 0..gnx {
            let exv = 0.5 * (acc_ex[jj * acc_ex_w + ii] + acc_ex[jj * acc_ex_w + ii + 1]);
            let eyv = 0.5 * (acc_ey[jj * gnx + ii] + acc_ey[(jj + 1) * gnx + ii]);
            values[grid.index(ii, jj)] = [exv, eyv];
        }
    }
    let field = ComplexFieldMap {
        grid,
        values,
        frequency: omega / (2.0 * PI),
        edges: Some(EdgeFields { ex: acc_ex, ey: acc_ey }),
    };
    if !field.is_finite() {
        return Err(Error::NonFinite("DFT field"));
    }
    Ok(FdtdRun {
        field,
        steps,
        dt,
        energy: energy_trace,
        peak_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::make_grid;

    #[test]
    fn timestep_formula() {
        let g = make_grid(7.0, 7.0, 20).unwrap();
        let dt = cfl_timestep(&g, 0.5).unwrap();
        assert!((dt - 0.05 / (2.0 * SQRT_2)).abs() < 1e-15);
        assert!((dt - 0.01768).abs() < 1e-5);
        assert!(cfl_timestep(&g, 1.1).is_err());
        assert!(cfl_timestep(&g, 0.0).is_err());
    }

    #[test]
    fn pml_default_is_half_wavelength() {
        assert_eq!(pml_thickness(2.0, 10), 10);
        assert_eq!(pml_thickness(2.0, 20), 20);
        assert_eq!(pml_thickness(1.5, 10), 8);
    }

    #[test]
    fn source_waveform_timing() {
        let s = SourceSpec::gaussian((0.0, 0.0), Axis::X, 0.5, 20.0);
        assert_eq!(s.peak_time, 100.0);
        assert_eq!(s.cutoff, 200.0);
        assert_eq!(s.value(200.0 + 1e-9), 0.0);
        assert_eq!(s.value(-1e-9), 0.0);
        assert!((s.value(100.0) - (2.0 * PI * 0.5 * 100.0).cos()).abs() < 1e-12);
    }

    #[test]
    fn spectrum_centered_gaussian_is_real_positive() {
        let s = SourceSpec::gaussian((0.0, 0.0), Axis::X, 0.5, 20.0).with_peak_time(0.0);
        let j = source_spectrum(&s, PI).unwrap();
        assert!(j.re > 0.0);
        assert!(j.im.abs() < 1e-12 * j.re);
    }

    #[test]
    fn spectrum_is_linear_in_amplitude() {
        let s = SourceSpec::gaussian((0.0, 0.0), Axis::Y, 0.5, 20.0);
        let a = source_spectrum(&s, PI).unwrap();
        let b = source_spectrum(&s.with_amplitude(2.0), PI).unwrap();
        assert!((b.norm() - 2.0 * a.norm()).abs() < 1e-12 * a.norm());
    }

    #[test]
    fn spectrum_rejects_far_off_band_and_nonpositive_omega() {
        let s = SourceSpec::gaussian((0.0, 0.0), Axis::X, 0.5, 20.0);
        assert!(matches!(
            source_spectrum(&s, 3.0 * PI),
            Err(Error::WeakSpectrum { .. })
        ));
        assert!(source_spectrum(&s, 0.0).is_err());
    }

    #[test]
    fn run_rejects_off_grid_source() {
        let g = make_grid(2.0, 2.0, 10).unwrap();
        let m = MaterialMap::uniform(g, 1.0);
        let settings = SolverSettings::for_wavelength(1.0, 10);
        let s = SourceSpec::gaussian((0.05, 0.0), Axis::X, 1.0, 2.0);
        assert!(run(&m, &s, 2.0 * PI, &settings).is_err());
        let s = SourceSpec::gaussian((1.5, 0.0), Axis::X, 1.0, 2.0);
        assert!(run(&m, &s, 2.0 * PI, &settings).is_err());
    }

    #[test]
    fn short_run_is_finite_and_decays() {
        let g = make_grid(2.0, 2.0, 10).unwrap();
        let m = MaterialMap::uniform(g, 1.0);
        let settings = SolverSettings::for_wavelength(1.0, 10);
        let s = SourceSpec::gaussian((0.0, 0.0), Axis::X, 1.0, 2.0);
        let out = run(&m, &s, 2.0 * PI, &settings).unwrap();
        assert!(out.field.is_finite());
        assert!(out.peak_energy > 0.0);
        let last = out.energy.last().unwrap().1;
        assert!(last <= 1e-8 * out.peak_energy);
    }
}
