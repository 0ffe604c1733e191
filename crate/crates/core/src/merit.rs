//! RET merit: rate `Γ = |d_A*·G(r_A, r_D)·d_D|²`, the ratio `Q = Γ/Γ0`,
//! and the shape-derivative velocity obtained from two Green's columns.
//!
//! Derivation of the velocity: adding `δε` at `r'` changes the donor field
//! at `r_A` by `ω² G(r_A, r') δε E_D(r')` (Born, `e^{-iωt}`), so with
//! `p = d_A*·E_D(r_A)` and reciprocity `d_A*·G(r_A, r') = [G(r', r_A) d_A*]ᵀ`
//! we get `δΓ = 2ω² δε Re{p̄ · E_A(r')·E_D(r')}`, where `E_A` is the field of
//! the conjugated acceptor moment radiating from `r_A`. The velocity drops
//! the positive prefactor.

use num_complex::Complex64;

use crate::domain::Grid2D;
use crate::error::{invalid, Error, Result};
use crate::fdtd::ComplexFieldMap;
use crate::greens::Tensor2;
use crate::levelset::{contour, LevelSetField, VelocityField};

/// Point dipole with a unit complex in-plane moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleSpec {
    pub position: (f64, f64),
    pub moment: [Complex64; 2],
}

impl DipoleSpec {
    /// Normalizes `moment` to unit length.
    pub fn new(position: (f64, f64), moment: [Complex64; 2]) -> Result<Self> {
        let norm = (moment[0].norm_sqr() + moment[1].norm_sqr()).sqrt();
        if !norm.is_finite() || !position.0.is_finite() || !position.1.is_finite() {
            return Err(invalid("dipole position and moment must be finite"));
        }
        if norm == 0.0 {
            return Err(invalid("dipole moment is zero"));
        }
        Ok(Self {
            position,
            moment: [moment[0] / norm, moment[1] / norm],
        })
    }

    pub fn x_aligned(position: (f64, f64)) -> Self {
        Self {
            position,
            moment: [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        }
    }

    /// `(1, ±i)/√2`; `+` rotates counter-clockwise.
    pub fn rotating(position: (f64, f64), counter_clockwise: bool) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let im = if counter_clockwise { s } else { -s };
        Self {
            position,
            moment: [Complex64::new(s, 0.0), Complex64::new(0.0, im)],
        }
    }

    pub fn conj_moment(&self) -> [Complex64; 2] {
        [self.moment[0].conj(), self.moment[1].conj()]
    }

    pub fn check_on_grid(&self, grid: &Grid2D) -> Result<(usize, usize)> {
        grid.node_at(self.position.0, self.position.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeritReport {
    pub gamma: f64,
    pub gamma0: f64,
    pub q: f64,
}

impl MeritReport {
    pub fn new(gamma: f64, gamma0: f64) -> Result<Self> {
        Ok(Self {
            gamma,
            gamma0,
            q: purcell_q(gamma, gamma0)?,
        })
    }
}

/// `d_A*·G·d_D`.
pub fn coupling(g_ad: &Tensor2, acceptor: &DipoleSpec, donor: &DipoleSpec) -> Complex64 {
    let mut p = Complex64::new(0.0, 0.0);
    for a in 0..2 {
        for b in 0..2 {
            p += acceptor.moment[a].conj() * g_ad[a][b] * donor.moment[b];
        }
    }
    p
}

/// `d_A*·E_D(r_A)` read off the donor column (the field of `d_D`).
pub fn coupling_from_column(donor_field: &ComplexFieldMap, acceptor: &DipoleSpec) -> Result<Complex64> {
    let (i, j) = acceptor.check_on_grid(&donor_field.grid)?;
    let e = donor_field.at(i, j);
    Ok(acceptor.moment[0].conj() * e[0] + acceptor.moment[1].conj() * e[1])
}

pub fn ret_rate(g_ad: &Tensor2, acceptor: &DipoleSpec, donor: &DipoleSpec) -> f64 {
    coupling(g_ad, acceptor, donor).norm_sqr()
}

pub fn purcell_q(gamma: f64, gamma0: f64) -> Result<f64> {
    if !(gamma0 > 0.0) || !gamma0.is_finite() {
        return Err(invalid(format!("reference rate must be positive, got {gamma0}")));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::NonFinite("RET rate"));
    }
    Ok(gamma / gamma0)
}

fn check_frequencies(a: &ComplexFieldMap, b: &ComplexFieldMap) -> Result<()> {
    a.grid.ensure_same(&b.grid, "merit columns")?;
    let (fa, fb) = (a.frequency, b.frequency);
    if fa.is_finite() && fb.is_finite() && (fa - fb).abs() > 1e-12 * fa.abs().max(fb.abs()) {
        return Err(invalid(format!(
            "columns computed at different frequencies ({fa} vs {fb})"
        )));
    }
    Ok(())
}

/// `Re{p̄ · E_A(r')·E_D(r')}` per node (unconjugated dot product of the
/// node-averaged fields).
pub fn velocity_from_coupling(
    acceptor_field: &ComplexFieldMap,
    donor_field: &ComplexFieldMap,
    p: Complex64,
) -> Result<VelocityField> {
    check_frequencies(acceptor_field, donor_field)?;
    let pc = p.conj();
    let v = acceptor_field
        .values
        .iter()
        .zip(&donor_field.values)
        .map(|(a, d)| (pc * (a[0] * d[0] + a[1] * d[1])).re)
        .collect();
    let out = VelocityField {
        grid: acceptor_field.grid,
        v,
    };
    out.ensure_finite()?;
    Ok(out)
}

/// Exact first-order derivative of `Γ` with respect to each nodal
/// permittivity, up to the factor `2ω²h²`: `Re{p̄ · ½ Σ_edges E_A E_D}`.
///
/// The solver puts a node's permittivity on its four adjacent Yee edges
/// with weight ½ each. Away from material jumps this equals
/// [`velocity_from_coupling`]. Across a high-contrast boundary it weights
/// the discontinuous normal field of the low-index side, which overstates
/// what a boundary displacement does; the optimizer therefore uses the
/// node-averaged product and this serves as a diagnostic.
pub fn permittivity_gradient(
    acceptor_field: &ComplexFieldMap,
    donor_field: &ComplexFieldMap,
    p: Complex64,
) -> Result<VelocityField> {
    check_frequencies(acceptor_field, donor_field)?;
    let (Some(ea), Some(ed)) = (&acceptor_field.edges, &donor_field.edges) else {
        return Err(invalid("permittivity gradient needs Yee edge fields"));
    };
    let grid = acceptor_field.grid;
    let pc = p.conj();
    let mut v = Vec::with_capacity(grid.node_count());
    for j in 0..grid.nodes_y() {
        for i in 0..grid.nodes_x() {
            let (a, d) = (ea.around(&grid, i, j), ed.around(&grid, i, j));
            let s: Complex64 = a.iter().zip(&d).map(|(x, y)| x * y).sum();
            v.push((pc * s * 0.5).re);
        }
    }
    let out = VelocityField { grid, v };
    out.ensure_finite()?;
    Ok(out)
}

/// Raw RET velocity. `acceptor_field` radiates `conj(d_A)` from `r_A`,
/// `donor_field` radiates `d_D` from `r_D`.
pub fn velocity_field_ret(
    acceptor_field: &ComplexFieldMap,
    donor_field: &ComplexFieldMap,
    g_ad: &Tensor2,
    acceptor: &DipoleSpec,
    donor: &DipoleSpec,
) -> Result<VelocityField> {
    velocity_from_coupling(acceptor_field, donor_field, coupling(g_ad, acceptor, donor))
}

/// First-order merit change `∮ v² ds · step` of a normalized step.
pub fn predicted_gain(v: &VelocityField, phi: &LevelSetField, step: f64) -> Result<f64> {
    phi.grid.ensure_same(&v.grid, "predicted gain")?;
    Ok(contour::interface_integral_sq(phi, &v.v) * step)
}

/// Inputs shared by all Green's-tensor merit functions: the field of the
/// donor moment and of the conjugated acceptor moment.
pub struct MeritInputs<'a> {
    pub donor: &'a DipoleSpec,
    pub acceptor: &'a DipoleSpec,
    pub donor_field: &'a ComplexFieldMap,
    pub acceptor_field: Option<&'a ComplexFieldMap>,
}

/// A real functional of the Green's tensor together with its volumetric
/// shape derivative.
pub trait GreensMerit: Sync {
    fn value(&self, inputs: &MeritInputs<'_>) -> Result<f64>;
    /// Unnormalized `v_n`; requires `acceptor_field`.
    fn velocity(&self, inputs: &MeritInputs<'_>) -> Result<VelocityField>;
}

/// Resonance energy transfer rate.
#[derive(Debug, Clone, Copy, Default)]
pub struct RetMerit;

impl GreensMerit for RetMerit {
    fn value(&self, inputs: &MeritInputs<'_>) -> Result<f64> {
        Ok(coupling_from_column(inputs.donor_field, inputs.acceptor)?.norm_sqr())
    }

    fn velocity(&self, inputs: &MeritInputs<'_>) -> Result<VelocityField> {
        let a = inputs
            .acceptor_field
            .ok_or_else(|| invalid("RET velocity needs the acceptor column"))?;
        let p = coupling_from_column(inputs.donor_field, inputs.acceptor)?;
        velocity_from_coupling(a, inputs.donor_field, p)
    }
}
