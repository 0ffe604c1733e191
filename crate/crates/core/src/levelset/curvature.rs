use crate::error::{invalid, Result};

use super::padded::{Extrapolation, Padded};
use super::{LevelSetField, VelocityField};

/// Mean curvature `∇·(∇Φ/|∇Φ|)` by central differences, clamped to
/// `±1/h` (the grid cannot resolve tighter radii). Positive on convex
/// interior boundaries.
pub fn curvature(phi: &LevelSetField) -> Result<Vec<f64>> {
    phi.ensure_finite()?;
    let g = &phi.grid;
    let h = g.h();
    let p = Padded::new(g, &phi.phi, 1, Extrapolation::Linear);
    let w = p.width;
    let d = &p.data;
    let delta2 = (1e-3_f64).powi(2);
    let cap = 1.0 / h;
    let mut out = vec![0.0; phi.phi.len()];
    for j in 0..g.nodes_y() {
        for i in 0..g.nodes_x() {
            let k = p.idx(i, j);
            let px = (d[k + 1] - d[k - 1]) / (2.0 * h);
            let py = (d[k + w] - d[k - w]) / (2.0 * h);
            let pxx = (d[k + 1] - 2.0 * d[k] + d[k - 1]) / (h * h);
            let pyy = (d[k + w] - 2.0 * d[k] + d[k - w]) / (h * h);
            let pxy = (d[k + w + 1] - d[k + w - 1] - d[k - w + 1] + d[k - w - 1]) / (4.0 * h * h);
            let num = pxx * py * py - 2.0 * px * py * pxy + pyy * px * px;
            let den = (px * px + py * py + delta2).powf(1.5);
            out[g.index(i, j)] = (num / den).clamp(-cap, cap);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintMode {
    /// `b(κ) = κ` everywhere.
    Localized,
    /// `b(κ) = κ` only where `|κ| > kappa0`, zero elsewhere.
    Thresholded { kappa0: f64 },
}

/// Curvature-flow regularization `v = -τ b(κ) exp(-Φ²/σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureConstraint {
    pub mode: ConstraintMode,
    pub tau: f64,
    /// Width of the Gaussian band around the interface, in µm².
    pub sigma: f64,
}

impl CurvatureConstraint {
    pub fn validate(&self) -> Result<()> {
        if !self.tau.is_finite() {
            return Err(invalid("constraint tau must be finite"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid("constraint sigma must be positive"));
        }
        if let ConstraintMode::Thresholded { kappa0 } = self.mode {
            if !(kappa0 >= 0.0 && kappa0.is_finite()) {
                return Err(invalid("constraint kappa0 must be non-negative"));
            }
        }
        Ok(())
    }
}

pub fn constraint_velocity(
    phi: &LevelSetField,
    constraint: &CurvatureConstraint,
) -> Result<VelocityField> {
    constraint.validate()?;
    let kappa = curvature(phi)?;
    let v = kappa
        .iter()
        .zip(&phi.phi)
        .map(|(&k, &p)| {
            let b = match constraint.mode {
                ConstraintMode::Localized => k,
                ConstraintMode::Thresholded { kappa0 } => {
                    if k.abs() > kappa0 {
                        k
                    } else {
                        0.0
                    }
                }
            };
            -constraint.tau * b * (-p * p / constraint.sigma).exp()
        })
        .collect();
    Ok(VelocityField { grid: phi.grid, v })
}
