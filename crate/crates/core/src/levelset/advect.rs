//! `Φ_t + v |∇Φ| = 0` with Godunov upwinding.

use crate::error::Result;

use super::padded::{Extrapolation, Padded};
use super::{LevelSetField, VelocityField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvectOptions {
    /// Second-order ENO differences with TVD-RK2 instead of first-order
    /// upwind with forward Euler.
    pub eno2: bool,
    /// Sub-step limit `dt <= cfl * h / max|v|`.
    pub cfl: f64,
}

impl Default for AdvectOptions {
    fn default() -> Self {
        Self {
            eno2: false,
            cfl: 0.5,
        }
    }
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// One-sided derivatives `(D⁻, D⁺)` at padded index `k` with stride `s`.
#[inline]
pub(super) fn one_sided(d: &[f64], k: usize, s: usize, h: f64, eno2: bool) -> (f64, f64) {
    let dm = (d[k] - d[k - s]) / h;
    let dp = (d[k + s] - d[k]) / h;
    if !eno2 {
        return (dm, dp);
    }
    let dd = |c: usize| d[c + s] - 2.0 * d[c] + d[c - s];
    let (l, c, r) = (dd(k - s), dd(k), dd(k + s));
    (dm + minmod(l, c) / (2.0 * h), dp - minmod(c, r) / (2.0 * h))
}

/// Godunov `|∇Φ|` for motion with speed sign `positive`.
#[inline]
pub(super) fn godunov_norm(dxm: f64, dxp: f64, dym: f64, dyp: f64, positive: bool) -> f64 {
    let (gx, gy) = if positive {
        (
            dxm.max(0.0).powi(2).max(dxp.min(0.0).powi(2)),
            dym.max(0.0).powi(2).max(dyp.min(0.0).powi(2)),
        )
    } else {
        (
            dxm.min(0.0).powi(2).max(dxp.max(0.0).powi(2)),
            dym.min(0.0).powi(2).max(dyp.max(0.0).powi(2)),
        )
    };
    (gx + gy).sqrt()
}

fn rate(phi: &LevelSetField, v: &[f64], eno2: bool, out: &mut [f64]) {
    let g = &phi.grid;
    let h = g.h();
    let p = Padded::new(g, &phi.phi, 2, Extrapolation::ZeroGradient);
    let w = p.width;
    for j in 0..g.nodes_y() {
        for i in 0..g.nodes_x() {
            let n = g.index(i, j);
            let speed = v[n];
            if speed == 0.0 {
                out[n] = 0.0;
                continue;
            }
            let k = p.idx(i, j);
            let (dxm, dxp) = one_sided(&p.data, k, 1, h, eno2);
            let (dym, dyp) = one_sided(&p.data, k, w, h, eno2);
            out[n] = -speed * godunov_norm(dxm, dxp, dym, dyp, speed > 0.0);
        }
    }
}

/// Advances `phi` by `duration` under normal velocity `v` with default options.
pub fn advect(phi: &LevelSetField, v: &VelocityField, duration: f64) -> Result<LevelSetField> {
    advect_with(phi, v, duration, AdvectOptions::default())
}

pub fn advect_with(
    phi: &LevelSetField,
    v: &VelocityField,
    duration: f64,
    opts: AdvectOptions,
) -> Result<LevelSetField> {
    phi.grid.ensure_same(&v.grid, "advection velocity")?;
    phi.ensure_finite()?;
    v.ensure_finite()?;
    let vmax = v.max_abs();
    if vmax == 0.0 || duration == 0.0 {
        return Ok(phi.clone());
    }
    let h = phi.grid.h();
    let steps = ((duration.abs() * vmax) / (opts.cfl * h)).ceil().max(1.0) as usize;
    let dt = duration / steps as f64;
    let n = phi.phi.len();
    let mut cur = phi.clone();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    for _ in 0..steps {
        rate(&cur, &v.v, opts.eno2, &mut k1);
        if opts.eno2 {
            let mut stage = cur.clone();
            for (s, r) in stage.phi.iter_mut().zip(&k1) {
                *s += dt * r;
            }
            rate(&stage, &v.v, true, &mut k2);
            for ((c, a), b) in cur.phi.iter_mut().zip(&k1).zip(&k2) {
                *c += 0.5 * dt * (a + b);
            }
        } else {
            for (c, r) in cur.phi.iter_mut().zip(&k1) {
                *c += dt * r;
            }
        }
    }
    cur.ensure_finite()?;
    Ok(cur)
}
