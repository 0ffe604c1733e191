use crate::domain::Grid2D;
use crate::error::{invalid, Error, Result};

/// Nodal normal velocity; positive values grow the material.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub grid: Grid2D,
    pub v: Vec<f64>,
}

impl VelocityField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self::uniform(grid, 0.0)
    }

    pub fn uniform(grid: Grid2D, value: f64) -> Self {
        Self {
            grid,
            v: vec![value; grid.node_count()],
        }
    }

    pub fn from_values(grid: Grid2D, v: Vec<f64>) -> Result<Self> {
        if v.len() != grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "velocity has {} values, grid has {} nodes",
                v.len(),
                grid.node_count()
            )));
        }
        Ok(Self { grid, v })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.v[self.grid.index(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub(crate) fn ensure_finite(&self) -> Result<()> {
        if self.v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("velocity field"));
        }
        Ok(())
    }
}

/// Zeroes the velocity within `radius` of each point in `exclusion`, then
/// scales so that `max|v| = 1`. Masking first keeps the near-source
/// singularity from dominating the normalization.
pub fn normalize_and_mask(
    raw: &VelocityField,
    exclusion: &[(f64, f64)],
    radius: f64,
) -> Result<VelocityField> {
    raw.ensure_finite()?;
    if !(radius >= 0.0) {
        return Err(invalid("exclusion radius must be non-negative"));
    }
    let g = raw.grid;
    let mut out = raw.clone();
    for j in 0..g.nodes_y() {
        for i in 0..g.nodes_x() {
            let (x, y) = (g.x(i), g.y(j));
            if exclusion
                .iter()
                .any(|&(px, py)| (x - px).hypot(y - py) <= radius)
            {
                out.v[g.index(i, j)] = 0.0;
            }
        }
    }
    let m = out.max_abs();
    if m == 0.0 {
        return Err(Error::ZeroVelocity);
    }
    for x in &mut out.v {
        *x /= m;
    }
    Ok(out)
}

/// Like [`normalize_and_mask`], but scales so that the largest speed on
/// nodes within `band` of the interface is 1, then clamps the remaining
/// volume to `[-1, 1]`. The boundary then moves by at most one step length
/// per unit time regardless of the singular growth of `v` near the sources.
pub fn normalize_on_interface(
    raw: &VelocityField,
    phi: &super::LevelSetField,
    exclusion: &[(f64, f64)],
    radius: f64,
    band: f64,
) -> Result<VelocityField> {
    raw.grid.ensure_same(&phi.grid, "interface normalization")?;
    let mut out = normalize_and_mask(raw, exclusion, radius)?;
    let m = out
        .v
        .iter()
        .zip(&phi.phi)
        .filter(|(_, p)| p.abs() <= band)
        .fold(0.0f64, |m, (v, _)| m.max(v.abs()));
    if m == 0.0 {
        return Err(Error::ZeroVelocity);
    }
    for x in &mut out.v {
        *x = (*x / m).clamp(-1.0, 1.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::make_grid;

    #[test]
    fn masks_before_normalizing() {
        let g = make_grid(4.0, 4.0, 10).unwrap();
        let mut raw = VelocityField::uniform(g, 0.5);
        let (i, j) = g.node_at(1.0, 0.0).unwrap();
        raw.v[g.index(i, j)] = 1e6;
        let out = normalize_and_mask(&raw, &[(1.0, 0.0)], 0.2).unwrap();
        assert_eq!(out.at(i, j), 0.0);
        assert!((out.max_abs() - 1.0).abs() < 1e-15);
        assert_eq!(out.at(0, 0), 1.0);
    }

    #[test]
    fn zero_field_is_an_error() {
        let g = make_grid(4.0, 4.0, 10).unwrap();
        let raw = VelocityField::zeros(g);
        assert!(matches!(
            normalize_and_mask(&raw, &[], 0.1),
            Err(Error::ZeroVelocity)
        ));
    }

    #[test]
    fn non_finite_is_rejected() {
        let g = make_grid(4.0, 4.0, 10).unwrap();
        let mut raw = VelocityField::uniform(g, 1.0);
        raw.v[3] = f64::NAN;
        assert!(normalize_and_mask(&raw, &[], 0.1).is_err());
    }
}
