//! Simulation grid, unit conventions and rasterization of level-set geometry.
//!
//! Units: lengths in µm, `c = 1`, frequencies in `c/µm`. Every field in the
//! crate is sampled on the *nodes* of a [`Grid2D`]: a grid with `nx` cells
//! along x has `nx + 1` nodes, centred on the origin, so node `i` sits at
//! `x = (i - nx/2) h`.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::levelset::LevelSetField;

/// Tolerance (in cells) for deciding that a position lies on a grid node.
const ON_GRID_TOL: f64 = 1e-6;

/// Uniform square-cell grid covering the physical domain.
///
/// Two grids compare equal when their discretizations agree (cell counts and
/// resolution); the nominal extents may differ by less than a cell.
#[derive(Debug, Clone, Copy)]
pub struct Grid2D {
    pub extent_x: f64,
    pub extent_y: f64,
    /// Cells per µm.
    pub resolution: u32,
    pub nx: usize,
    pub ny: usize,
}

impl Grid2D {
    pub fn new(extent_x: f64, extent_y: f64, resolution: u32) -> Result<Self> {
        if !(extent_x > 0.0 && extent_y > 0.0) || !extent_x.is_finite() || !extent_y.is_finite() {
            return Err(invalid(format!(
                "grid extents must be positive, got {extent_x} x {extent_y}"
            )));
        }
        if resolution < 4 {
            return Err(invalid(format!(
                "resolution must be at least 4 cells/µm, got {resolution}"
            )));
        }
        let nx = (extent_x * resolution as f64).round() as usize;
        let ny = (extent_y * resolution as f64).round() as usize;
        if nx < 8 || ny < 8 {
            return Err(invalid(format!(
                "grid of {nx} x {ny} cells is too small (need at least 8 per axis)"
            )));
        }
        Ok(Self {
            extent_x,
            extent_y,
            resolution,
            nx,
            ny,
        })
    }

    /// Cell size in µm.
    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    #[inline]
    pub fn nodes_x(&self) -> usize {
        self.nx + 1
    }

    #[inline]
    pub fn nodes_y(&self) -> usize {
        self.ny + 1
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.nodes_x() * self.nodes_y()
    }

    /// Row-major (x fastest) index of node `(i, j)`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nodes_x() + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - self.nx as f64 / 2.0) * self.h()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - self.ny as f64 / 2.0) * self.h()
    }

    /// Half-widths of the node span; all nodes satisfy `|x| <= half_x`.
    pub fn half_span(&self) -> (f64, f64) {
        (
            self.nx as f64 * self.h() / 2.0,
            self.ny as f64 * self.h() / 2.0,
        )
    }

    /// Node indices for a position that must coincide with a grid node.
    pub fn node_at(&self, x: f64, y: f64) -> Result<(usize, usize)> {
        let fi = x / self.h() + self.nx as f64 / 2.0;
        let fj = y / self.h() + self.ny as f64 / 2.0;
        let (ri, rj) = (fi.round(), fj.round());
        if (fi - ri).abs() > ON_GRID_TOL || (fj - rj).abs() > ON_GRID_TOL {
            return Err(invalid(format!(
                "position ({x}, {y}) is not on a grid node (h = {})",
                self.h()
            )));
        }
        if ri < 0.0 || rj < 0.0 || ri > self.nx as f64 || rj > self.ny as f64 {
            return Err(invalid(format!(
                "position ({x}, {y}) lies outside the physical domain"
            )));
        }
        Ok((ri as usize, rj as usize))
    }

    /// Nearest node to an arbitrary position, clamped into the domain.
    pub fn nearest_node(&self, x: f64, y: f64) -> (usize, usize) {
        let fi = (x / self.h() + self.nx as f64 / 2.0).round();
        let fj = (y / self.h() + self.ny as f64 / 2.0).round();
        (
            fi.clamp(0.0, self.nx as f64) as usize,
            fj.clamp(0.0, self.ny as f64) as usize,
        )
    }

    pub fn ensure_same(&self, other: &Grid2D, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{what}: {}x{} @ {} vs {}x{} @ {}",
                self.nx, self.ny, self.resolution, other.nx, other.ny, other.resolution
            )));
        }
        Ok(())
    }
}

impl PartialEq for Grid2D {
    fn eq(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.resolution == other.resolution
    }
}

/// Convenience constructor matching the grid factory operation.
pub fn make_grid(extent_x: f64, extent_y: f64, resolution: u32) -> Result<Grid2D> {
    Grid2D::new(extent_x, extent_y, resolution)
}

/// Fixed unit convention: lengths in µm and `c = 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UnitSystem;

impl UnitSystem {
    /// Frequency `f = 1/λ` in `c/µm`.
    pub fn frequency(wavelength: f64) -> f64 {
        1.0 / wavelength
    }

    /// Angular frequency `ω = 2π/λ`.
    pub fn angular_frequency(wavelength: f64) -> f64 {
        2.0 * PI / wavelength
    }
}

/// Per-node relative permittivity.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialMap {
    pub grid: Grid2D,
    pub eps: Vec<f64>,
}

impl MaterialMap {
    pub fn uniform(grid: Grid2D, eps: f64) -> Self {
        Self {
            grid,
            eps: vec![eps; grid.node_count()],
        }
    }

    pub fn from_values(grid: Grid2D, eps: Vec<f64>) -> Result<Self> {
        if eps.len() != grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "material has {} values, grid has {} nodes",
                eps.len(),
                grid.node_count()
            )));
        }
        if eps.iter().any(|e| !e.is_finite() || *e < 1.0) {
            return Err(invalid("permittivity values must be finite and >= 1"));
        }
        Ok(Self { grid, eps })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.eps[self.grid.index(i, j)]
    }

    /// `Σ (ε - 1) h²`, the integrated permittivity excess over vacuum.
    pub fn excess_permittivity(&self) -> f64 {
        let h = self.grid.h();
        self.eps.iter().map(|e| e - 1.0).sum::<f64>() * h * h
    }
}

/// Blend weight of the inside material for a node with level-set value `phi`.
#[inline]
pub fn fill_fraction(phi: f64, h: f64) -> f64 {
    (0.5 - phi / h).clamp(0.0, 1.0)
}

/// Converts a level-set field into a permittivity raster with a linear
/// fill-fraction blend across the one-cell interface band.
pub fn rasterize(phi: &LevelSetField, eps_in: f64, eps_out: f64) -> Result<MaterialMap> {
    if !(eps_in >= 1.0 && eps_out >= 1.0) || !eps_in.is_finite() || !eps_out.is_finite() {
        return Err(invalid(format!(
            "permittivities must be finite and >= 1, got in = {eps_in}, out = {eps_out}"
        )));
    }
    if phi.phi.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("level-set field"));
    }
    let h = phi.grid.h();
    let eps = phi
        .phi
        .iter()
        .map(|&p| {
            let w = fill_fraction(p, h);
            w * eps_in + (1.0 - w) * eps_out
        })
        .collect();
    Ok(MaterialMap {
        grid: phi.grid,
        eps,
    })
}

/// Rasterizes onto an explicit target grid, rejecting a mismatched level set.
pub fn rasterize_on(
    target: &Grid2D,
    phi: &LevelSetField,
    eps_in: f64,
    eps_out: f64,
) -> Result<MaterialMap> {
    target.ensure_same(&phi.grid, "rasterize")?;
    rasterize(phi, eps_in, eps_out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_cell_counts() {
        let g = make_grid(7.0, 7.0, 20).unwrap();
        assert_eq!((g.nx, g.ny), (140, 140));
        let g = make_grid(1.0, 1.0, 10).unwrap();
        assert_eq!((g.nx, g.ny), (10, 10));
        let g = make_grid(7.0, 7.0, 40).unwrap();
        assert_eq!((g.nx, g.ny), (280, 280));
        assert!((g.h() - 0.025).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(make_grid(0.0, 7.0, 20).is_err());
        assert!(make_grid(7.0, -1.0, 20).is_err());
        assert!(make_grid(7.0, 7.0, 3).is_err());
        assert!(make_grid(0.5, 0.5, 10).is_err());
    }

    #[test]
    fn grid_is_centred_and_nodes_resolve() {
        let g = make_grid(7.0, 7.0, 20).unwrap();
        assert_eq!(g.x(70), 0.0);
        assert!((g.x(0) + 3.5).abs() < 1e-12);
        assert_eq!(g.node_at(-2.0, 0.0).unwrap(), (30, 70));
        assert_eq!(g.node_at(2.0, 0.0).unwrap(), (110, 70));
        assert!(g.node_at(2.01, 0.0).is_err());
        assert!(g.node_at(4.0, 0.0).is_err());
    }

    #[test]
    fn units() {
        assert_eq!(UnitSystem::frequency(2.0), 0.5);
        assert!((UnitSystem::angular_frequency(2.0) - PI).abs() < 1e-15);
    }

    #[test]
    fn rasterize_empty_and_half_fill() {
        let g = make_grid(1.0, 1.0, 10).unwrap();
        let phi = LevelSetField::from_fn(g, |_, _| 1.0);
        let m = rasterize(&phi, 12.0, 1.0).unwrap();
        assert!(m.eps.iter().all(|&e| e == 1.0));

        let phi = LevelSetField::from_fn(g, |_, _| 0.0);
        let m = rasterize(&phi, 12.0, 1.0).unwrap();
        assert!(m.eps.iter().all(|&e| e == 6.5));
    }

    #[test]
    fn rasterize_disc_excess_matches_area() {
        let g = make_grid(7.0, 7.0, 20).unwrap();
        let phi = LevelSetField::from_fn(g, |x, y| (x * x + y * y).sqrt() - 1.0);
        let m = rasterize(&phi, 12.0, 1.0).unwrap();
        let expected = 11.0 * PI;
        let rel = (m.excess_permittivity() - expected).abs() / expected;
        assert!(rel < 0.02, "relative error {rel}");
    }

    #[test]
    fn rasterize_rejects_mismatch_and_bad_eps() {
        let g1 = make_grid(1.0, 1.0, 10).unwrap();
        let g2 = make_grid(1.0, 1.0, 20).unwrap();
        let phi = LevelSetField::from_fn(g1, |_, _| 1.0);
        assert!(matches!(
            rasterize_on(&g2, &phi, 12.0, 1.0),
            Err(Error::GridMismatch(_))
        ));
        assert!(rasterize(&phi, 0.5, 1.0).is_err());
    }
}
