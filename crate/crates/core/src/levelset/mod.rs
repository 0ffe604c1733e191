//! Level-set geometry: signed-distance initialization, Hamilton–Jacobi
//! advection, reinitialization, curvature and velocity post-processing.
//!
//! `Φ < 0` inside material, `Φ > 0` outside, `Φ = 0` on the boundary.

mod advect;
pub mod contour;
mod curvature;
mod padded;
mod reinit;
mod shapes;
mod velocity;

pub use advect::{advect, advect_with, AdvectOptions};
pub use curvature::{constraint_velocity, curvature, ConstraintMode, CurvatureConstraint};
pub use reinit::{reinitialize, reinitialize_with, ReinitOptions};
pub use shapes::{init_shape, ShapeSpec};
pub use velocity::{normalize_and_mask, normalize_on_interface, VelocityField};

use crate::domain::Grid2D;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetField {
    pub grid: Grid2D,
    pub phi: Vec<f64>,
}

impl LevelSetField {
    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut phi = Vec::with_capacity(grid.node_count());
        for j in 0..grid.nodes_y() {
            for i in 0..grid.nodes_x() {
                phi.push(f(grid.x(i), grid.y(j)));
            }
        }
        Self { grid, phi }
    }

    pub fn from_values(grid: Grid2D, phi: Vec<f64>) -> Result<Self> {
        if phi.len() != grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "level set has {} values, grid has {} nodes",
                phi.len(),
                grid.node_count()
            )));
        }
        Ok(Self { grid, phi })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.phi[self.grid.index(i, j)]
    }

    pub fn has_sign_change(&self) -> bool {
        let neg = self.phi.iter().any(|&p| p < 0.0);
        let pos = self.phi.iter().any(|&p| p >= 0.0);
        neg && pos
    }

    /// Number of nodes inside material.
    pub fn inside_count(&self) -> usize {
        self.phi.iter().filter(|&&p| p < 0.0).count()
    }

    pub(crate) fn ensure_finite(&self) -> Result<()> {
        if self.phi.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("level-set field"));
        }
        Ok(())
    }
}
