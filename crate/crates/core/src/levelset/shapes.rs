use crate::domain::Grid2D;
use crate::error::{invalid, Result};

use super::LevelSetField;

/// Initial geometry. Rectangles are axis-aligned; all lengths in µm.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeSpec {
    Cylinder {
        center: (f64, f64),
        radius: f64,
    },
    /// Rectangle of `width` (x) by `height` (y), e.g. a vertical wall
    /// between the dipoles.
    Wall {
        center: (f64, f64),
        width: f64,
        height: f64,
    },
    /// Single horizontal slab of `length` (x) by `thickness` (y).
    Waveguide {
        center: (f64, f64),
        length: f64,
        thickness: f64,
    },
    /// Two horizontal slabs mirrored about `center`, with `gap` between
    /// their inner faces.
    TwoBars {
        center: (f64, f64),
        length: f64,
        thickness: f64,
        gap: f64,
    },
    /// Pre-computed signed-distance raster.
    Custom(LevelSetField),
}

fn circle_sdf(x: f64, y: f64, c: (f64, f64), r: f64) -> f64 {
    (x - c.0).hypot(y - c.1) - r
}

/// Exact signed distance to an axis-aligned box with half-sizes `(hx, hy)`.
fn box_sdf(x: f64, y: f64, c: (f64, f64), hx: f64, hy: f64) -> f64 {
    let qx = (x - c.0).abs() - hx;
    let qy = (y - c.1).abs() - hy;
    let outside = qx.max(0.0).hypot(qy.max(0.0));
    let inside = qx.max(qy).min(0.0);
    outside + inside
}

impl ShapeSpec {
    /// Axis-aligned bounding box `(xmin, xmax, ymin, ymax)` of the interior.
    fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let rect = |c: (f64, f64), hx: f64, hy: f64| (c.0 - hx, c.0 + hx, c.1 - hy, c.1 + hy);
        match *self {
            ShapeSpec::Cylinder { center, radius } => Some(rect(center, radius, radius)),
            ShapeSpec::Wall {
                center,
                width,
                height,
            } => Some(rect(center, width / 2.0, height / 2.0)),
            ShapeSpec::Waveguide {
                center,
                length,
                thickness,
            } => Some(rect(center, length / 2.0, thickness / 2.0)),
            ShapeSpec::TwoBars {
                center,
                length,
                thickness,
                gap,
            } => Some(rect(center, length / 2.0, gap / 2.0 + thickness)),
            ShapeSpec::Custom(_) => None,
        }
    }

    fn validate(&self, grid: &Grid2D) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("shape parameter {name} must be positive, got {v}")))
            }
        };
        match self {
            ShapeSpec::Cylinder { radius, .. } => positive("radius", *radius)?,
            ShapeSpec::Wall { width, height, .. } => {
                positive("width", *width)?;
                positive("height", *height)?;
            }
            ShapeSpec::Waveguide {
                length, thickness, ..
            } => {
                positive("length", *length)?;
                positive("thickness", *thickness)?;
            }
            ShapeSpec::TwoBars {
                length,
                thickness,
                gap,
                ..
            } => {
                positive("length", *length)?;
                positive("thickness", *thickness)?;
                positive("gap", *gap)?;
            }
            ShapeSpec::Custom(phi) => {
                grid.ensure_same(&phi.grid, "custom shape")?;
                phi.ensure_finite()?;
            }
        }
        if let Some((x0, x1, y0, y1)) = self.bounds() {
            let (hx, hy) = grid.half_span();
            // The boundary must stay at least one cell clear of the domain edge.
            let m = grid.h();
            if x0 <= -hx + m || x1 >= hx - m || y0 <= -hy + m || y1 >= hy - m {
                return Err(invalid(format!(
                    "shape [{x0}, {x1}] x [{y0}, {y1}] touches the domain boundary"
                )));
            }
        }
        Ok(())
    }

    fn distance(&self, x: f64, y: f64) -> f64 {
        match *self {
            ShapeSpec::Cylinder { center, radius } => circle_sdf(x, y, center, radius),
            ShapeSpec::Wall {
                center,
                width,
                height,
            } => box_sdf(x, y, center, width / 2.0, height / 2.0),
            ShapeSpec::Waveguide {
                center,
                length,
                thickness,
            } => box_sdf(x, y, center, length / 2.0, thickness / 2.0),
            ShapeSpec::TwoBars {
                center,
                length,
                thickness,
                gap,
            } => {
                let off = gap / 2.0 + thickness / 2.0;
                let upper = box_sdf(x, y, (center.0, center.1 + off), length / 2.0, thickness / 2.0);
                let lower = box_sdf(x, y, (center.0, center.1 - off), length / 2.0, thickness / 2.0);
                upper.min(lower)
            }
            ShapeSpec::Custom(_) => unreachable!("custom shapes are rasters"),
        }
    }
}

/// Signed-distance level set for an initial shape.
pub fn init_shape(spec: &ShapeSpec, grid: &Grid2D) -> Result<LevelSetField> {
    spec.validate(grid)?;
    let phi = match spec {
        ShapeSpec::Custom(phi) => phi.clone(),
        _ => LevelSetField::from_fn(*grid, |x, y| spec.distance(x, y)),
    };
    if phi.inside_count() == 0 {
        return Err(invalid("shape has no interior nodes on this grid"));
    }
    if phi.inside_count() == phi.phi.len() {
        return Err(invalid("shape fills the entire domain"));
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn cylinder_distances() {
        let g = make_grid(7.0, 7.0, 20).unwrap();
        let spec = ShapeSpec::Cylinder {
            center: (0.0, 0.0),
            radius: 1.0,
        };
        let phi = init_shape(&spec, &g).unwrap();
        let (i0, j0) = g.node_at(0.0, 0.0).unwrap();
        assert!((phi.at(i0, j0) + 1.0).abs() < 1e-12);
        let (i2, j2) = g.node_at(2.0, 0.0).unwrap();
        assert!((phi.at(i2, j2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cylinder_area_by_cell_count() {
        let g = make_grid(7.0, 7.0, 20).unwrap();
        let spec = ShapeSpec::Cylinder {
            center: (0.0, 0.0),
            radius: 1.0,
        };
        let phi = init_shape(&spec, &g).unwrap();
        let area = phi.inside_count() as f64 * g.h() * g.h();
        assert!((area - PI).abs() / PI < 0.02, "area {area}");
    }

    #[test]
    fn two_bars_union() {
        let g = make_grid(7.0, 7.0, 20).unwrap();
        let spec = ShapeSpec::TwoBars {
            center: (0.0, 0.0),
            length: 5.0,
            thickness: 0.5,
            gap: 1.0,
        };
        let phi = init_shape(&spec, &g).unwrap();
        for y in [0.75, -0.75, 0.55, -0.95] {
            let (i, j) = g.node_at(1.0, y).unwrap();
            assert!(phi.at(i, j) < 0.0, "y = {y}");
        }
        let (i, j) = g.node_at(0.0, 0.0).unwrap();
        assert!((phi.at(i, j) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn box_distance_is_exact_outside_corner() {
        let d = box_sdf(2.0, 2.0, (0.0, 0.0), 1.0, 1.0);
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(box_sdf(0.0, 0.0, (0.0, 0.0), 1.0, 0.5), -0.5);
    }

    #[test]
    fn rejects_shapes_touching_boundary() {
        let g = make_grid(7.0, 7.0, 20).unwrap();
        let spec = ShapeSpec::Cylinder {
            center: (2.6, 0.0),
            radius: 1.0,
        };
        assert!(init_shape(&spec, &g).is_err());
        let spec = ShapeSpec::Wall {
            center: (0.0, 0.0),
            width: 0.5,
            height: 7.0,
        };
        assert!(init_shape(&spec, &g).is_err());
        let spec = ShapeSpec::Cylinder {
            center: (0.0, 0.0),
            radius: -1.0,
        };
        assert!(init_shape(&spec, &g).is_err());
    }
}
