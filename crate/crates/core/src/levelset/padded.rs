//! Ghost-padded copy of a nodal field for stencil evaluation.

use crate::domain::Grid2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Extrapolation {
    /// Ghost values copy the nearest boundary node.
    ZeroGradient,
    /// Ghost values continue the boundary slope linearly.
    Linear,
}

pub(crate) struct Padded {
    pub data: Vec<f64>,
    pub width: usize,
    pub ghost: usize,
}

impl Padded {
    pub fn new(grid: &Grid2D, values: &[f64], ghost: usize, mode: Extrapolation) -> Self {
        let (nx, ny) = (grid.nodes_x(), grid.nodes_y());
        let width = nx + 2 * ghost;
        let height = ny + 2 * ghost;
        let mut data = vec![0.0; width * height];
        for j in 0..ny {
            let dst = (j + ghost) * width + ghost;
            data[dst..dst + nx].copy_from_slice(&values[j * nx..(j + 1) * nx]);
        }
        // Rows first along x, then whole ghost rows along y (corners follow).
        for j in ghost..ghost + ny {
            let row = j * width;
            for g in 1..=ghost {
                let (l0, l1) = (data[row + ghost], data[row + ghost + 1]);
                let (r0, r1) = (data[row + ghost + nx - 1], data[row + ghost + nx - 2]);
                let (l, r) = match mode {
                    Extrapolation::ZeroGradient => (l0, r0),
                    Extrapolation::Linear => {
                        (l0 + g as f64 * (l0 - l1), r0 + g as f64 * (r0 - r1))
                    }
                };
                data[row + ghost - g] = l;
                data[row + ghost + nx - 1 + g] = r;
            }
        }
        for g in 1..=ghost {
            for i in 0..width {
                let b0 = data[ghost * width + i];
                let b1 = data[(ghost + 1) * width + i];
                let t0 = data[(ghost + ny - 1) * width + i];
                let t1 = data[(ghost + ny - 2) * width + i];
                let (b, t) = match mode {
                    Extrapolation::ZeroGradient => (b0, t0),
                    Extrapolation::Linear => {
                        (b0 + g as f64 * (b0 - b1), t0 + g as f64 * (t0 - t1))
                    }
                };
                data[(ghost - g) * width + i] = b;
                data[(ghost + ny - 1 + g) * width + i] = t;
            }
        }
        Self { data, width, ghost }
    }

    /// Flat index of interior node `(i, j)`.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        (j + self.ghost) * self.width + i + self.ghost
    }
}
