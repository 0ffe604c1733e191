//! Marching-squares extraction of the zero contour.
//!
//! Corners with `Φ < 0` are inside. Saddle cells are disambiguated by the
//! mean of the four corner values.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::LevelSetField;

/// Grid edge: `(vertical, i, j)`; a horizontal edge joins `(i,j)-(i+1,j)`,
/// a vertical one `(i,j)-(i,j+1)`.
pub type EdgeId = (bool, usize, usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub edge: EdgeId,
    pub point: (f64, f64),
    /// Fraction along the edge from its first node.
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub cell: (usize, usize),
    pub a: Crossing,
    pub b: Crossing,
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.a.point.0 - self.b.point.0).hypot(self.a.point.1 - self.b.point.1)
    }
}

fn crossing(phi: &LevelSetField, edge: EdgeId) -> Option<Crossing> {
    let g = &phi.grid;
    let (vertical, i, j) = edge;
    let (i2, j2) = if vertical { (i, j + 1) } else { (i + 1, j) };
    let (pa, pb) = (phi.at(i, j), phi.at(i2, j2));
    if (pa < 0.0) == (pb < 0.0) {
        return None;
    }
    let t = pa / (pa - pb);
    let (xa, ya) = (g.x(i), g.y(j));
    let (xb, yb) = (g.x(i2), g.y(j2));
    Some(Crossing {
        edge,
        point: (xa + t * (xb - xa), ya + t * (yb - ya)),
        t,
    })
}

/// Cell corner values in counter-clockwise order from the lower left, and
/// the edges between consecutive corners.
fn cell_layout(i: usize, j: usize) -> ([(usize, usize); 4], [EdgeId; 4]) {
    (
        [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)],
        [
            (false, i, j),
            (true, i + 1, j),
            (false, i, j + 1),
            (true, i, j),
        ],
    )
}

fn centre_inside(phi: &LevelSetField, corners: &[(usize, usize); 4]) -> bool {
    corners.iter().map(|&(a, b)| phi.at(a, b)).sum::<f64>() < 0.0
}

/// All boundary segments, one or two per cut cell.
pub fn segments(phi: &LevelSetField) -> Vec<Segment> {
    let g = &phi.grid;
    let mut out = Vec::new();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (corners, edges) = cell_layout(i, j);
            let inside: Vec<bool> = corners.iter().map(|&(a, b)| phi.at(a, b) < 0.0).collect();
            let cuts: Vec<Option<Crossing>> = edges.iter().map(|&e| crossing(phi, e)).collect();
            let n_cuts = cuts.iter().filter(|c| c.is_some()).count();
            match n_cuts {
                0 => {}
                2 => {
                    let mut it = cuts.iter().flatten();
                    let a = *it.next().unwrap();
                    let b = *it.next().unwrap();
                    out.push(Segment { cell: (i, j), a, b });
                }
                4 => {
                    let c: Vec<Crossing> = cuts.into_iter().flatten().collect();
                    // Edge k runs from corner k to corner k+1. Pair the two
                    // edges around whichever diagonal is cut off.
                    let isolate_odd = centre_inside(phi, &corners) == inside[0];
                    let pairs = if isolate_odd {
                        // corners 1 and 3 are separated from the centre
                        [(0, 1), (2, 3)]
                    } else {
                        [(3, 0), (1, 2)]
                    };
                    for (p, q) in pairs {
                        out.push(Segment {
                            cell: (i, j),
                            a: c[p],
                            b: c[q],
                        });
                    }
                }
                _ => unreachable!("a cell has an even number of sign changes"),
            }
        }
    }
    out
}

/// Total contour length.
pub fn perimeter(phi: &LevelSetField) -> f64 {
    segments(phi).iter().map(Segment::length).sum()
}

fn shoelace(poly: &[(f64, f64)]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for k in 0..n {
        let (x0, y0) = poly[k];
        let (x1, y1) = poly[(k + 1) % n];
        s += x0 * y1 - x1 * y0;
    }
    0.5 * s.abs()
}

/// Area of `{Φ < 0}` with the boundary linearly interpolated in each cell.
pub fn enclosed_area(phi: &LevelSetField) -> f64 {
    let g = &phi.grid;
    let mut area = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (corners, edges) = cell_layout(i, j);
            let inside: Vec<bool> = corners.iter().map(|&(a, b)| phi.at(a, b) < 0.0).collect();
            let count = inside.iter().filter(|&&b| b).count();
            if count == 0 {
                continue;
            }
            let pos = |k: usize| (g.x(corners[k].0), g.y(corners[k].1));
            let cut = |k: usize| crossing(phi, edges[k]).map(|c| c.point);
            if count == 4 {
                area += g.h() * g.h();
                continue;
            }
            let saddle = count == 2 && inside[0] == inside[2];
            if saddle && centre_inside(phi, &corners) != inside[0] {
                // Inside corners are cut off individually: two triangles.
                for k in (0..4).filter(|&k| inside[k]) {
                    let prev = (k + 3) % 4;
                    area += shoelace(&[pos(k), cut(k).unwrap(), cut(prev).unwrap()]);
                }
                continue;
            }
            let mut poly = Vec::with_capacity(6);
            for k in 0..4 {
                if inside[k] {
                    poly.push(pos(k));
                }
                if let Some(p) = cut(k) {
                    poly.push(p);
                }
            }
            area += shoelace(&poly);
        }
    }
    area
}

/// Segments chained into polylines. Closed loops repeat their first point.
pub fn polylines(phi: &LevelSetField) -> Vec<Vec<(f64, f64)>> {
    let segs = segments(phi);
    let mut by_edge: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (k, s) in segs.iter().enumerate() {
        by_edge.entry(s.a.edge).or_default().push(k);
        by_edge.entry(s.b.edge).or_default().push(k);
    }
    let mut used = vec![false; segs.len()];
    let other = |k: usize, e: EdgeId| -> Option<usize> {
        by_edge[&e].iter().copied().find(|&m| m != k)
    };
    let mut lines = Vec::new();
    // Open chains start at edges touched by one segment (domain boundary).
    let mut starts: Vec<usize> = (0..segs.len())
        .filter(|&k| by_edge[&segs[k].a.edge].len() == 1 || by_edge[&segs[k].b.edge].len() == 1)
        .collect();
    starts.extend(0..segs.len());
    for start in starts {
        if used[start] {
            continue;
        }
        let s = segs[start];
        let (first, mut tail) = if by_edge[&s.a.edge].len() == 1 {
            (s.a, s.b)
        } else if by_edge[&s.b.edge].len() == 1 {
            (s.b, s.a)
        } else {
            (s.a, s.b)
        };
        used[start] = true;
        let mut line = vec![first.point, tail.point];
        let mut cur = start;
        while let Some(next) = other(cur, tail.edge) {
            if used[next] {
                break;
            }
            used[next] = true;
            let n = segs[next];
            tail = if n.a.edge == tail.edge { n.b } else { n.a };
            line.push(tail.point);
            cur = next;
        }
        lines.push(line);
    }
    lines
}

/// CSV of polylines: `contour,x,y`, one row per vertex.
pub fn polylines_csv(phi: &LevelSetField) -> String {
    let mut s = String::from("contour,x,y\n");
    for (c, line) in polylines(phi).iter().enumerate() {
        for &(x, y) in line {
            let _ = writeln!(s, "{c},{x:.9},{y:.9}");
        }
    }
    s
}

/// Nodal values linearly interpolated at every interface crossing.
pub fn sample_on_interface(phi: &LevelSetField, values: &[f64]) -> Vec<((f64, f64), f64)> {
    let g = &phi.grid;
    let mut out = Vec::new();
    for j in 0..g.nodes_y() {
        for i in 0..g.nodes_x() {
            for vertical in [false, true] {
                if (!vertical && i == g.nx) || (vertical && j == g.ny) {
                    continue;
                }
                if let Some(c) = crossing(phi, (vertical, i, j)) {
                    let (i2, j2) = if vertical { (i, j + 1) } else { (i + 1, j) };
                    let v = values[g.index(i, j)] * (1.0 - c.t) + values[g.index(i2, j2)] * c.t;
                    out.push((c.point, v));
                }
            }
        }
    }
    out
}

/// `∫ v² ds` along the contour (trapezoid per segment). Multiplied by the
/// step length this is the first-order merit change of a normalized step.
pub fn interface_integral_sq(phi: &LevelSetField, v: &[f64]) -> f64 {
    let g = &phi.grid;
    let at = |c: &Crossing| {
        let (vertical, i, j) = c.edge;
        let (i2, j2) = if vertical { (i, j + 1) } else { (i + 1, j) };
        v[g.index(i, j)] * (1.0 - c.t) + v[g.index(i2, j2)] * c.t
    };
    segments(phi)
        .iter()
        .map(|s| {
            let (va, vb) = (at(&s.a), at(&s.b));
            0.5 * (va * va + vb * vb) * s.length()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn circle_perimeter_and_area() {
        let g = make_grid(4.0, 4.0, 20).unwrap();
        let phi = LevelSetField::from_fn(g, |x, y| x.hypot(y) - 1.0);
        assert!((perimeter(&phi) - 2.0 * PI).abs() / (2.0 * PI) < 5e-3);
        assert!((enclosed_area(&phi) - PI).abs() / PI < 5e-3);
        let lines = polylines(&phi);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].first(), lines[0].last());
    }

    #[test]
    fn square_area_is_exact() {
        let g = make_grid(4.0, 4.0, 10).unwrap();
        let phi = LevelSetField::from_fn(g, |x, y| x.abs().max(y.abs()) - 0.55);
        // Each corner cell is cut diagonally: a 0.05 x 0.05 triangle is lost.
        let corner = 0.5 * 0.05 * 0.05;
        assert!((enclosed_area(&phi) - (1.21 - 4.0 * corner)).abs() < 1e-12);
        let sides = 4.0 * 1.0 + 4.0 * 0.05 * 2f64.sqrt();
        assert!((perimeter(&phi) - sides).abs() < 1e-12);
    }

    #[test]
    fn saddle_cells_are_consistent() {
        let g = make_grid(2.0, 2.0, 5).unwrap();
        // Checkerboard-like field x*y gives saddles at the origin.
        let phi = LevelSetField::from_fn(g, |x, y| x * y + 0.01);
        let segs = segments(&phi);
        assert!(!segs.is_empty());
        for s in &segs {
            assert!(s.length() > 0.0);
        }
        let neg = LevelSetField::from_fn(g, |x, y| -(x * y + 0.01));
        let total = g.extent_x * g.extent_y;
        assert!((enclosed_area(&phi) + enclosed_area(&neg) - total).abs() < 1e-9);
    }

    #[test]
    fn two_disjoint_loops() {
        let g = make_grid(6.0, 4.0, 10).unwrap();
        let phi = LevelSetField::from_fn(g, |x, y| {
            ((x - 1.5).hypot(y) - 0.7).min((x + 1.5).hypot(y) - 0.7)
        });
        assert_eq!(polylines(&phi).len(), 2);
        assert!(polylines_csv(&phi).starts_with("contour,x,y\n"));
    }

    #[test]
    fn interface_integral_of_unit_field_is_perimeter() {
        let g = make_grid(4.0, 4.0, 10).unwrap();
        let phi = LevelSetField::from_fn(g, |x, y| x.hypot(y) - 1.0);
        let ones = vec![1.0; g.node_count()];
        assert!((interface_integral_sq(&phi, &ones) - perimeter(&phi)).abs() < 1e-12);
    }
}
