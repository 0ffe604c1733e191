//! Flat binary snapshot container shared by every grid-valued artifact.
//!
//! Layout (little-endian): 4-byte magic, `u32` version (= 1), `u32` sample
//! count along x, `u32` sample count along y, `f64` node spacing `h`,
//! followed by `count_x * count_y * components` `f64` values in row-major
//! order (x fastest). The grid is centred on the origin.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::domain::{Grid2D, MaterialMap};
use crate::error::{Error, Result};
use crate::fdtd::ComplexFieldMap;
use crate::levelset::{LevelSetField, VelocityField};

pub const HEADER_LEN: usize = 24;
pub const VERSION: u32 = 1;

/// Payload kind, identified by the magic bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Material,
    Field,
    LevelSet,
    Velocity,
}

impl Kind {
    pub fn magic(self) -> &'static [u8; 4] {
        match self {
            Kind::Material => b"GSHM",
            Kind::Field => b"GSHF",
            Kind::LevelSet => b"GSHL",
            Kind::Velocity => b"GSHV",
        }
    }

    pub fn from_magic(m: &[u8]) -> Option<Self> {
        match m {
            b"GSHM" => Some(Kind::Material),
            b"GSHF" => Some(Kind::Field),
            b"GSHL" => Some(Kind::LevelSet),
            b"GSHV" => Some(Kind::Velocity),
            _ => None,
        }
    }

    /// Values stored per node.
    pub fn components(self) -> usize {
        match self {
            Kind::Field => 4,
            _ => 1,
        }
    }
}

/// A decoded container: header metadata plus raw values.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub kind: Kind,
    pub count_x: usize,
    pub count_y: usize,
    pub h: f64,
    pub values: Vec<f64>,
}

impl Snapshot {
    /// Reconstructs the grid described by the header (domain centred on origin).
    pub fn grid(&self) -> Result<Grid2D> {
        if self.count_x < 2 || self.count_y < 2 || !(self.h > 0.0) {
            return Err(Error::Format("degenerate grid in header".into()));
        }
        let res = (1.0 / self.h).round();
        if (res * self.h - 1.0).abs() > 1e-9 {
            return Err(Error::Format(format!(
                "spacing {} is not 1/integer",
                self.h
            )));
        }
        let nx = self.count_x - 1;
        let ny = self.count_y - 1;
        let grid = Grid2D::new(nx as f64 * self.h, ny as f64 * self.h, res as u32)
            .map_err(|e| Error::Format(e.to_string()))?;
        if grid.nx != nx || grid.ny != ny {
            return Err(Error::Format("header counts inconsistent with spacing".into()));
        }
        Ok(grid)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.values.len());
        out.extend_from_slice(self.kind.magic());
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.count_x as u32).to_le_bytes());
        out.extend_from_slice(&(self.count_y as u32).to_le_bytes());
        out.extend_from_slice(&self.h.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!(
                "file is {} bytes, shorter than the {HEADER_LEN}-byte header",
                bytes.len()
            )));
        }
        let kind = Kind::from_magic(&bytes[0..4]).ok_or_else(|| {
            Error::Format(format!("unknown magic {:?}", String::from_utf8_lossy(&bytes[0..4])))
        })?;
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let count_x = u32_at(8) as usize;
        let count_y = u32_at(12) as usize;
        let h = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let n = count_x * count_y * kind.components();
        let body = &bytes[HEADER_LEN..];
        if body.len() != 8 * n {
            return Err(Error::Format(format!(
                "expected {} payload bytes, found {}",
                8 * n,
                body.len()
            )));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            kind,
            count_x,
            count_y,
            h,
            values,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.encode())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::decode(&fs::read(path)?)
    }

    /// Plain-text grid dump: `x,y,<components>` per node, header row first.
    pub fn to_csv(&self) -> Result<String> {
        let grid = self.grid()?;
        let header = match self.kind {
            Kind::Material => "x,y,eps",
            Kind::Field => "x,y,re_ex,im_ex,re_ey,im_ey",
            Kind::LevelSet => "x,y,phi",
            Kind::Velocity => "x,y,v",
        };
        let c = self.kind.components();
        let mut s = String::with_capacity(self.values.len() * 24);
        s.push_str(header);
        s.push('\n');
        for j in 0..grid.nodes_y() {
            for i in 0..grid.nodes_x() {
                let k = grid.index(i, j) * c;
                s.push_str(&format!("{},{}", grid.x(i), grid.y(j)));
                for v in &self.values[k..k + c] {
                    s.push_str(&format!(",{v}"));
                }
                s.push('\n');
            }
        }
        Ok(s)
    }

    fn expect(&self, kind: Kind) -> Result<Grid2D> {
        if self.kind != kind {
            return Err(Error::Format(format!(
                "expected {:?} snapshot, found {:?}",
                kind, self.kind
            )));
        }
        self.grid()
    }

    fn scalar(kind: Kind, grid: &Grid2D, values: Vec<f64>) -> Self {
        Self {
            kind,
            count_x: grid.nodes_x(),
            count_y: grid.nodes_y(),
            h: grid.h(),
            values,
        }
    }
}

impl From<&MaterialMap> for Snapshot {
    fn from(m: &MaterialMap) -> Self {
        Snapshot::scalar(Kind::Material, &m.grid, m.eps.clone())
    }
}

impl From<&LevelSetField> for Snapshot {
    fn from(p: &LevelSetField) -> Self {
        Snapshot::scalar(Kind::LevelSet, &p.grid, p.phi.clone())
    }
}

impl From<&VelocityField> for Snapshot {
    fn from(v: &VelocityField) -> Self {
        Snapshot::scalar(Kind::Velocity, &v.grid, v.v.clone())
    }
}

impl From<&ComplexFieldMap> for Snapshot {
    fn from(f: &ComplexFieldMap) -> Self {
        let values = f
            .values
            .iter()
            .flat_map(|[ex, ey]| [ex.re, ex.im, ey.re, ey.im])
            .collect();
        Snapshot {
            kind: Kind::Field,
            count_x: f.grid.nodes_x(),
            count_y: f.grid.nodes_y(),
            h: f.grid.h(),
            values,
        }
    }
}

impl TryFrom<&Snapshot> for LevelSetField {
    type Error = Error;
    fn try_from(s: &Snapshot) -> Result<Self> {
        let grid = s.expect(Kind::LevelSet)?;
        if s.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite level-set value".into()));
        }
        Ok(LevelSetField {
            grid,
            phi: s.values.clone(),
        })
    }
}

impl TryFrom<&Snapshot> for MaterialMap {
    type Error = Error;
    fn try_from(s: &Snapshot) -> Result<Self> {
        let grid = s.expect(Kind::Material)?;
        MaterialMap::from_values(grid, s.values.clone())
            .map_err(|e| Error::Format(e.to_string()))
    }
}

impl TryFrom<&Snapshot> for VelocityField {
    type Error = Error;
    fn try_from(s: &Snapshot) -> Result<Self> {
        let grid = s.expect(Kind::Velocity)?;
        Ok(VelocityField {
            grid,
            v: s.values.clone(),
        })
    }
}

impl TryFrom<&Snapshot> for ComplexFieldMap {
    type Error = Error;
    fn try_from(s: &Snapshot) -> Result<Self> {
        let grid = s.expect(Kind::Field)?;
        let values = s
            .values
            .chunks_exact(4)
            .map(|c| [Complex64::new(c[0], c[1]), Complex64::new(c[2], c[3])])
            .collect();
        // Frequency is not stored in the container.
        Ok(ComplexFieldMap {
            grid,
            values,
            frequency: f64::NAN,
            edges: None,
        })
    }
}
