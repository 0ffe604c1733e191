//! Level-set shape optimization of 2D dielectric environments, driven by
//! a Green's-tensor merit function computed with an in-crate FDTD solver.

pub mod config;
pub mod container;
pub mod domain;
pub mod error;
pub mod fdtd;
pub mod greens;
pub mod levelset;
pub mod merit;
pub mod optimizer;

pub use error::{Error, Result};
