//! Multi-resolution shape reconstruction of sound-soft acoustic scatterers
//! from phaseless far-field data.

// `!(x > 0.0)` style checks are used deliberately so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bem;
pub mod error;
pub mod mesh;
pub mod mhb;
pub mod recon;
pub mod shapes;
pub mod subdivision;
pub mod vsrm;

pub use error::{Error, Result};
pub use mesh::{ControlMesh, PatchStencil, Vec3};
