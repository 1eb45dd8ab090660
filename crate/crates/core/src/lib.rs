//! Neural impostors: an explicit tetrahedral proxy mesh whose interior
//! radiance field lives in per-tetrahedron barycentric hash grids.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: tetrahedral meshes, barycentric coordinates, point
//!   location and ray traversal.
//! - [`sampling`]: barycentric step sampling along rays.
//! - [`encoding`]: 4D multiresolution hash encoding and spherical harmonics.
//! - [`decoders`]: the density and radiance MLPs with reverse-mode gradients.
//! - [`model`]: the trainable [`ImpostorModel`](model::ImpostorModel).
//! - [`rendering`]: volume rendering in the Manhattan barycentric measure.
//! - [`training`]: oracle scenes, the optimiser loop and local retraining.
//! - [`editing`]: deformation, boolean fields, blending and composition.
//! - [`io`]: text and binary file formats.

pub mod decoders;
pub mod editing;
pub mod encoding;
pub mod geometry;
pub mod io;
pub mod model;
pub mod parallel;
pub mod rendering;
pub mod sampling;
pub mod training;

mod error;

pub use error::{Error, Result};
pub use geometry::{Bary4, Ray, TetMesh, TetSegment, Vec3};
pub use model::{ImpostorModel, ModelConfig};
