//! Tetrahedral proxy meshes: construction, barycentric coordinates, point
//! location and ray traversal.

mod bary;
pub mod grid;
mod locate;
mod mesh;
mod overlap;
mod shapes;
mod traverse;

use thiserror::Error;

pub use bary::Bary4;
pub use grid::Aabb;
pub use locate::INSIDE_TOL;
pub use mesh::{Face, TetMesh, DEGENERATE_VOLUME_TOL, LOCAL_FACES};
pub use overlap::tets_overlap;
pub use traverse::MIN_SEGMENT_LENGTH;

pub type Vec3 = nalgebra::Vector3<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("mesh has no tetrahedra")]
    Empty,
    #[error("tet {tet} references vertex {index}, mesh has {num_vertices}")]
    IndexOutOfRange {
        tet: usize,
        index: usize,
        num_vertices: usize,
    },
    #[error("tet {tet} is degenerate (signed volume {volume:e})")]
    Degenerate { tet: usize, volume: f64 },
    #[error("tet index {tet} out of range")]
    TetOutOfRange { tet: usize },
    #[error("face {verts:?} is shared by more than two tets")]
    NonManifoldFace { verts: [usize; 3] },
    #[error("expected {expected} vertices, got {got}")]
    VertexCountMismatch { expected: usize, got: usize },
    #[error("inverted tets after deformation: {tets:?}")]
    Inverted { tets: Vec<usize> },
    #[error("non-finite vertex coordinate")]
    NonFinite,
    #[error("ray direction is not unit length (|d| = {norm})")]
    NonUnitDirection { norm: f64 },
}

/// A ray `origin + t * dir` with unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

impl Ray {
    pub fn new(origin: Vec3, dir: Vec3) -> Result<Self, GeometryError> {
        let norm = dir.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(GeometryError::NonUnitDirection { norm });
        }
        Ok(Ray { origin, dir })
    }

    /// Normalises `dir`; panics on a zero direction.
    pub fn through(origin: Vec3, dir: Vec3) -> Self {
        let n = dir.norm();
        assert!(n > 0.0, "zero ray direction");
        Ray { origin, dir: dir / n }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

/// One ray-tetrahedron crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetSegment {
    pub tet: usize,
    pub t_in: f64,
    pub t_out: f64,
    pub bary_in: Bary4,
    pub bary_out: Bary4,
}

impl TetSegment {
    /// Barycentric weights at fraction `alpha` of the way from entry to exit.
    pub fn bary_at(&self, alpha: f64) -> Bary4 {
        self.bary_in.lerp(&self.bary_out, alpha)
    }

    pub fn t_at(&self, alpha: f64) -> f64 {
        self.t_in + alpha * (self.t_out - self.t_in)
    }

    /// Manhattan length of the crossing in barycentric space.
    pub fn l1_length(&self) -> f64 {
        self.bary_in.l1_distance(&self.bary_out)
    }
}
