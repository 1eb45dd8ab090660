//! Editing trained models: deformation of the proxy, boolean fields over
//! samples, two-model blending and multi-instance composition.

pub mod blend;
pub mod boolean;
pub mod compose;
pub mod deform;
pub mod script;

use thiserror::Error;

use crate::geometry::GeometryError;

pub use blend::{blend_image, blend_ray};
pub use boolean::{
    boolean_status, render_boolean_image, render_with_boolean, BoolOp, BooleanField, FieldSample, ImageMask, DEFAULT_EPS,
};
pub use compose::{compose_image, compose_ray, Affine, CompositeScene, Instance};
pub use deform::{deform, interpolate_vertices};
pub use script::{parse_compose, parse_script, EditCommand, InstanceSpec, LeafSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EditError {
    #[error("expected {expected} vertices, got {got}")]
    VertexCount { expected: usize, got: usize },
    #[error("deformation inverts tets {0:?}")]
    Inverted(Vec<usize>),
    #[error(transparent)]
    Geometry(GeometryError),
    #[error("transform is not invertible")]
    SingularTransform,
    #[error("field references model {0}, only {1} given")]
    MissingModel(usize, usize),
    #[error("{0}")]
    Invalid(String),
}

impl From<GeometryError> for EditError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::VertexCountMismatch { expected, got } => EditError::VertexCount { expected, got },
            GeometryError::Inverted { tets } => EditError::Inverted(tets),
            e => EditError::Geometry(e),
        }
    }
}
