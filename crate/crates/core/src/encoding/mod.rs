//! Position and direction encodings.
//!
//! Positions are encoded per tetrahedron on a 4D grid over the barycentric
//! weights. Every level stores its corner features in a slice of that
//! tetrahedron's table, addressed densely when the level fits and hashed
//! otherwise. Directions use real spherical harmonics.

mod layout;
mod sh;
mod table;

use thiserror::Error;

pub use layout::{level_resolutions, HashLayout, BASE_RESOLUTION, DEFAULT_MAX_RESOLUTION, MIN_PER_TET_LOG2};
pub use sh::{encode_direction, sh_basis, DirFeature, MAX_SH_DEGREE};
pub use table::{encode_position, encode_position_backward, encode_position_into, FeatureTable, PosFeature};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncodingError {
    #[error("invalid hash layout: {0}")]
    InvalidLayout(String),
    #[error("{tet_count} tets x 2^{per_tet_log2} entries exceeds twice the 2^{global_log2} budget")]
    BudgetExceeded {
        tet_count: usize,
        per_tet_log2: u32,
        global_log2: u32,
    },
    #[error("spherical harmonic degree must be in 1..=4, got {0}")]
    InvalidDegree(usize),
    #[error("direction is not unit length (|d| = {0})")]
    NonUnitDirection(f64),
    #[error("expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
}
