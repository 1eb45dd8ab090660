use thiserror::Error;

use crate::decoders::DecoderError;
use crate::editing::EditError;
use crate::encoding::EncodingError;
use crate::geometry::GeometryError;
use crate::io::FormatError;
use crate::rendering::RenderError;
use crate::sampling::SamplingError;
use crate::training::TrainError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Crate-level error, wrapping the per-module error types.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Edit(#[from] EditError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

impl Error {
    /// True for failures caused by non-finite numbers during optimisation.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Train(TrainError::Diverged { .. }))
            || matches!(self, Error::Decoder(DecoderError::NonFinite))
    }
}
