//! File formats: text meshes, deformation frames and cameras, binary PPM
//! images, the `NIMP01` checkpoint container, dataset directories and
//! key-value configuration files.

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod ppm;
pub mod text;

use thiserror::Error;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use dataset::{load_dataset, save_dataset};
pub use ppm::{decode_ppm, encode_ppm, read_ppm, write_png, write_ppm};
pub use text::{
    parse_cameras, parse_frame, parse_tetmesh, read_cameras, read_frame, read_tetmesh, write_cameras, write_frame,
    write_tetmesh,
};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl FormatError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        FormatError::Parse { line, msg: msg.into() }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FormatError::Invalid(msg.into())
    }
}

pub(crate) fn read_file(path: &std::path::Path) -> Result<Vec<u8>, FormatError> {
    std::fs::read(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn read_text(path: &std::path::Path) -> Result<String, FormatError> {
    let bytes = read_file(path)?;
    String::from_utf8(bytes).map_err(|_| FormatError::invalid(format!("{}: not valid UTF-8", path.display())))
}

pub(crate) fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<(), FormatError> {
    std::fs::write(path, bytes).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Non-empty lines with `#` comments removed, paired with 1-based numbers.
pub fn content_lines(s: &str) -> impl Iterator<Item = (usize, &str)> {
    s.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub fn parse_f64(tok: &str, line: usize) -> Result<f64, FormatError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| FormatError::parse(line, format!("expected a number, got '{tok}'")))?;
    if !v.is_finite() {
        return Err(FormatError::parse(line, format!("non-finite number '{tok}'")));
    }
    Ok(v)
}

pub(crate) fn parse_usize(tok: &str, line: usize) -> Result<usize, FormatError> {
    tok.parse()
        .map_err(|_| FormatError::parse(line, format!("expected a non-negative integer, got '{tok}'")))
}
