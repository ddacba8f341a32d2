//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures while decoding a NIfTI-1 byte stream.
///
/// Each variant is its own category; `offset` fields are byte offsets into
/// the (decompressed) stream.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NiftiError {
    #[error(
        "stream too short: need {needed} bytes at offset {offset}, only {available} available"
    )]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("bad magic {found:?} at offset {offset}, expected \"n+1\\0\"")]
    BadMagic { offset: usize, found: [u8; 4] },
    #[error("header/image pairs (\"ni1\") are not supported, only single-file \"n+1\" volumes")]
    SplitPairUnsupported,
    #[error("NIfTI-2 headers are not supported")]
    Nifti2Unsupported,
    #[error("sizeof_hdr is {0}, expected 348 in either byte order")]
    BadHeaderSize(i32),
    #[error("unsupported datatype code {code} at offset {offset}")]
    UnsupportedDatatype { code: i16, offset: usize },
    #[error("unsupported dimensions {dim:?} at offset {offset}")]
    UnsupportedDims { dim: [i16; 8], offset: usize },
    #[error("vox_offset {0} is below 352 or not an integral byte position")]
    BadVoxOffset(f32),
    #[error("label value {value} at voxel {voxel} (byte offset {offset}) is outside {{0,1,2,3}}")]
    LabelOutOfRange {
        value: f64,
        voxel: usize,
        offset: usize,
    },
    #[error("non-finite voxel value at voxel {voxel} (byte offset {offset})")]
    NonFiniteVoxel { voxel: usize, offset: usize },
    #[error("failed to decompress gzip stream: {0}")]
    Decompress(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid volume: {0}")]
    InvalidVolume(String),
    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },
    #[error("region nesting violated at voxel {voxel}: {detail}")]
    NestingViolation { voxel: usize, detail: &'static str },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Nifti(#[from] NiftiError),
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_file(self, path: &std::path::Path) -> Self {
        Error::File {
            path: path.display().to_string(),
            source: Box::new(self),
        }
    }
}
