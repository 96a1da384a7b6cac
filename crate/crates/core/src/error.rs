use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fewer points than clusters ({points} < {clusters})")]
    TooFewPoints { points: usize, clusters: usize },

    #[error("marker exceeds mask at pixel {0}")]
    MarkerAboveMask(usize),

    #[error("marker is below mask at pixel {0}")]
    MarkerBelowMask(usize),

    #[error("empty marker set")]
    EmptyMarkers,

    #[error("degenerate histogram: image has a single gray level")]
    DegenerateHistogram,

    #[error("mask has no feature (false) pixels")]
    NoFeaturePixels,

    #[error("no foreground markers")]
    NoForegroundMarkers,

    #[error("{0} regions do not fit in a 16-bit label image")]
    TooManyRegions(usize),

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps an error with the name of the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True when the root cause is a file-system or decoding problem rather
    /// than a processing failure.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } | Error::Image { .. } | Error::UnsupportedFormat(_) => true,
            Error::Stage { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
