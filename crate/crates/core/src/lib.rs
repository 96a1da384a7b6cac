//! Color image segmentation.
//!
//! The pipeline converts sRGB to CIELAB, clusters pixel chromaticity with
//! K-means (cosine or squared Euclidean distance), takes the Sobel gradient
//! of the cluster-mean lightness as a relief, and floods it with a
//! marker-controlled watershed. MSE and PSNR compare the region rendering
//! against the input.
//!
//! ```
//! use labseg::{pipeline::{run_pipeline, PipelineConfig}, synthetic::three_region};
//!
//! let (img, _truth) = three_region(60, 0.0, 1).unwrap();
//! let result = run_pipeline(&img, &PipelineConfig::default()).unwrap();
//! assert_eq!(result.labels.width(), 60);
//! ```

// NaN-rejecting parameter checks read best as `!(x > 0.0)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cluster;
pub mod color;
pub mod error;
pub mod gradient;
pub mod io;
pub mod metrics;
pub mod morphology;
pub mod pipeline;
pub mod raster;
pub mod synthetic;
pub mod watershed;

pub use error::{Error, Result};
pub use raster::{BinaryMask, Connectivity, GrayMap, LabImage, LabelMap, RgbImage};
