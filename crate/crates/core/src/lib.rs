//! No-reference quality scores for JPEG compressed images built on the set of
//! distinct gradient magnitudes, with the tooling needed to evaluate them
//! against subjective scores.
//!
//! * [`metric`] computes NUG, MUG and MUG⁺ from an image.
//! * [`image_io`] decodes, encodes, crops and synthesises images.
//! * [`eval`] scores datasets, fits the logistic mapping and reports SRCC/PLCC,
//!   and runs the misalignment and compression-ladder experiments.

pub mod eval;
pub mod image_io;
pub mod metric;

pub use metric::{score_image, score_luminance, LuminanceImage, Metric, MetricResult, RgbImage, M};
