//! Dataset tooling and metric kernels for polyp detection pipelines:
//! segmentation-mask to bounding-box label generation, LOF-based outlier
//! filtering, deterministic k-fold splitting, detection-loss kernels, and a
//! detection-evaluation engine (precision/recall/F1, mAP@0.5, mAP@0.5:0.95).
//!
//! The numeric kernels are generic over the scalar type via [`Real`]
//! (`f32` or `f64`); file formats and the aliases below pin `f64`.

pub mod dataset;
pub mod evaluation;
pub mod geometry;
pub mod losses;
pub mod outlier;
mod scalar;

pub use scalar::Real;

/// Pixel-space box, `f64`.
pub type BBox = geometry::BBox<f64>;
/// Image-normalized box, `f64`.
pub type NormBox = geometry::NormBox<f64>;
/// Loss component weights, `f64`.
pub type LossWeights = losses::LossWeights<f64>;
/// Per-image feature descriptor, `f64`.
pub type FeatureVector = outlier::FeatureVector<f64>;
/// LOF scores plus kept/removed partition, `f64`.
pub type LofResult = outlier::LofResult<f64>;
/// Predicted box with confidence, `f64`.
pub type Detection = evaluation::Detection<f64>;
/// Annotated box, `f64`.
pub type GroundTruth = evaluation::GroundTruth<f64>;
/// Precision/recall sweep with AP, `f64`.
pub type PrCurve = evaluation::PrCurve<f64>;
/// Evaluation summary, `f64`.
pub type EvalReport = evaluation::EvalReport<f64>;
