//! Frustum-overlap pair generation and volume-aware error metrics for
//! relative camera pose regression.
//!
//! The pipeline is: ingest poses ([`dataset`]), score and select pose pairs
//! by view-frustum overlap ([`frustum`], [`pairgen`]), produce predictions
//! ([`synth`] or an external model) and evaluate them ([`metrics`]).

pub mod dataset;
pub mod frustum;
pub mod geometry;
pub mod metrics;
pub mod numeric;
pub mod pairgen;
pub mod synth;

pub use dataset::{
    DatasetError, PairMeta, PairOrdering, PairRecord, PairSet, PoseSet, Prediction, PredictionMeta,
    PredictionSet, Split,
};
pub use frustum::{overlap_score, FrustumSpec, Grid, OverlapConfig};
pub use geometry::{
    compose, relative, rotation_error, translation_error, EulerAngles, Norm, Pose, Quaternion, RelativePose,
    RigidTransform, Translation, Vec3,
};
pub use metrics::{ErrorCurve, MetricConfig, MetricReport, MetricsError, NaivePredictor};
pub use pairgen::{generate_pairs, OverlapBinning, PairGenError, PairGenOptions};
pub use synth::{generate_trajectory, SynthConfig, SynthPredictor};
