//! PLAX left-ventricular wall measurement from keypoint heatmaps.
//!
//! Stages, in pipeline order:
//!
//! 1. [`decode`]: thresholded centroids per heatmap channel and frame
//!    quality filtering.
//! 2. [`geometry`]: IVS / LVID / LVPW lengths from the four keypoints.
//! 3. [`beats`]: diastole and systole per cardiac cycle from the LVID series.
//! 4. [`study`]: per-study aggregation and the optional LVH flag.
//!
//! Alongside: [`labels`] (label rasterization and training losses),
//! [`eval`] (agreement and classification statistics), [`phantom`]
//! (synthetic ground truth and a mock model), and the on-disk formats in
//! [`tensor_file`] and [`formats`].

pub mod beats;
pub mod decode;
pub mod error;
pub mod eval;
pub mod formats;
pub mod geometry;
pub mod heatmap;
pub mod labels;
pub mod phantom;
pub mod study;
pub mod tensor_file;

pub use beats::{detect_beats, smooth_series, BeatConfig, BeatRecord, MeasurementSeries, SeriesEntry};
pub use decode::{decode_frame, decode_video, DecodeConfig, FrameQuality, FrameRecord, QualityReason};
pub use error::{Error, Result};
pub use geometry::{
    measure, segment_angles, Calibration, Channel, Keypoint, KeypointSet, MeasurementTriple, Point2,
};
pub use heatmap::{Extent, FrameView, HeatmapStack, NUM_CHANNELS};
pub use labels::{
    augmented_loss, rasterize, weighted_mse, weighted_mse_grad, JitterConfig, LabelImage, LossConfig,
};
pub use phantom::{generate_trajectory, render_heatmaps, MockModelConfig, PhantomConfig, Trajectory};
pub use study::{beat_spread, summarize, LvhRule, StudyConfig, StudySummary};
