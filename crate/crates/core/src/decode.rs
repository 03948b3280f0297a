//! Heatmap decoding: thresholded centroids per channel, plus the two
//! frame-quality heuristics (empty channel, inconsistent segment angles).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    max_angle_spread, measure, segment_angles, Calibration, Channel, Keypoint, KeypointSet,
    MeasurementTriple, Point2,
};
use crate::heatmap::{FrameView, HeatmapStack, NUM_CHANNELS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeConfig {
    /// Pixels scoring below this are ignored.
    pub confidence_threshold: f32,
    /// Frames whose segment directions differ by more than this many degrees
    /// are excluded.
    pub max_angle_spread: f64,
    /// Weight surviving pixels by activation; otherwise a plain mean.
    pub weighted_centroid: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            confidence_threshold: 0.3,
            max_angle_spread: 30.0,
            weighted_centroid: true,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(Error::InvalidConfig(format!(
                "confidence_threshold must lie in [0, 1], got {}",
                self.confidence_threshold
            )));
        }
        if !(self.max_angle_spread > 0.0 && self.max_angle_spread <= 180.0) {
            return Err(Error::InvalidConfig(format!(
                "max_angle_spread must lie in (0, 180], got {}",
                self.max_angle_spread
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QualityReason {
    EmptyChannel,
    AngleInconsistent,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FrameQuality {
    pub kept: bool,
    pub reasons: Vec<QualityReason>,
}

impl FrameQuality {
    fn from_reasons(mut reasons: Vec<QualityReason>) -> Self {
        reasons.sort();
        reasons.dedup();
        Self {
            kept: reasons.is_empty(),
            reasons,
        }
    }
}

/// Centroid of the pixels of one channel plane at or above `threshold`,
/// and the largest surviving activation.
fn channel_centroid(plane: &[f32], width: usize, threshold: f32, weighted: bool) -> Option<(Point2, f32)> {
    let mut count = 0usize;
    let (mut sx, mut sy) = (0.0f64, 0.0f64);
    let (mut sw, mut swx, mut swy) = (0.0f64, 0.0f64, 0.0f64);
    let mut max = f32::NEG_INFINITY;

    for (row, line) in plane.chunks_exact(width).enumerate() {
        let mut rc = 0usize;
        let mut rx = 0usize;
        let (mut rw, mut rwx) = (0.0f64, 0.0f64);
        for (col, &v) in line.iter().enumerate() {
            if v >= threshold {
                rc += 1;
                rx += col;
                rw += v as f64;
                rwx += v as f64 * col as f64;
                if v > max {
                    max = v;
                }
            }
        }
        if rc > 0 {
            count += rc;
            sx += rx as f64;
            sy += (rc * row) as f64;
            sw += rw;
            swx += rwx;
            swy += rw * row as f64;
        }
    }

    if count == 0 {
        return None;
    }
    let position = if weighted && sw > 0.0 {
        Point2::new(swx / sw, swy / sw)
    } else {
        Point2::new(sx / count as f64, sy / count as f64)
    };
    Some((position, max))
}

/// Decodes one `4 × H × W` frame into keypoints and a quality verdict.
pub fn decode_frame(
    frame_index: usize,
    frame: FrameView<'_>,
    cfg: &DecodeConfig,
) -> Result<(KeypointSet, FrameQuality)> {
    if frame.channels != NUM_CHANNELS {
        return Err(Error::ShapeMismatch {
            expected: vec![NUM_CHANNELS, frame.height, frame.width],
            actual: frame.shape().to_vec(),
        });
    }
    let mut ks = KeypointSet::empty(frame_index);
    let mut reasons = Vec::new();
    for channel in Channel::ALL {
        let plane = frame.channel(channel.index());
        match channel_centroid(plane, frame.width, cfg.confidence_threshold, cfg.weighted_centroid) {
            Some((position, max)) => ks.set(Keypoint {
                position,
                confidence: (max as f64).clamp(0.0, 1.0),
                channel,
            }),
            None => reasons.push(QualityReason::EmptyChannel),
        }
    }
    if ks.is_complete() {
        match segment_angles(&ks) {
            Ok(angles) if max_angle_spread(&angles) <= cfg.max_angle_spread => {}
            // a zero-length segment has no direction to check
            _ => reasons.push(QualityReason::AngleInconsistent),
        }
    }
    Ok((ks, FrameQuality::from_reasons(reasons)))
}

/// Decoded output for one frame of a video.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_index: usize,
    pub keypoints: KeypointSet,
    pub quality: FrameQuality,
    /// Present exactly when the frame was kept.
    pub measurement: Option<MeasurementTriple>,
}

/// Decodes every frame of `stack`; frame `i` gets index `first_index + i`.
pub fn decode_video_from(
    stack: &HeatmapStack,
    first_index: usize,
    cfg: &DecodeConfig,
    cal: &Calibration,
) -> Result<Vec<FrameRecord>> {
    cfg.validate()?;
    cal.validate()?;
    (0..stack.frames())
        .into_par_iter()
        .map(|i| {
            let frame_index = first_index + i;
            let (keypoints, quality) = decode_frame(frame_index, stack.frame(i), cfg)?;
            let measurement = if quality.kept {
                Some(measure(&keypoints, cal)?)
            } else {
                None
            };
            Ok(FrameRecord {
                frame_index,
                keypoints,
                quality,
                measurement,
            })
        })
        .collect()
}

pub fn decode_video(stack: &HeatmapStack, cfg: &DecodeConfig, cal: &Calibration) -> Result<Vec<FrameRecord>> {
    decode_video_from(stack, 0, cfg, cal)
}
