//! JSON / JSONL / CSV document types exchanged between pipeline stages.
//!
//! Every JSON document carries `schema_version`; JSON Schemas for each live
//! in the CLI crate's `schemas/` directory.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::beats::BeatRecord;
use crate::decode::{FrameQuality, FrameRecord};
use crate::error::{Error, Result};
use crate::eval::{BootstrapConfig, PrPoint, RocPoint, Statistic};
use crate::geometry::{Channel, Keypoint, KeypointSet, MeasurementTriple, Point2};
use crate::labels::GradCheck;
use crate::phantom::Trajectory;
use crate::study::{BeatSpread, StudySummary};

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::InvalidConfig(format!(
            "unsupported schema_version {v}, expected {SCHEMA_VERSION}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointOut {
    pub name: Channel,
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

/// One line of the per-frame JSONL stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameLine {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub frame_index: usize,
    /// Four entries in channel order; `null` where nothing was detected.
    pub points: [Option<PointOut>; 4],
    pub quality: FrameQuality,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ivs_cm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lvid_cm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lvpw_cm: Option<f64>,
}

impl From<&FrameRecord> for FrameLine {
    fn from(r: &FrameRecord) -> Self {
        let points = Channel::ALL.map(|c| {
            r.keypoints.get(c).map(|kp| PointOut {
                name: c,
                x: kp.position.x,
                y: kp.position.y,
                confidence: kp.confidence,
            })
        });
        FrameLine {
            schema_version: SCHEMA_VERSION,
            frame_index: r.frame_index,
            points,
            quality: r.quality.clone(),
            ivs_cm: r.measurement.map(|m| m.ivs),
            lvid_cm: r.measurement.map(|m| m.lvid),
            lvpw_cm: r.measurement.map(|m| m.lvpw),
        }
    }
}

impl TryFrom<FrameLine> for FrameRecord {
    type Error = Error;

    fn try_from(line: FrameLine) -> Result<Self> {
        check_version(line.schema_version)?;
        let mut keypoints = KeypointSet::empty(line.frame_index);
        for (slot, channel) in line.points.iter().zip(Channel::ALL) {
            if let Some(p) = slot {
                if p.name != channel {
                    return Err(Error::InvalidConfig(format!(
                        "frame {}: point {} in slot {}",
                        line.frame_index, p.name, channel
                    )));
                }
                keypoints.set(Keypoint {
                    position: Point2::new(p.x, p.y),
                    confidence: p.confidence,
                    channel,
                });
            }
        }
        let measurement = match (line.ivs_cm, line.lvid_cm, line.lvpw_cm) {
            (Some(ivs), Some(lvid), Some(lvpw)) => Some(MeasurementTriple::new(ivs, lvid, lvpw)),
            (None, None, None) => None,
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "frame {}: partial measurement",
                    line.frame_index
                )))
            }
        };
        if measurement.is_some() != line.quality.kept {
            return Err(Error::InvalidConfig(format!(
                "frame {}: measurement must be present exactly when kept",
                line.frame_index
            )));
        }
        Ok(FrameRecord {
            frame_index: line.frame_index,
            keypoints,
            quality: line.quality,
            measurement,
        })
    }
}

/// Serializes records as JSONL, one frame per line.
pub fn frames_to_jsonl(records: &[FrameRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&FrameLine::from(r)).expect("frame line serializes"));
        out.push('\n');
    }
    out
}

pub fn frames_from_jsonl(text: &str) -> Result<Vec<FrameRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let line: FrameLine = serde_json::from_str(l)
                .map_err(|e| Error::InvalidConfig(format!("line {}: {e}", i + 1)))?;
            FrameRecord::try_from(line)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatsDoc {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub fps: f64,
    pub n_frames: usize,
    pub n_kept: usize,
    pub beats: Vec<BeatRecord>,
}

impl BeatsDoc {
    pub fn validate(&self) -> Result<()> {
        check_version(self.schema_version)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub video_id: Option<String>,
    #[serde(flatten)]
    pub summary: StudySummary,
    /// Beat-to-beat variability; absent with fewer than two beats.
    pub spread: Option<BeatSpread>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub statistic: Statistic,
    pub point: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n: usize,
    pub skipped_resamples: usize,
    /// Coefficient of determination alongside the squared-Pearson headline
    /// when `statistic` is `r2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2_cod: Option<f64>,
    pub config: BootstrapConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocReport {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub n: usize,
    pub positives: usize,
    pub auc: f64,
    pub roc: Vec<RocPoint>,
    pub average_precision: f64,
    pub pr: Vec<PrPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub alpha: f64,
    pub lambda_aux: f64,
    pub frames: usize,
    /// Mean over frames.
    pub weighted_mse: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmented: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_check: Option<GradCheckReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    #[serde(flatten)]
    pub check: GradCheck,
    pub tolerance: f64,
    pub passed: bool,
}

/// Machine-readable error written to stderr by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub code: String,
    pub message: String,
    pub context: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Diastole,
    Systole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NamedPoint {
    pub name: Channel,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedFrame {
    pub frame_index: usize,
    pub phase: Option<Phase>,
    pub points: Vec<NamedPoint>,
}

impl AnnotatedFrame {
    /// The four points in channel order.
    pub fn ordered_points(&self) -> Result<[Point2; 4]> {
        let names: BTreeSet<Channel> = self.points.iter().map(|p| p.name).collect();
        if self.points.len() != 4 || names.len() != 4 {
            return Err(Error::InvalidConfig(format!(
                "frame {}: need exactly one point per channel",
                self.frame_index
            )));
        }
        Ok(Channel::ALL.map(|c| {
            let p = self.points.iter().find(|p| p.name == c).expect("all channels present");
            Point2::new(p.x, p.y)
        }))
    }
}

/// Sparse expert annotations for one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationDoc {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub video_id: String,
    pub fps: f64,
    pub cm_per_pixel: f64,
    pub frames: Vec<AnnotatedFrame>,
}

impl AnnotationDoc {
    pub fn validate(&self) -> Result<()> {
        check_version(self.schema_version)?;
        let mut seen = BTreeSet::new();
        for f in &self.frames {
            if !seen.insert(f.frame_index) {
                return Err(Error::InvalidConfig(format!(
                    "frame {} annotated twice",
                    f.frame_index
                )));
            }
            f.ordered_points()?;
        }
        Ok(())
    }

    /// Labels every ground-truth diastole and systole frame of a phantom.
    pub fn from_trajectory(video_id: &str, traj: &Trajectory) -> Self {
        let mut marked: Vec<(usize, Phase)> = traj
            .diastole_frames
            .iter()
            .map(|&f| (f, Phase::Diastole))
            .chain(traj.systole_frames.iter().map(|&f| (f, Phase::Systole)))
            .collect();
        marked.sort_by_key(|&(f, _)| f);
        marked.dedup_by_key(|&mut (f, _)| f);
        let frames = marked
            .into_iter()
            .map(|(f, phase)| AnnotatedFrame {
                frame_index: f,
                phase: Some(phase),
                points: Channel::ALL
                    .into_iter()
                    .zip(traj.frames[f].points)
                    .map(|(name, p)| NamedPoint { name, x: p.x, y: p.y })
                    .collect(),
            })
            .collect();
        AnnotationDoc {
            schema_version: SCHEMA_VERSION,
            video_id: video_id.to_string(),
            fps: traj.calibration.fps,
            cm_per_pixel: traj.calibration.cm_per_pixel,
            frames,
        }
    }
}
