//! Synthetic PLAX ground truth and a mock keypoint model.
//!
//! The cavity follows a raised-cosine cycle between systolic and diastolic
//! diameter, walls thicken linearly as it shrinks, and the four points sit on
//! a fixed line. The mock model renders a Gaussian blob per channel at the
//! (optionally jittered) true point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Calibration, MeasurementTriple, Point2};
use crate::heatmap::{Extent, HeatmapStack, NUM_CHANNELS};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomConfig {
    pub fps: f64,
    pub duration_s: f64,
    /// Cycle lengths in seconds, repeated in order for the whole clip.
    pub period_s: Vec<f64>,
    pub lvid_d: f64,
    pub lvid_s: f64,
    pub ivs_d: f64,
    pub lvpw_d: f64,
    /// Wall thickening (cm) per cm of cavity shortening.
    pub wall_gain: f64,
    /// Direction of the measurement line, degrees from +x towards +y.
    pub axis_angle: f64,
    /// Position of the top of the septum, in pixels.
    pub origin: Point2,
    pub cm_per_pixel: f64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            fps: 50.0,
            duration_s: 5.0,
            period_s: vec![1.0],
            lvid_d: 4.8,
            lvid_s: 3.2,
            ivs_d: 1.0,
            lvpw_d: 0.9,
            wall_gain: 0.25,
            axis_angle: 75.0,
            origin: Point2::new(40.0, 20.0),
            cm_per_pixel: 0.1,
        }
    }
}

impl PhantomConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !pos(self.fps) || !pos(self.duration_s) || !pos(self.cm_per_pixel) {
            return fail("fps, duration_s and cm_per_pixel must be positive");
        }
        if self.period_s.is_empty() || !self.period_s.iter().all(|&p| pos(p)) {
            return fail("period_s must be a non-empty list of positive values");
        }
        if !(pos(self.lvid_s) && self.lvid_d > self.lvid_s && self.lvid_d.is_finite()) {
            return fail("need lvid_d > lvid_s > 0");
        }
        if !pos(self.ivs_d) || !pos(self.lvpw_d) {
            return fail("wall thicknesses must be positive");
        }
        if !(self.wall_gain.is_finite() && self.wall_gain >= 0.0) {
            return fail("wall_gain must be >= 0");
        }
        if !self.axis_angle.is_finite() || !self.origin.is_finite() {
            return fail("axis_angle and origin must be finite");
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        (self.fps * self.duration_s).round() as usize
    }

    pub fn calibration(&self) -> Calibration {
        Calibration {
            cm_per_pixel: self.cm_per_pixel,
            fps: self.fps,
        }
    }

    /// Start time of each cycle that begins within the clip, plus its period.
    fn cycles(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut t = 0.0;
        for &p in self.period_s.iter().cycle() {
            if t >= self.duration_s {
                break;
            }
            out.push((t, p));
            t += p;
        }
        out
    }

    /// Cardiac phase at time `t`: integer at diastole, half-integer at systole.
    fn phase(&self, cycles: &[(f64, f64)], t: f64) -> f64 {
        let k = cycles.partition_point(|&(start, _)| start <= t).max(1) - 1;
        let (start, period) = cycles[k];
        k as f64 + (t - start) / period
    }

    /// Ground-truth measurements at a given phase.
    pub fn truth_at_phase(&self, phase: f64) -> MeasurementTriple {
        let swing = (1.0 + (2.0 * std::f64::consts::PI * phase).cos()) / 2.0;
        let lvid = self.lvid_s + (self.lvid_d - self.lvid_s) * swing;
        let thickening = self.wall_gain * (self.lvid_d - lvid);
        MeasurementTriple::new(self.ivs_d + thickening, lvid, self.lvpw_d + thickening)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFrame {
    pub frame_index: usize,
    pub phase: f64,
    /// Channel order: ivs_top, lv_septal, lv_posterior, pw_bottom.
    pub points: [Point2; 4],
    pub truth: MeasurementTriple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub calibration: Calibration,
    pub frames: Vec<TrajectoryFrame>,
    /// Frames nearest each cycle start (LVID maxima).
    pub diastole_frames: Vec<usize>,
    /// Frames nearest each mid-cycle (LVID minima).
    pub systole_frames: Vec<usize>,
}

impl Trajectory {
    /// `(diastole, systole)` of every cycle whose diastole is an interior
    /// frame and whose systole follows before the last frame.
    pub fn complete_beats(&self) -> Vec<(usize, usize)> {
        let last = self.frames.len().saturating_sub(1);
        self.diastole_frames
            .iter()
            .filter(|&&d| d > 0 && d < last)
            .filter_map(|&d| {
                self.systole_frames
                    .iter()
                    .find(|&&s| s > d)
                    .filter(|&&s| s < last)
                    .map(|&s| (d, s))
            })
            .collect()
    }

    pub fn truth_lvid(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.truth.lvid).collect()
    }
}

/// Per-frame keypoints and truth for a phantom clip.
pub fn generate_trajectory(cfg: &PhantomConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let n = cfg.frame_count();
    if n < 2 {
        return Err(Error::InvalidConfig("clip must span at least two frames".into()));
    }
    let cycles = cfg.cycles();
    let (s, c) = cfg.axis_angle.to_radians().sin_cos();
    let step = |p: Point2, cm: f64| {
        let px = cm / cfg.cm_per_pixel;
        Point2::new(p.x + c * px, p.y + s * px)
    };

    let frames = (0..n)
        .map(|i| {
            let phase = cfg.phase(&cycles, i as f64 / cfg.fps);
            let truth = cfg.truth_at_phase(phase);
            let p0 = cfg.origin;
            let p1 = step(p0, truth.ivs);
            let p2 = step(p1, truth.lvid);
            let p3 = step(p2, truth.lvpw);
            TrajectoryFrame {
                frame_index: i,
                phase,
                points: [p0, p1, p2, p3],
                truth,
            }
        })
        .collect();

    let to_frame = |t: f64| (t * cfg.fps).round() as usize;
    let diastole_frames = cycles
        .iter()
        .map(|&(start, _)| to_frame(start))
        .filter(|&f| f < n)
        .collect();
    let systole_frames = cycles
        .iter()
        .map(|&(start, p)| to_frame(start + p / 2.0))
        .filter(|&f| f < n)
        .collect();

    Ok(Trajectory {
        calibration: cfg.calibration(),
        frames,
        diastole_frames,
        systole_frames,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockModelConfig {
    /// Per-axis standard deviation of the blob position error, px.
    pub noise_sigma_px: f64,
    pub blob_sigma_px: f64,
    pub peak_value: f32,
    /// Probability that a channel renders empty in a frame.
    pub dropout_prob: f64,
    pub seed: u64,
}

impl Default for MockModelConfig {
    fn default() -> Self {
        Self {
            noise_sigma_px: 0.0,
            blob_sigma_px: 2.0,
            peak_value: 1.0,
            dropout_prob: 0.0,
            seed: 0,
        }
    }
}

impl MockModelConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.noise_sigma_px.is_finite() && self.noise_sigma_px >= 0.0) {
            return fail("noise_sigma_px must be >= 0");
        }
        if !(self.blob_sigma_px.is_finite() && self.blob_sigma_px > 0.0) {
            return fail("blob_sigma_px must be > 0");
        }
        if !(self.peak_value > 0.0 && self.peak_value <= 1.0) {
            return fail("peak_value must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.dropout_prob) {
            return fail("dropout_prob must lie in [0, 1]");
        }
        Ok(())
    }
}

fn render_blob(plane: &mut [f32], extent: Extent, center: Point2, sigma: f64, peak: f32) {
    let radius = (5.0 * sigma).ceil();
    let inv = 1.0 / (2.0 * sigma * sigma);
    let x0 = (center.x - radius).floor().max(0.0) as usize;
    let x1 = ((center.x + radius).ceil() as usize).min(extent.width - 1);
    let y0 = (center.y - radius).floor().max(0.0) as usize;
    let y1 = ((center.y + radius).ceil() as usize).min(extent.height - 1);
    for y in y0..=y1 {
        let dy = y as f64 - center.y;
        let row = &mut plane[y * extent.width..(y + 1) * extent.width];
        for (x, v) in row.iter_mut().enumerate().take(x1 + 1).skip(x0) {
            let dx = x as f64 - center.x;
            *v = peak * (-(dx * dx + dy * dy) * inv).exp() as f32;
        }
    }
}

/// Mock model output: one Gaussian blob per channel per frame.
pub fn render_heatmaps(traj: &Trajectory, mock: &MockModelConfig, extent: Extent) -> Result<HeatmapStack> {
    mock.validate()?;
    if traj.frames.is_empty() {
        return Err(Error::InvalidConfig("trajectory has no frames".into()));
    }
    let (w, h) = ((extent.width - 1) as f64, (extent.height - 1) as f64);
    let inside = |p: &Point2| (0.0..=w).contains(&p.x) && (0.0..=h).contains(&p.y);
    if !traj.frames.iter().all(|f| f.points.iter().all(inside)) {
        return Err(Error::InvalidExtent {
            height: extent.height,
            width: extent.width,
        });
    }

    let noise = Normal::new(0.0, mock.noise_sigma_px).expect("validated sigma");
    let plane = extent.pixels();
    let mut stack = HeatmapStack::zeros(traj.frames.len(), extent);
    stack
        .frames_mut()
        .collect::<Vec<_>>()
        .into_par_iter()
        .zip(&traj.frames)
        .for_each(|(buf, frame)| {
            let mut rng = ChaCha8Rng::seed_from_u64(mock.seed);
            rng.set_stream(frame.frame_index as u64);
            for c in 0..NUM_CHANNELS {
                let (dx, dy) = (noise.sample(&mut rng), noise.sample(&mut rng));
                let dropped = rng.random::<f64>() < mock.dropout_prob;
                if dropped {
                    continue;
                }
                let p = frame.points[c];
                let center = Point2::new((p.x + dx).clamp(0.0, w), (p.y + dy).clamp(0.0, h));
                render_blob(
                    &mut buf[c * plane..(c + 1) * plane],
                    extent,
                    center,
                    mock.blob_sigma_px,
                    mock.peak_value,
                );
            }
        });
    Ok(stack)
}
