//! Keypoints, calibration, and the geometry that turns four points along the
//! PLAX measurement line into IVS / LVID / LVPW lengths.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A location in image space. `x` is the column, `y` the row, both continuous.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// The four measurement points, in order along the line from the top of the
/// septum to the bottom of the posterior wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    IvsTop,
    LvSeptal,
    LvPosterior,
    PwBottom,
}

impl Channel {
    pub const ALL: [Channel; 4] = [
        Channel::IvsTop,
        Channel::LvSeptal,
        Channel::LvPosterior,
        Channel::PwBottom,
    ];

    /// Position of this channel in heatmap tensors and label images.
    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn name(self) -> &'static str {
        match self {
            Channel::IvsTop => "ivs_top",
            Channel::LvSeptal => "lv_septal",
            Channel::LvPosterior => "lv_posterior",
            Channel::PwBottom => "pw_bottom",
        }
    }

    pub fn from_name(name: &str) -> Option<Channel> {
        Channel::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Segment names in measurement order.
pub const SEGMENTS: [&str; 3] = ["ivs", "lvid", "lvpw"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub position: Point2,
    /// Detection score in `[0, 1]`.
    pub confidence: f64,
    pub channel: Channel,
}

/// The keypoints of one frame. A channel is `None` when nothing was detected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeypointSet {
    pub frame_index: usize,
    points: [Option<Keypoint>; 4],
}

impl KeypointSet {
    pub fn empty(frame_index: usize) -> Self {
        Self {
            frame_index,
            points: [None; 4],
        }
    }

    /// Builds a fully populated set with confidence 1 from positions in
    /// channel order.
    pub fn from_points(frame_index: usize, points: [Point2; 4]) -> Self {
        let mut set = Self::empty(frame_index);
        for (channel, position) in Channel::ALL.into_iter().zip(points) {
            set.set(Keypoint {
                position,
                confidence: 1.0,
                channel,
            });
        }
        set
    }

    /// Stores `kp` in the slot named by its own channel.
    pub fn set(&mut self, kp: Keypoint) {
        self.points[kp.channel.index()] = Some(kp);
    }

    pub fn clear(&mut self, channel: Channel) {
        self.points[channel.index()] = None;
    }

    pub fn get(&self, channel: Channel) -> Option<&Keypoint> {
        self.points[channel.index()].as_ref()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Channel, Option<&Keypoint>)> {
        Channel::ALL.into_iter().map(move |c| (c, self.get(c)))
    }

    pub fn is_complete(&self) -> bool {
        self.points.iter().all(Option::is_some)
    }

    /// All four positions in channel order, or the first absent channel.
    pub fn positions(&self) -> Result<[Point2; 4]> {
        let mut out = [Point2::default(); 4];
        for (slot, channel) in out.iter_mut().zip(Channel::ALL) {
            *slot = self
                .get(channel)
                .ok_or(Error::MissingKeypoint(channel))?
                .position;
        }
        Ok(out)
    }
}

/// Pixel-to-physical scale and frame rate of one video.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub cm_per_pixel: f64,
    pub fps: f64,
}

impl Calibration {
    pub fn new(cm_per_pixel: f64, fps: f64) -> Result<Self> {
        let cal = Self { cm_per_pixel, fps };
        cal.validate()?;
        Ok(cal)
    }

    /// Unit scale: lengths are reported in pixels.
    pub fn pixel_units(fps: f64) -> Result<Self> {
        Self::new(1.0, fps)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.cm_per_pixel) {
            return Err(Error::InvalidConfig(format!(
                "cm_per_pixel must be positive and finite, got {}",
                self.cm_per_pixel
            )));
        }
        if !ok(self.fps) {
            return Err(Error::InvalidConfig(format!(
                "fps must be positive and finite, got {}",
                self.fps
            )));
        }
        Ok(())
    }
}

/// Septal thickness, internal diameter and posterior wall thickness, in cm.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasurementTriple {
    pub ivs: f64,
    pub lvid: f64,
    pub lvpw: f64,
}

impl MeasurementTriple {
    pub const fn new(ivs: f64, lvid: f64, lvpw: f64) -> Self {
        Self { ivs, lvid, lvpw }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.ivs, self.lvid, self.lvpw]
    }

    pub fn from_array([ivs, lvid, lvpw]: [f64; 3]) -> Self {
        Self { ivs, lvid, lvpw }
    }
}

/// Segment lengths for points given in channel order, scaled by `cm_per_pixel`.
pub fn measure_points(points: &[Point2; 4], cm_per_pixel: f64) -> MeasurementTriple {
    MeasurementTriple {
        ivs: points[0].distance(points[1]) * cm_per_pixel,
        lvid: points[1].distance(points[2]) * cm_per_pixel,
        lvpw: points[2].distance(points[3]) * cm_per_pixel,
    }
}

/// IVS, LVID and LVPW of a frame, from the Euclidean distances between
/// consecutive named keypoints.
pub fn measure(ks: &KeypointSet, cal: &Calibration) -> Result<MeasurementTriple> {
    Ok(measure_points(&ks.positions()?, cal.cm_per_pixel))
}

/// Direction of each segment, `atan2(dy, dx)` in degrees within `(-180, 180]`.
pub fn segment_angles(ks: &KeypointSet) -> Result<[f64; 3]> {
    let p = ks.positions()?;
    let mut out = [0.0; 3];
    for (i, angle) in out.iter_mut().enumerate() {
        let (a, b) = (p[i], p[i + 1]);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        if dx == 0.0 && dy == 0.0 {
            return Err(Error::DegenerateSegment(SEGMENTS[i]));
        }
        let deg = dy.atan2(dx).to_degrees();
        // atan2 returns -180 for (-x, -0.0); fold onto the closed end.
        *angle = if deg <= -180.0 { deg + 360.0 } else { deg };
    }
    Ok(out)
}

/// Smallest angle between two directions, in `[0, 180]`.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Largest circular difference between any two of the segment angles.
pub fn max_angle_spread(angles: &[f64; 3]) -> f64 {
    let mut spread: f64 = 0.0;
    for i in 0..angles.len() {
        for j in i + 1..angles.len() {
            spread = spread.max(angle_difference(angles[i], angles[j]));
        }
    }
    spread
}
