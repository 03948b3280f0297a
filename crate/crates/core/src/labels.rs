//! Training-side kernels: one-hot label rasterization with positional jitter,
//! the class-balanced weighted MSE with its analytic gradient, and the
//! keypoint/measurement L2 augmentation built on soft centroids.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{measure_points, Calibration, Channel, Point2};
use crate::heatmap::{Extent, FrameView, NUM_CHANNELS};

/// Isotropic Gaussian noise applied to annotated points before rasterizing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JitterConfig {
    /// Standard deviation in pixels, per axis.
    pub sigma: f64,
    pub seed: u64,
}

impl Default for JitterConfig {
    fn default() -> Self {
        Self {
            sigma: 2.0,
            seed: 0,
        }
    }
}

impl JitterConfig {
    pub fn none() -> Self {
        Self {
            sigma: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "jitter sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// A `4 × H × W` one-hot label: each channel holds a single 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelImage {
    extent: Extent,
    /// `(column, row)` of the hot pixel per channel.
    hot: [(usize, usize); NUM_CHANNELS],
    data: Vec<f32>,
}

impl LabelImage {
    pub fn extent(&self) -> Extent {
        self.extent
    }

    pub fn hot_pixel(&self, channel: Channel) -> (usize, usize) {
        self.hot[channel.index()]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn view(&self) -> FrameView<'_> {
        FrameView {
            channels: NUM_CHANNELS,
            height: self.extent.height,
            width: self.extent.width,
            data: &self.data,
        }
    }
}

/// Nearest pixel index along one axis, rounding half away from zero and
/// clamping to `[0, len - 1]`.
fn nearest_pixel(coord: f64, len: usize) -> usize {
    let r = coord.round();
    if r <= 0.0 {
        0
    } else if r >= (len - 1) as f64 {
        len - 1
    } else {
        r as usize
    }
}

/// Rasterizes four annotated points (channel order) into a one-hot label.
pub fn rasterize(points: &[Point2; 4], extent: Extent, jitter: &JitterConfig) -> Result<LabelImage> {
    rasterize_stream(points, extent, jitter, 0)
}

/// Like [`rasterize`], drawing jitter from an independent substream of the
/// seed so that frames of one video get distinct, reproducible noise.
pub fn rasterize_stream(
    points: &[Point2; 4],
    extent: Extent,
    jitter: &JitterConfig,
    stream: u64,
) -> Result<LabelImage> {
    jitter.validate()?;
    if let Some(p) = points.iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidConfig(format!("non-finite point {p:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(jitter.seed);
    rng.set_stream(stream);
    let noise = (jitter.sigma > 0.0)
        .then(|| Normal::new(0.0, jitter.sigma).expect("sigma validated"));

    let plane = extent.pixels();
    let mut data = vec![0.0f32; NUM_CHANNELS * plane];
    let mut hot = [(0, 0); NUM_CHANNELS];
    for (c, p) in points.iter().enumerate() {
        let (dx, dy) = match &noise {
            Some(n) => (n.sample(&mut rng), n.sample(&mut rng)),
            None => (0.0, 0.0),
        };
        let col = nearest_pixel(p.x + dx, extent.width);
        let row = nearest_pixel(p.y + dy, extent.height);
        data[c * plane + row * extent.width + col] = 1.0;
        hot[c] = (col, row);
    }
    Ok(LabelImage { extent, hot, data })
}

/// How activations are turned into soft-centroid weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CentroidWeighting {
    /// Clamp at zero, then normalize to sum 1.
    Linear,
    /// `exp(a / temperature)` over clamped activations, normalized.
    Exponential { temperature: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    /// Weight of false positives (pixels labelled 0); `1 - alpha` weights
    /// false negatives.
    pub alpha: f64,
    /// Weight of the keypoint-location and measurement L2 terms.
    pub lambda_aux: f64,
    pub centroid: CentroidWeighting,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            alpha: 0.001,
            lambda_aux: 0.001,
            centroid: CentroidWeighting::Linear,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.lambda_aux.is_finite() && self.lambda_aux >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda_aux must be finite and >= 0, got {}",
                self.lambda_aux
            )));
        }
        if let CentroidWeighting::Exponential { temperature } = self.centroid {
            if !(temperature.is_finite() && temperature > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "centroid temperature must be positive, got {temperature}"
                )));
            }
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )))
    }
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `1/n Σ [α(1−y)(y−ŷ)² + (1−α)y(y−ŷ)²]` over every pixel of every channel.
pub fn weighted_mse<T, U>(pred: FrameView<'_, T>, label: FrameView<'_, U>, alpha: f64) -> Result<f64>
where
    T: Copy + Into<f64>,
    U: Copy + Into<f64>,
{
    pred.check_same_shape(&label)?;
    check_alpha(alpha)?;
    let n = pred.data.len();
    let sum = compensated_sum(pred.data.iter().zip(label.data).map(|(&p, &y)| {
        let (p, y): (f64, f64) = (p.into(), y.into());
        let sq = (y - p) * (y - p);
        alpha * (1.0 - y) * sq + (1.0 - alpha) * y * sq
    }));
    Ok(sum / n as f64)
}

/// Analytic gradient of [`weighted_mse`] with respect to each prediction.
pub fn weighted_mse_grad<T, U>(
    pred: FrameView<'_, T>,
    label: FrameView<'_, U>,
    alpha: f64,
) -> Result<Vec<f64>>
where
    T: Copy + Into<f64>,
    U: Copy + Into<f64>,
{
    pred.check_same_shape(&label)?;
    check_alpha(alpha)?;
    let scale = 2.0 / pred.data.len() as f64;
    Ok(pred
        .data
        .iter()
        .zip(label.data)
        .map(|(&p, &y)| {
            let (p, y): (f64, f64) = (p.into(), y.into());
            scale * (alpha * (1.0 - y) + (1.0 - alpha) * y) * (p - y)
        })
        .collect())
}

/// Outcome of comparing [`weighted_mse_grad`] with central differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub n_checked: usize,
    pub step: f64,
}

/// Denominator floor for elementwise relative error; gradients smaller than
/// this are compared in absolute terms.
pub const GRAD_CHECK_FLOOR: f64 = 1e-10;

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(GRAD_CHECK_FLOOR)
}

/// Checks the analytic gradient at every element against
/// `(l(ŷ + h) − l(ŷ − h)) / 2h`.
pub fn grad_check(pred: FrameView<'_, f64>, label: FrameView<'_, f64>, alpha: f64, step: f64) -> Result<GradCheck> {
    let analytic = weighted_mse_grad(pred, label, alpha)?;
    let mut probe = pred.data.to_vec();
    let mut worst: f64 = 0.0;
    for (i, &g) in analytic.iter().enumerate() {
        let orig = probe[i];
        let mut eval = |v: f64| -> Result<f64> {
            probe[i] = v;
            let view = FrameView::new(pred.channels, pred.height, pred.width, probe.as_slice())?;
            weighted_mse(view, label, alpha)
        };
        let up = eval(orig + step)?;
        let down = eval(orig - step)?;
        probe[i] = orig;
        worst = worst.max(relative_error(g, (up - down) / (2.0 * step)));
    }
    Ok(GradCheck {
        max_rel_error: worst,
        n_checked: analytic.len(),
        step,
    })
}

/// Weighted mean pixel-center position of one channel plane.
pub fn soft_centroid<T: Copy + Into<f64>>(
    plane: &[T],
    width: usize,
    weighting: CentroidWeighting,
) -> Option<Point2> {
    let clamped = plane.iter().map(|&v| v.into().max(0.0));
    let weights: Vec<f64> = match weighting {
        CentroidWeighting::Linear => clamped.collect(),
        CentroidWeighting::Exponential { temperature } => {
            let c: Vec<f64> = clamped.collect();
            let max = c.iter().copied().fold(0.0, f64::max);
            c.into_iter()
                .map(|v| ((v - max) / temperature).exp())
                .collect()
        }
    };
    let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for (i, w) in weights.into_iter().enumerate() {
        if w > 0.0 {
            sw += w;
            sx += w * (i % width) as f64;
            sy += w * (i / width) as f64;
        }
    }
    (sw > 0.0).then(|| Point2::new(sx / sw, sy / sw))
}

/// Components of the augmented training loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub weighted_mse: f64,
    /// `Σ ‖soft centroid − true point‖²` in px².
    pub location: f64,
    /// `Σ (predicted length − true length)²` over the three segments, in cm².
    pub measurement: f64,
    pub total: f64,
}

/// Weighted MSE plus `lambda_aux` times the keypoint-location and
/// measurement squared errors.
pub fn augmented_loss<T, U>(
    pred: FrameView<'_, T>,
    label: FrameView<'_, U>,
    true_points: &[Point2; 4],
    cal: &Calibration,
    cfg: &LossConfig,
) -> Result<LossBreakdown>
where
    T: Copy + Into<f64>,
    U: Copy + Into<f64>,
{
    cfg.validate()?;
    if pred.channels != NUM_CHANNELS {
        return Err(Error::ShapeMismatch {
            expected: vec![NUM_CHANNELS, pred.height, pred.width],
            actual: pred.shape().to_vec(),
        });
    }
    let wmse = weighted_mse(pred, label, cfg.alpha)?;
    if cfg.lambda_aux == 0.0 {
        return Ok(LossBreakdown {
            weighted_mse: wmse,
            location: 0.0,
            measurement: 0.0,
            total: wmse,
        });
    }

    let mut centroids = [Point2::default(); 4];
    for (slot, channel) in centroids.iter_mut().zip(Channel::ALL) {
        *slot = soft_centroid(pred.channel(channel.index()), pred.width, cfg.centroid)
            .ok_or(Error::EmptyChannel(channel))?;
    }
    let location: f64 = centroids
        .iter()
        .zip(true_points)
        .map(|(c, t)| {
            let d = c.distance(*t);
            d * d
        })
        .sum();
    let predicted = measure_points(&centroids, cal.cm_per_pixel).to_array();
    let truth = measure_points(true_points, cal.cm_per_pixel).to_array();
    let measurement: f64 = predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();

    Ok(LossBreakdown {
        weighted_mse: wmse,
        location,
        measurement,
        total: wmse + cfg.lambda_aux * (location + measurement),
    })
}
