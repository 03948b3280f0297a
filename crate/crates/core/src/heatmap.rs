//! Dense activation tensors: one frame is `4 × H × W`, a stack is `F × 4 × H × W`,
//! both row-major.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_CHANNELS: usize = 4;

/// Image size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extent {
    pub height: usize,
    pub width: usize,
}

impl Extent {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidExtent { height, width });
        }
        Ok(Self { height, width })
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }
}

/// Borrowed `channels × height × width` view of one frame.
#[derive(Debug, Clone, Copy)]
pub struct FrameView<'a, T = f32> {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: &'a [T],
}

impl<'a, T> FrameView<'a, T> {
    pub fn new(channels: usize, height: usize, width: usize, data: &'a [T]) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::ShapeMismatch {
                expected: vec![channels, height, width],
                actual: vec![data.len()],
            });
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.channels, self.height, self.width]
    }

    pub fn channel(&self, c: usize) -> &'a [T] {
        let plane = self.height * self.width;
        &self.data[c * plane..(c + 1) * plane]
    }

    pub(crate) fn check_same_shape<U>(&self, other: &FrameView<'_, U>) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape().to_vec(),
                actual: other.shape().to_vec(),
            });
        }
        Ok(())
    }
}

/// Model output (or rasterized labels) for a whole video.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapStack {
    frames: usize,
    extent: Extent,
    data: Vec<f32>,
}

impl HeatmapStack {
    pub fn new(frames: usize, extent: Extent, data: Vec<f32>) -> Result<Self> {
        let expected = frames * NUM_CHANNELS * extent.pixels();
        if frames == 0 || data.len() != expected {
            return Err(Error::ShapeMismatch {
                expected: vec![frames.max(1), NUM_CHANNELS, extent.height, extent.width],
                actual: vec![data.len()],
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "heatmap contains non-finite activations".into(),
            ));
        }
        Ok(Self {
            frames,
            extent,
            data,
        })
    }

    pub fn zeros(frames: usize, extent: Extent) -> Self {
        Self {
            frames,
            extent,
            data: vec![0.0; frames * NUM_CHANNELS * extent.pixels()],
        }
    }

    /// Builds a stack from `[F, 4, H, W]` dims and a flat payload.
    pub fn from_dims(dims: &[usize], data: Vec<f32>) -> Result<Self> {
        match *dims {
            [f, NUM_CHANNELS, h, w] => Self::new(f, Extent::new(h, w)?, data),
            _ => Err(Error::ShapeMismatch {
                expected: vec![0, NUM_CHANNELS, 0, 0],
                actual: dims.to_vec(),
            }),
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn extent(&self) -> Extent {
        self.extent
    }

    pub fn dims(&self) -> [usize; 4] {
        [
            self.frames,
            NUM_CHANNELS,
            self.extent.height,
            self.extent.width,
        ]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    fn frame_len(&self) -> usize {
        NUM_CHANNELS * self.extent.pixels()
    }

    pub fn frame(&self, index: usize) -> FrameView<'_> {
        let len = self.frame_len();
        FrameView {
            channels: NUM_CHANNELS,
            height: self.extent.height,
            width: self.extent.width,
            data: &self.data[index * len..(index + 1) * len],
        }
    }

    pub fn frame_mut(&mut self, index: usize) -> &mut [f32] {
        let len = self.frame_len();
        &mut self.data[index * len..(index + 1) * len]
    }

    /// Mutable frames, for filling a stack in parallel.
    pub fn frames_mut(&mut self) -> std::slice::ChunksExactMut<'_, f32> {
        let len = self.frame_len();
        self.data.chunks_exact_mut(len)
    }

    /// Frames `range` as a new stack.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        let len = self.frame_len();
        if range.start >= range.end || range.end > self.frames {
            return Err(Error::InvalidConfig(format!(
                "frame range {range:?} outside 0..{}",
                self.frames
            )));
        }
        Ok(Self {
            frames: range.len(),
            extent: self.extent,
            data: self.data[range.start * len..range.end * len].to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_views_index_channels() {
        let extent = Extent::new(2, 3).unwrap();
        let data: Vec<f32> = (0..2 * 4 * 6).map(|v| v as f32).collect();
        let stack = HeatmapStack::new(2, extent, data).unwrap();
        let f1 = stack.frame(1);
        assert_eq!(f1.shape(), [4, 2, 3]);
        assert_eq!(f1.channel(2), &[36.0, 37.0, 38.0, 39.0, 40.0, 41.0]);
        assert_eq!(stack.slice(1..2).unwrap().frame(0).data, f1.data);
    }

    #[test]
    fn rejects_bad_shapes() {
        let extent = Extent::new(2, 2).unwrap();
        assert!(HeatmapStack::new(1, extent, vec![0.0; 15]).is_err());
        assert!(HeatmapStack::from_dims(&[1, 3, 2, 2], vec![0.0; 12]).is_err());
        assert!(HeatmapStack::new(1, extent, vec![f32::NAN; 16]).is_err());
        assert!(Extent::new(0, 4).is_err());
    }
}
