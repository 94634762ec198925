//! In-memory frame types shared by the tracking, scene, analysis and render
//! code.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::FrameDims;

/// BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Interleaved 8-bit RGB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbFrame {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl RgbFrame {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        let expected = 3 * width as usize * height as usize;
        if data.len() != expected {
            return Err(Error::DimsMismatch(format!(
                "RGB plane of {width}x{height} needs {expected} bytes, got {}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let n = width as usize * height as usize;
        let mut data = Vec::with_capacity(3 * n);
        for _ in 0..n {
            data.extend_from_slice(&rgb);
        }
        Self { width, height, data }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(3 * width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = 3 * (y as usize * self.width as usize + x as usize);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn same_size(&self, other: &RgbFrame) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// BT.601 luma scaled to `[0, 1]`.
    pub fn to_gray(&self) -> GrayFrame {
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| {
                ((LUMA_WEIGHTS[0] * p[0] as f64
                    + LUMA_WEIGHTS[1] * p[1] as f64
                    + LUMA_WEIGHTS[2] * p[2] as f64)
                    / 255.0) as f32
            })
            .collect();
        GrayFrame {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Single-channel frame, values nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayFrame {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl GrayFrame {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(Error::DimsMismatch(format!(
                "luma plane of {width}x{height} needs {} samples, got {}",
                width as usize * height as usize,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, value: f32) -> Self {
        Self {
            width,
            height,
            data: vec![value; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> f32) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width as usize + x]
    }

    pub fn same_size(&self, other: &GrayFrame) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Decoded frames of one video at native frame rate.
///
/// Frames are reference counted so that sequences with repeated content
/// (stills, synthetic fixtures) can share storage.
#[derive(Debug, Clone)]
pub struct FrameSequence {
    frames: Vec<Arc<RgbFrame>>,
    /// Frame rate as numerator / denominator.
    pub fps: (u32, u32),
}

impl FrameSequence {
    pub fn new(frames: Vec<RgbFrame>, fps: (u32, u32)) -> Result<Self> {
        Self::from_shared(frames.into_iter().map(Arc::new).collect(), fps)
    }

    pub fn from_shared(frames: Vec<Arc<RgbFrame>>, fps: (u32, u32)) -> Result<Self> {
        if let Some(first) = frames.first() {
            if let Some((i, _)) = frames.iter().enumerate().find(|(_, f)| !f.same_size(first)) {
                return Err(Error::DimsMismatch(format!(
                    "frame {i} is {}x{} but frame 0 is {}x{}",
                    frames[i].width, frames[i].height, first.width, first.height
                )));
            }
        }
        Ok(Self { frames, fps })
    }

    /// `count` copies of one frame sharing a single buffer.
    pub fn still(frame: RgbFrame, count: usize, fps: (u32, u32)) -> Self {
        let shared = Arc::new(frame);
        Self {
            frames: vec![shared; count],
            fps,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, index: usize) -> Option<&RgbFrame> {
        self.frames.get(index).map(|f| f.as_ref())
    }

    pub fn shared(&self) -> &[Arc<RgbFrame>] {
        &self.frames
    }

    pub fn iter(&self) -> impl Iterator<Item = &RgbFrame> {
        self.frames.iter().map(|f| f.as_ref())
    }

    pub fn dims(&self) -> Option<FrameDims> {
        self.frames.first().map(|f| FrameDims {
            width: f.width,
            height: f.height,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luma_uses_bt601_weights() {
        let f = RgbFrame::filled(2, 2, [255, 0, 0]);
        assert!((f.to_gray().data[0] - 0.299).abs() < 1e-6);
        let w = RgbFrame::filled(2, 2, [255, 255, 255]).to_gray();
        assert!((w.data[3] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sequence_rejects_mixed_sizes() {
        let a = RgbFrame::filled(4, 4, [0, 0, 0]);
        let b = RgbFrame::filled(4, 5, [0, 0, 0]);
        assert!(matches!(
            FrameSequence::new(vec![a, b], (30, 1)),
            Err(Error::DimsMismatch(_))
        ));
    }

    #[test]
    fn plane_length_checked() {
        assert!(RgbFrame::new(2, 2, vec![0; 11]).is_err());
        assert!(GrayFrame::new(2, 2, vec![0.0; 3]).is_err());
    }
}
