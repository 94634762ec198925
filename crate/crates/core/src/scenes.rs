//! Content-difference scene cut detection.
//!
//! Each consecutive frame pair is scored by the mean absolute difference of
//! their hue, saturation and value planes (all on a 0..255 scale), averaged
//! over the three channels. A cut is emitted where the score exceeds the
//! threshold, unless it would start a scene shorter than the minimum length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::frame::{FrameSequence, RgbFrame};

pub const DEFAULT_THRESHOLD: f64 = 27.0;
pub const DEFAULT_MIN_SCENE_LEN: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneConfig {
    pub threshold: f64,
    /// Cuts closer than this many frames to the previous cut are dropped.
    pub min_scene_len: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            min_scene_len: DEFAULT_MIN_SCENE_LEN,
        }
    }
}

/// Cut positions; a cut at `i` means frame `i` starts a new scene.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneBoundaryList {
    cut_indices: Vec<usize>,
    frame_count: usize,
}

impl SceneBoundaryList {
    pub fn new(cut_indices: Vec<usize>, frame_count: usize) -> Result<Self> {
        for (n, &c) in cut_indices.iter().enumerate() {
            if c == 0 || c >= frame_count {
                return Err(Error::validation(
                    format!("scene_cuts[{n}]"),
                    format!("cut {c} outside (0, {frame_count})"),
                ));
            }
            if n > 0 && c <= cut_indices[n - 1] {
                return Err(Error::validation(
                    format!("scene_cuts[{n}]"),
                    "cut indices must be strictly increasing",
                ));
            }
        }
        Ok(Self {
            cut_indices,
            frame_count,
        })
    }

    pub fn single_scene(frame_count: usize) -> Self {
        Self {
            cut_indices: Vec::new(),
            frame_count,
        }
    }

    pub fn cuts(&self) -> &[usize] {
        &self.cut_indices
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn scene_count(&self) -> usize {
        self.cut_indices.len() + 1
    }

    /// Zero-based scene containing frame `i`.
    pub fn scene_of(&self, i: usize) -> Result<usize> {
        if i >= self.frame_count {
            return Err(Error::Index {
                index: i,
                len: self.frame_count,
            });
        }
        Ok(self.cut_indices.partition_point(|&c| c <= i))
    }

    /// True iff no cut lies in `(min(i, j), max(i, j)]`.
    pub fn same_scene(&self, i: usize, j: usize) -> Result<bool> {
        Ok(self.scene_of(i)? == self.scene_of(j)?)
    }
}

pub fn same_scene(boundaries: &SceneBoundaryList, i: usize, j: usize) -> Result<bool> {
    boundaries.same_scene(i, j)
}

/// Hue, saturation and value planes, each on a 0..255 scale.
fn hsv_planes(frame: &RgbFrame) -> [Vec<f32>; 3] {
    let n = frame.width as usize * frame.height as usize;
    let mut h = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for p in frame.data.chunks_exact(3) {
        let (r, g, b) = (p[0] as f32, p[1] as f32, p[2] as f32);
        let max = r.max(g).max(b);
        let min = r.min(g).min(b);
        let delta = max - min;
        let hue_deg = if delta == 0.0 {
            0.0
        } else if max == r {
            60.0 * ((g - b) / delta).rem_euclid(6.0)
        } else if max == g {
            60.0 * ((b - r) / delta + 2.0)
        } else {
            60.0 * ((r - g) / delta + 4.0)
        };
        h.push(hue_deg / 360.0 * 255.0);
        s.push(if max == 0.0 { 0.0 } else { 255.0 * delta / max });
        v.push(max);
    }
    [h, s, v]
}

fn pair_score(a: &[Vec<f32>; 3], b: &[Vec<f32>; 3]) -> f64 {
    let mut total = 0.0;
    for c in 0..3 {
        let sum: f64 = a[c].iter().zip(&b[c]).map(|(x, y)| (x - y).abs() as f64).sum();
        total += sum / a[c].len().max(1) as f64;
    }
    total / 3.0
}

/// Content score of each pair `(i - 1, i)`; entry `i - 1` scores the change
/// into frame `i`.
pub fn content_scores(frames: &FrameSequence, exec: Execution) -> Vec<f64> {
    if frames.len() < 2 {
        return Vec::new();
    }
    let planes = exec.map(frames.shared(), |f| hsv_planes(f));
    exec.map_range(1..frames.len(), |i| pair_score(&planes[i - 1], &planes[i]))
}

pub fn detect_scenes(frames: &FrameSequence, cfg: &SceneConfig, exec: Execution) -> SceneBoundaryList {
    let scores = content_scores(frames, exec);
    let mut cuts: Vec<usize> = Vec::new();
    for (n, &score) in scores.iter().enumerate() {
        let i = n + 1;
        if score <= cfg.threshold {
            continue;
        }
        if let Some(&last) = cuts.last() {
            if i - last < cfg.min_scene_len {
                continue;
            }
        }
        cuts.push(i);
    }
    SceneBoundaryList {
        cut_indices: cuts,
        frame_count: frames.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(frames: Vec<RgbFrame>) -> FrameSequence {
        FrameSequence::new(frames, (30, 1)).unwrap()
    }

    #[test]
    fn identical_frames_have_no_cuts() {
        let s = FrameSequence::still(RgbFrame::filled(32, 32, [10, 200, 30]), 40, (30, 1));
        let b = detect_scenes(&s, &SceneConfig::default(), Execution::Sequential);
        assert!(b.cuts().is_empty());
        assert_eq!(b.frame_count(), 40);
    }

    #[test]
    fn single_frame_has_no_cuts() {
        let s = seq(vec![RgbFrame::filled(32, 32, [0, 0, 0])]);
        assert!(detect_scenes(&s, &SceneConfig::default(), Execution::Sequential).cuts().is_empty());
    }

    #[test]
    fn black_to_white_cut() {
        let mut frames = vec![RgbFrame::filled(32, 32, [0, 0, 0]); 10];
        frames.extend(vec![RgbFrame::filled(32, 32, [255, 255, 255]); 10]);
        let s = seq(frames);
        let scores = content_scores(&s, Execution::Sequential);
        assert!((scores[9] - 85.0).abs() < 1e-9);
        let b = detect_scenes(&s, &SceneConfig::default(), Execution::Parallel);
        assert_eq!(b.cuts(), &[10]);
    }

    #[test]
    fn slow_fade_has_no_cuts() {
        let frames = (0..60)
            .map(|t| {
                let v = (t as f64 * 255.0 / 59.0).round() as u8;
                RgbFrame::filled(16, 16, [v, v, v])
            })
            .collect();
        let s = seq(frames);
        assert!(content_scores(&s, Execution::Sequential).iter().all(|&x| x < 27.0));
        assert!(detect_scenes(&s, &SceneConfig::default(), Execution::Sequential).cuts().is_empty());
    }

    #[test]
    fn flicker_is_suppressed_by_min_scene_length() {
        // alternate every 5 frames: only cuts 15 apart survive
        let frames = (0..40)
            .map(|t| {
                let v = if (t / 5) % 2 == 0 { 0 } else { 255 };
                RgbFrame::filled(16, 16, [v, v, v])
            })
            .collect();
        let b = detect_scenes(&seq(frames), &SceneConfig::default(), Execution::Sequential);
        assert_eq!(b.cuts(), &[5, 20, 35]);
    }

    #[test]
    fn same_scene_examples() {
        let b = SceneBoundaryList::new(vec![10], 30).unwrap();
        assert!(b.same_scene(4, 4).unwrap());
        assert!(!b.same_scene(9, 10).unwrap());
        assert!(!b.same_scene(10, 9).unwrap());
        let b = SceneBoundaryList::new(vec![10, 20], 30).unwrap();
        assert!(b.same_scene(12, 19).unwrap());
        assert!(!b.same_scene(12, 20).unwrap());
        assert!(matches!(b.same_scene(0, 30), Err(Error::Index { .. })));
    }

    #[test]
    fn same_scene_partitions_exactly_at_cuts() {
        let b = SceneBoundaryList::new(vec![3, 7, 8], 12).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                let brute = !b.cuts().iter().any(|&c| c > i.min(j) && c <= i.max(j));
                assert_eq!(b.same_scene(i, j).unwrap(), brute);
                assert_eq!(b.same_scene(i, j).unwrap(), b.same_scene(j, i).unwrap());
            }
        }
    }

    #[test]
    fn invalid_cut_lists_rejected() {
        assert!(SceneBoundaryList::new(vec![0], 10).is_err());
        assert!(SceneBoundaryList::new(vec![10], 10).is_err());
        assert!(SceneBoundaryList::new(vec![5, 5], 10).is_err());
    }
}
