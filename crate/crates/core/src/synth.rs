//! Seeded synthetic videos and annotation tracks for tests, benches and
//! demos.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::frame::{FrameSequence, RgbFrame};
use crate::geometry::{CropBox, FrameDims, PORTRAIT_ASPECT};
use crate::scenes::SceneBoundaryList;
use crate::smoothing::{Annotation, AnnotationTrack, Provenance, DEFAULT_STRIDE};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
struct Wave {
    kx: f64,
    ky: f64,
    phase: f64,
    amp: [f64; 3],
}

/// Band-limited random RGB texture: a sum of oriented sinusoids with periods
/// of 12 to 48 px, rich enough in gradients for point tracking.
#[derive(Debug, Clone)]
pub struct Texture {
    waves: Vec<Wave>,
    base: [f64; 3],
}

impl Texture {
    pub fn new(seed: u64) -> Self {
        let mut r = rng(seed);
        let waves = (0..8)
            .map(|_| {
                let theta = r.random_range(0.0..PI);
                let period = r.random_range(12.0..48.0);
                let k = 2.0 * PI / period;
                let mut amp = [0.0; 3];
                for a in &mut amp {
                    *a = r.random_range(8.0..18.0);
                }
                Wave {
                    kx: k * theta.cos(),
                    ky: k * theta.sin(),
                    phase: r.random_range(0.0..2.0 * PI),
                    amp,
                }
            })
            .collect();
        let base = [r.random_range(70.0..180.0), r.random_range(70.0..180.0), r.random_range(70.0..180.0)];
        Self { waves, base }
    }

    /// Texture sampled with its origin moved to `offset`.
    pub fn render(&self, width: u32, height: u32, offset: (f64, f64)) -> RgbFrame {
        RgbFrame::from_fn(width, height, |x, y| {
            let (px, py) = (x as f64 - offset.0, y as f64 - offset.1);
            let mut c = self.base;
            for w in &self.waves {
                let s = (w.kx * px + w.ky * py + w.phase).sin();
                for ch in 0..3 {
                    c[ch] += w.amp[ch] * s;
                }
            }
            c.map(|v| v.round().clamp(0.0, 255.0) as u8)
        })
    }
}

/// A video that shows one texture for its whole length, sharing one frame
/// buffer.
pub fn static_video(dims: FrameDims, frame_count: usize, seed: u64) -> FrameSequence {
    FrameSequence::still(Texture::new(seed).render(dims.width, dims.height, (0.0, 0.0)), frame_count, (30, 1))
}

/// Texture translating by `velocity` px/frame. With `cut_at`, frames from that
/// index on show an unrelated, darker texture.
pub fn panning_video(dims: FrameDims, frame_count: usize, seed: u64, velocity: (f64, f64), cut_at: Option<usize>) -> FrameSequence {
    let first = Texture::new(seed);
    let mut second = Texture::new(seed ^ 0x9e37_79b9_7f4a_7c15);
    second.base = first.base.map(|b| (b - 60.0).max(10.0));
    second.base.rotate_left(1);
    let frames = (0..frame_count)
        .map(|t| {
            let tex = if cut_at.is_some_and(|c| t >= c) { &second } else { &first };
            let off = (velocity.0 * t as f64, velocity.1 * t as f64);
            Arc::new(tex.render(dims.width, dims.height, off))
        })
        .collect();
    FrameSequence::from_shared(frames, (30, 1)).expect("frames share dims")
}

/// Parameters of a synthetic annotation track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackSpec {
    pub dims: FrameDims,
    pub annotations: usize,
    pub stride: usize,
    pub r: f64,
    /// Amplitude of the sinusoidal center trajectory, in px.
    pub amplitude: (f64, f64),
    /// Trajectory period, in annotations.
    pub period: f64,
    /// Constant drift of the true center, in px per native frame.
    pub drift: (f64, f64),
    /// Standard deviation of iid Gaussian noise on each center coordinate.
    pub noise_sigma: f64,
    /// Relative standard deviation of noise on `r`.
    pub r_noise: f64,
}

impl TrackSpec {
    /// 30 annotations every 6 frames on a 1080p frame.
    pub fn full_hd() -> Self {
        Self {
            dims: FrameDims::FULL_HD,
            annotations: 30,
            stride: DEFAULT_STRIDE,
            r: 0.6,
            amplitude: (160.0, 60.0),
            period: 40.0,
            drift: (0.0, 0.0),
            noise_sigma: 60.0,
            r_noise: 0.0,
        }
    }

    pub fn frame_count(&self) -> usize {
        self.stride * self.annotations
    }
}

/// Center range that keeps a box of ratio `r` inside the frame.
fn center_limits(dims: FrameDims, r: f64) -> ((f64, f64), (f64, f64)) {
    let h = r * dims.height as f64;
    let w = h * PORTRAIT_ASPECT;
    ((w / 2.0, dims.width as f64 - w / 2.0), (h / 2.0, dims.height as f64 - h / 2.0))
}

/// Noise-free center of annotation `n` (0-based).
pub fn true_center(spec: &TrackSpec, phase: f64, n: usize) -> (f64, f64) {
    let t = 2.0 * PI * n as f64 / spec.period + phase;
    let frame = (n * spec.stride) as f64;
    (
        spec.dims.width as f64 / 2.0 + spec.amplitude.0 * t.sin() + spec.drift.0 * frame,
        spec.dims.height as f64 / 2.0 + spec.amplitude.1 * (0.7 * t).cos() + spec.drift.1 * frame,
    )
}

/// Ground-truth and noisy tracks for one video. Annotator ids are drawn from
/// a pool of 20 subjects.
pub fn track_pair(spec: &TrackSpec, video_id: &str, seed: u64) -> (AnnotationTrack, AnnotationTrack) {
    let mut r = rng(seed);
    let phase = r.random_range(0.0..2.0 * PI);
    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0)).expect("finite sigma");
    let r_noise = Normal::new(0.0, spec.r_noise.max(0.0)).expect("finite sigma");
    let mut truth = Vec::with_capacity(spec.annotations);
    let mut noisy = Vec::with_capacity(spec.annotations);
    for n in 0..spec.annotations {
        let (cx, cy) = true_center(spec, phase, n);
        let ((x0, x1), (y0, y1)) = center_limits(spec.dims, spec.r);
        let annotator_id = format!("s{:02}", r.random_range(1..=20));
        truth.push(Annotation {
            ordinal: n + 1,
            frame_index: n * spec.stride,
            annotator_id: annotator_id.clone(),
            crop: CropBox::new(cx.clamp(x0, x1), cy.clamp(y0, y1), spec.r),
            attempt_count: None,
        });
        let rr = (spec.r * (1.0 + r_noise.sample(&mut r))).clamp(0.2, 1.0);
        let ((nx0, nx1), (ny0, ny1)) = center_limits(spec.dims, rr);
        noisy.push(Annotation {
            ordinal: n + 1,
            frame_index: n * spec.stride,
            annotator_id,
            crop: CropBox::new(
                (cx + noise.sample(&mut r)).clamp(nx0, nx1),
                (cy + noise.sample(&mut r)).clamp(ny0, ny1),
                rr,
            ),
            attempt_count: Some(r.random_range(1..=3)),
        });
    }
    let make = |annotations, provenance| AnnotationTrack {
        video_id: video_id.to_string(),
        dims: spec.dims,
        frame_count: spec.frame_count(),
        stride: Some(spec.stride),
        scenes: None,
        provenance,
        annotations,
    };
    (make(truth, Provenance::Predicted), make(noisy, Provenance::Raw))
}

/// A small multi-video fixture: panning textured videos with matching
/// ground-truth and noisy tracks. Every third video contains a scene cut.
#[derive(Debug, Clone)]
pub struct FixtureSet {
    pub videos: Vec<(String, FrameSequence)>,
    pub raw: Vec<AnnotationTrack>,
    pub ground_truth: Vec<AnnotationTrack>,
}

pub fn fixture_set(seed: u64, count: usize) -> Result<FixtureSet> {
    let dims = FrameDims::new(320, 180)?;
    let mut videos = Vec::with_capacity(count);
    let mut raw = Vec::with_capacity(count);
    let mut ground_truth = Vec::with_capacity(count);
    let mut r = rng(seed);
    for v in 0..count {
        let id = format!("synth-{v:03}");
        let video_seed: u64 = r.random();
        let velocity = (r.random_range(-1.0..1.0), r.random_range(-0.5..0.5));
        let spec = TrackSpec {
            dims,
            annotations: 10,
            stride: DEFAULT_STRIDE,
            r: 0.7,
            amplitude: (40.0, 8.0),
            period: 12.0,
            drift: velocity,
            noise_sigma: 14.0,
            r_noise: 0.04,
        };
        let cut = (v % 3 == 2).then_some(33);
        let (mut gt, mut noisy) = track_pair(&spec, &id, video_seed);
        if let Some(c) = cut {
            let s = SceneBoundaryList::new(vec![c], spec.frame_count())?;
            gt.scenes = Some(s.clone());
            noisy.scenes = Some(s);
        }
        videos.push((id, panning_video(dims, spec.frame_count(), video_seed, velocity, cut)));
        raw.push(noisy);
        ground_truth.push(gt);
    }
    Ok(FixtureSet {
        videos,
        raw,
        ground_truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::scenes::{detect_scenes, SceneConfig};

    #[test]
    fn texture_is_seeded() {
        let a = Texture::new(3).render(32, 32, (0.0, 0.0));
        assert_eq!(a, Texture::new(3).render(32, 32, (0.0, 0.0)));
        assert_ne!(a, Texture::new(4).render(32, 32, (0.0, 0.0)));
    }

    #[test]
    fn panning_shifts_content() {
        let v = panning_video(FrameDims::new(64, 48).unwrap(), 3, 1, (2.0, 1.0), None);
        assert_eq!(v.frame(0).unwrap().pixel(10, 10), v.frame(1).unwrap().pixel(12, 11));
    }

    #[test]
    fn tracks_are_valid_and_reproducible() {
        let spec = TrackSpec::full_hd();
        let (gt, noisy) = track_pair(&spec, "v", 11);
        gt.validate().unwrap();
        noisy.validate().unwrap();
        assert_eq!(track_pair(&spec, "v", 11), (gt, noisy));
    }

    #[test]
    fn fixture_cuts_are_detectable() {
        let set = fixture_set(5, 3).unwrap();
        for (t, (_, v)) in set.raw.iter().zip(&set.videos) {
            t.validate().unwrap();
            let found = detect_scenes(v, &SceneConfig::default(), Execution::Sequential);
            assert_eq!(&found, &t.scene_list());
        }
    }
}
