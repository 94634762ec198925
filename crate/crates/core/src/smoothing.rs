//! Inter-frame temporal filtering of sparse crop annotations.
//!
//! Every annotation of a track serves once as the anchor of a window of
//! `W` neighbouring annotations (window measured in box ordinals). For each
//! anchor `k`:
//!
//! 1. the ROI center of every neighbour `i` is warped into the anchor frame by
//!    chained Lucas-Kanade tracking through all intermediate native frames;
//!    the size ratio `r` is carried over unwarped;
//! 2. each neighbour gets the Hamming weight
//!    `w_i = 0.54 + 0.46·cos(2π(i − k) / W)`;
//! 3. neighbours from another scene, neighbours whose tracking failed and
//!    warped centers farther than `radius_factor` times the anchor box width
//!    from the anchor center get weight 0;
//! 4. the refined box is the weight-normalized mean of `(x, y, r)` over the
//!    remaining samples, summed over `i ∈ [max(k − ⌊W/2⌋, 1), min(k + ⌊W/2⌋, N)]`.
//!
//! All anchors read the original annotations, so the result does not depend on
//! the order anchors are processed in.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{CropBox, FrameDims, Point};
use crate::motion::{chain_track, chain_track_visit, FlowFrames, TrackConfig};
use crate::scenes::SceneBoundaryList;

pub const DEFAULT_WINDOW: usize = 15;
pub const DEFAULT_STRIDE: usize = 6;
pub const DEFAULT_RADIUS_FACTOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Raw,
    Smoothed,
    Interpolated,
    Predicted,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Raw => "raw",
            Provenance::Smoothed => "smoothed",
            Provenance::Interpolated => "interpolated",
            Provenance::Predicted => "predicted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "raw" => Some(Provenance::Raw),
            "smoothed" => Some(Provenance::Smoothed),
            "interpolated" => Some(Provenance::Interpolated),
            "predicted" => Some(Provenance::Predicted),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    /// 1-based position in the track.
    pub ordinal: usize,
    /// Native frame index the box was drawn on.
    pub frame_index: usize,
    pub annotator_id: String,
    pub crop: CropBox,
    /// Number of tries the annotator used, when known.
    pub attempt_count: Option<u8>,
}

/// One video's sparse sequence of annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationTrack {
    pub video_id: String,
    pub dims: FrameDims,
    pub frame_count: usize,
    /// Frames between consecutive annotations; `None` for irregular tracks.
    pub stride: Option<usize>,
    pub scenes: Option<SceneBoundaryList>,
    pub provenance: Provenance,
    pub annotations: Vec<Annotation>,
}

impl AnnotationTrack {
    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }

    /// Annotation with 1-based `ordinal`.
    pub fn get(&self, ordinal: usize) -> Option<&Annotation> {
        ordinal.checked_sub(1).and_then(|i| self.annotations.get(i))
    }

    pub fn boxes(&self) -> impl Iterator<Item = &CropBox> {
        self.annotations.iter().map(|a| &a.crop)
    }

    /// Scene list of this track, or a single scene when none is attached.
    pub fn scene_list(&self) -> SceneBoundaryList {
        self.scenes
            .clone()
            .unwrap_or_else(|| SceneBoundaryList::single_scene(self.frame_count))
    }

    /// Checks the structural invariants; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.frame_count == 0 {
            return Err(Error::validation("frame_count", "must be positive"));
        }
        if self.stride == Some(0) {
            return Err(Error::validation("stride", "must be positive"));
        }
        if let Some(s) = &self.scenes {
            if s.frame_count() != self.frame_count {
                return Err(Error::validation(
                    "scene_cuts",
                    format!(
                        "scene list covers {} frames but the video has {}",
                        s.frame_count(),
                        self.frame_count
                    ),
                ));
            }
        }
        let mut prev_frame = None;
        for (n, a) in self.annotations.iter().enumerate() {
            let path = |field: &str| format!("annotations[{n}].{field}");
            if a.ordinal != n + 1 {
                return Err(Error::validation(
                    path("ordinal"),
                    format!("expected {} (ordinals must be contiguous from 1), got {}", n + 1, a.ordinal),
                ));
            }
            if a.frame_index >= self.frame_count {
                return Err(Error::validation(
                    path("frame_index"),
                    format!("{} is beyond the last frame {}", a.frame_index, self.frame_count - 1),
                ));
            }
            if let Some(p) = prev_frame {
                if a.frame_index < p {
                    return Err(Error::validation(path("frame_index"), "frame indices must not decrease"));
                }
                if self.stride.is_some() && a.frame_index == p {
                    return Err(Error::validation(path("frame_index"), "repeated frame in a regular track"));
                }
            }
            if let Some(s) = self.stride {
                if a.frame_index != s * (a.ordinal - 1) {
                    return Err(Error::validation(
                        path("frame_index"),
                        format!("stride {s} requires frame {} for ordinal {}", s * (a.ordinal - 1), a.ordinal),
                    ));
                }
            }
            if !(a.crop.cx >= 0.0 && a.crop.cx <= self.dims.width as f64) {
                return Err(Error::validation(path("cx"), format!("{} outside [0, {}]", a.crop.cx, self.dims.width)));
            }
            if !(a.crop.cy >= 0.0 && a.crop.cy <= self.dims.height as f64) {
                return Err(Error::validation(path("cy"), format!("{} outside [0, {}]", a.crop.cy, self.dims.height)));
            }
            if let Err(e) = a.crop.validate_for(self.dims) {
                return Err(Error::validation(path("r"), e.to_string()));
            }
            if let Some(c) = a.attempt_count {
                if !(1..=3).contains(&c) {
                    return Err(Error::validation(path("attempt_count"), format!("{c} outside 1..=3")));
                }
            }
            prev_frame = Some(a.frame_index);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    /// Window size `W`, in annotations.
    pub window_size: usize,
    /// Samples whose Hamming weight falls below this are dropped.
    pub weight_floor: f64,
    /// Gating radius as a fraction of the anchor's realized box width.
    pub radius_factor: f64,
    pub scene_gating: bool,
    pub motion: TrackConfig,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            window_size: DEFAULT_WINDOW,
            weight_floor: 0.0,
            radius_factor: DEFAULT_RADIUS_FACTOR,
            scene_gating: true,
            motion: TrackConfig::default(),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_size < 1 {
            return Err(Error::Config("window size must be >= 1".into()));
        }
        if !(self.radius_factor > 0.0) {
            return Err(Error::Config("radius factor must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.weight_floor) {
            return Err(Error::Config("weight floor must lie in [0, 1]".into()));
        }
        self.motion.validate()
    }

    pub fn half_window(&self) -> usize {
        self.window_size / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exclusion {
    OutOfRadius,
    SceneCut,
    TrackFailure,
    BelowWeightFloor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedSample {
    pub ordinal: usize,
    pub weight: f64,
    pub warped_center: Point,
    pub r: f64,
    pub exclusion: Option<Exclusion>,
}

impl WeightedSample {
    pub fn is_excluded(&self) -> bool {
        self.exclusion.is_some()
    }

    fn exclude(&mut self, why: Exclusion) {
        self.exclusion = Some(why);
        self.weight = 0.0;
    }
}

/// Hamming-window weight of ordinal `i` relative to anchor `k`.
pub fn hamming_weight(i: usize, k: usize, window: usize) -> Result<f64> {
    let half = window / 2;
    let d = i.abs_diff(k);
    if window == 0 || d > half {
        return Err(Error::OutOfWindow {
            ordinal: i,
            anchor: k,
            half,
        });
    }
    let offset = i as f64 - k as f64;
    Ok(0.54 + 0.46 * (2.0 * std::f64::consts::PI * offset / window as f64).cos())
}

/// Inclusive ordinal range of the window around `k` in a track of `n`.
pub fn window_bounds(k: usize, n: usize, window: usize) -> (usize, usize) {
    let half = window / 2;
    (k.saturating_sub(half).max(1), (k + half).min(n))
}

fn check_anchor(track: &AnnotationTrack, k: usize) -> Result<()> {
    if k < 1 || k > track.len() {
        return Err(Error::Index {
            index: k,
            len: track.len(),
        });
    }
    Ok(())
}

fn check_coverage(track: &AnnotationTrack, frames: &FlowFrames) -> Result<()> {
    if let Some(last) = track.annotations.last() {
        if last.frame_index >= frames.len() {
            return Err(Error::DimsMismatch(format!(
                "video '{}' has {} frames but annotation {} is on frame {}",
                track.video_id,
                frames.len(),
                last.ordinal,
                last.frame_index
            )));
        }
    }
    if let Some(f) = frames.frame(0) {
        if f.width != track.dims.width || f.height != track.dims.height {
            return Err(Error::DimsMismatch(format!(
                "video '{}' frames are {}x{} but annotations declare {}",
                track.video_id, f.width, f.height, track.dims
            )));
        }
    }
    Ok(())
}

/// Outcome of warping one neighbour center into an anchor frame.
#[derive(Debug, Clone, Copy)]
struct Warp {
    point: Point,
    converged: bool,
}

/// Builds the sample for neighbour `i` of anchor `k`. `warp` is only invoked
/// for samples that survive the scene and weight-floor checks.
fn neighbour_sample(
    track: &AnnotationTrack,
    boundaries: &SceneBoundaryList,
    i: usize,
    k: usize,
    cfg: &FilterConfig,
    warp: impl FnOnce(&Annotation, &Annotation) -> Result<Warp>,
) -> Result<WeightedSample> {
    let src = &track.annotations[i - 1];
    let anchor = &track.annotations[k - 1];
    let mut sample = WeightedSample {
        ordinal: i,
        weight: hamming_weight(i, k, cfg.window_size)?,
        warped_center: src.crop.center(),
        r: src.crop.r,
        exclusion: None,
    };
    if i == k {
        return Ok(sample);
    }
    if cfg.scene_gating && !boundaries.same_scene(src.frame_index, anchor.frame_index)? {
        sample.exclude(Exclusion::SceneCut);
        return Ok(sample);
    }
    if sample.weight < cfg.weight_floor {
        sample.exclude(Exclusion::BelowWeightFloor);
        return Ok(sample);
    }
    if src.frame_index != anchor.frame_index {
        let w = warp(src, anchor)?;
        sample.warped_center = w.point;
        if !w.converged {
            sample.exclude(Exclusion::TrackFailure);
        }
    }
    Ok(sample)
}

/// Warps the centers of every annotation in the window of anchor `k` into the
/// anchor frame. The anchor itself is included with weight 1.
pub fn warp_neighbors(
    track: &AnnotationTrack,
    frames: &FlowFrames,
    boundaries: &SceneBoundaryList,
    k: usize,
    cfg: &FilterConfig,
) -> Result<Vec<WeightedSample>> {
    cfg.validate()?;
    check_anchor(track, k)?;
    check_coverage(track, frames)?;
    let (lo, hi) = window_bounds(k, track.len(), cfg.window_size);
    (lo..=hi)
        .map(|i| {
            neighbour_sample(track, boundaries, i, k, cfg, |src, anchor| {
                let r = chain_track(frames, src.crop.center(), src.frame_index, anchor.frame_index, &cfg.motion)?;
                Ok(Warp {
                    point: r.point,
                    converged: r.converged,
                })
            })
        })
        .collect()
}

/// Excludes samples whose warped center lies outside the closed disk of
/// radius `radius_factor · anchor width` around the anchor center. The anchor
/// sample is never excluded.
pub fn gate_candidates(
    samples: &[WeightedSample],
    anchor: &Annotation,
    dims: FrameDims,
    cfg: &FilterConfig,
) -> Vec<WeightedSample> {
    let radius = cfg.radius_factor * anchor.crop.width_px(dims);
    let center = anchor.crop.center();
    samples
        .iter()
        .map(|s| {
            let mut s = *s;
            if s.ordinal != anchor.ordinal && !s.is_excluded() && s.warped_center.distance(&center) > radius {
                s.exclude(Exclusion::OutOfRadius);
            }
            s
        })
        .collect()
}

/// Weight-normalized mean of the included samples' `(x, y, r)`.
pub fn aggregate(samples: &[WeightedSample], k: usize) -> Result<CropBox> {
    match samples.iter().find(|s| s.ordinal == k) {
        Some(a) if !a.is_excluded() && a.weight > 0.0 => {}
        _ => return Err(Error::NoWeight),
    }
    let (mut sw, mut sx, mut sy, mut sr) = (0.0, 0.0, 0.0, 0.0);
    for s in samples.iter().filter(|s| !s.is_excluded()) {
        sw += s.weight;
        sx += s.weight * s.warped_center.x;
        sy += s.weight * s.warped_center.y;
        sr += s.weight * s.r;
    }
    if !(sw > 0.0) {
        return Err(Error::NoWeight);
    }
    Ok(CropBox::new(sx / sw, sy / sw, (sr / sw).min(1.0)))
}

/// Per-source-ordinal tracking results keyed by the target frame index.
type WarpTable = BTreeMap<usize, Warp>;

/// Tracks annotation `i` once towards each side, recording the state at every
/// frame an anchor will ask for. Because the chain to a nearer anchor is a
/// prefix of the chain to a farther one, this yields exactly what
/// `chain_track` would for each anchor separately.
fn warp_table(
    track: &AnnotationTrack,
    frames: &FlowFrames,
    boundaries: &SceneBoundaryList,
    i: usize,
    cfg: &FilterConfig,
) -> Result<WarpTable> {
    let src = &track.annotations[i - 1];
    let (lo, hi) = window_bounds(i, track.len(), cfg.window_size);
    let mut before = Vec::new();
    let mut after = Vec::new();
    for k in lo..=hi {
        if k == i {
            continue;
        }
        let anchor = &track.annotations[k - 1];
        if cfg.scene_gating && !boundaries.same_scene(src.frame_index, anchor.frame_index)? {
            continue;
        }
        if hamming_weight(i, k, cfg.window_size)? < cfg.weight_floor {
            continue;
        }
        match anchor.frame_index.cmp(&src.frame_index) {
            std::cmp::Ordering::Less => before.push(anchor.frame_index),
            std::cmp::Ordering::Greater => after.push(anchor.frame_index),
            std::cmp::Ordering::Equal => {}
        }
    }
    let mut table = WarpTable::new();
    let p = src.crop.center();
    for (targets, far) in [
        (&before, before.iter().min().copied()),
        (&after, after.iter().max().copied()),
    ] {
        let Some(far) = far else { continue };
        let end = chain_track_visit(frames, p, src.frame_index, far, &cfg.motion, |frame, st| {
            if targets.contains(&frame) {
                table.insert(
                    frame,
                    Warp {
                        point: st.point,
                        converged: true,
                    },
                );
            }
        })?;
        if !end.converged {
            for &t in targets {
                table.entry(t).or_insert(Warp {
                    point: end.point,
                    converged: false,
                });
            }
        }
    }
    Ok(table)
}

/// Samples of anchor `k` after gating, using precomputed warps.
fn anchor_samples(
    track: &AnnotationTrack,
    boundaries: &SceneBoundaryList,
    tables: &[WarpTable],
    k: usize,
    cfg: &FilterConfig,
) -> Result<Vec<WeightedSample>> {
    let (lo, hi) = window_bounds(k, track.len(), cfg.window_size);
    let samples = (lo..=hi)
        .map(|i| {
            neighbour_sample(track, boundaries, i, k, cfg, |_, anchor| {
                tables[i - 1]
                    .get(&anchor.frame_index)
                    .copied()
                    .ok_or_else(|| Error::InsufficientData(format!("no warp recorded for {i} -> {k}")))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(gate_candidates(&samples, &track.annotations[k - 1], track.dims, cfg))
}

/// Refines every annotation of `track`. The output keeps ordinals, frame
/// indices and annotator ids; only the boxes change.
pub fn smooth_track(
    track: &AnnotationTrack,
    frames: &FlowFrames,
    boundaries: &SceneBoundaryList,
    cfg: &FilterConfig,
    exec: Execution,
) -> Result<AnnotationTrack> {
    cfg.validate()?;
    if track.is_empty() {
        return Err(Error::EmptyTrack);
    }
    check_coverage(track, frames)?;
    let n = track.len();
    let tables = exec.try_map_range(1..n + 1, |i| warp_table(track, frames, boundaries, i, cfg))?;
    let boxes = exec.try_map_range(1..n + 1, |k| {
        let samples = anchor_samples(track, boundaries, &tables, k, cfg)?;
        aggregate(&samples, k)
    })?;
    let mut out = track.clone();
    out.provenance = Provenance::Smoothed;
    for (a, b) in out.annotations.iter_mut().zip(boxes) {
        a.crop = b;
    }
    Ok(out)
}

/// Gated samples of one anchor, for inspection and reporting.
pub fn anchor_report(
    track: &AnnotationTrack,
    frames: &FlowFrames,
    boundaries: &SceneBoundaryList,
    k: usize,
    cfg: &FilterConfig,
) -> Result<Vec<WeightedSample>> {
    let samples = warp_neighbors(track, frames, boundaries, k, cfg)?;
    Ok(gate_candidates(&samples, &track.annotations[k - 1], track.dims, cfg))
}

/// One box per native frame by component-wise linear interpolation of
/// `(cx, cy, r)`, holding the first and last annotations constant outside
/// the annotated span.
pub fn interpolate_dense(track: &AnnotationTrack, frame_count: usize) -> Result<Vec<CropBox>> {
    let first = track.annotations.first().ok_or(Error::EmptyTrack)?;
    let last = track.annotations.last().ok_or(Error::EmptyTrack)?;
    if frame_count <= last.frame_index {
        return Err(Error::DimsMismatch(format!(
            "{frame_count} frames requested but the last annotation is on frame {}",
            last.frame_index
        )));
    }
    let mut out = Vec::with_capacity(frame_count);
    out.extend(std::iter::repeat_n(first.crop, first.frame_index));
    for pair in track.annotations.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let span = b.frame_index - a.frame_index;
        for t in 0..span {
            let u = t as f64 / span as f64;
            out.push(CropBox::new(
                a.crop.cx + u * (b.crop.cx - a.crop.cx),
                a.crop.cy + u * (b.crop.cy - a.crop.cy),
                a.crop.r + u * (b.crop.r - a.crop.r),
            ));
        }
    }
    out.extend(std::iter::repeat_n(last.crop, frame_count - last.frame_index));
    Ok(out)
}
