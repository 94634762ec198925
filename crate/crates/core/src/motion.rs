//! Pyramidal Lucas-Kanade single-point tracking.
//!
//! Points are tracked coarse-to-fine: the displacement estimated on pyramid
//! level `L` seeds level `L - 1`. On each level the classic iterative LK
//! update `G·η = Σ ∇I·(I − J)` is solved over a square window, with the
//! spatial gradient matrix `G` computed once from the source patch.
//! Sub-pixel samples use bilinear interpolation with clamp-to-edge.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::frame::{FrameSequence, GrayFrame, RgbFrame};
use crate::geometry::Point;

/// Minimum eigenvalue of the window-normalized structure tensor below which a
/// window is considered textureless.
pub const MIN_EIGENVALUE: f64 = 1e-4;

/// Converts the tensor of `[0, 1]` luma gradients into the scale of the
/// OpenCV `minEigThreshold` convention (8-bit intensities, Scharr-scaled
/// derivatives, `2^-20` fixed-point factor), where the threshold above is
/// customary.
pub const TENSOR_SCALE: f64 = (32.0 * 255.0) * (32.0 * 255.0) / (1u64 << 20) as f64;

/// Smallest window side accepted anywhere (radius 2).
const MIN_WINDOW_SIDE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackConfig {
    pub pyramid_levels: usize,
    /// Half-width of the square window; the window side is `2·radius + 1`.
    pub window_radius: usize,
    pub max_iterations: usize,
    /// Convergence threshold on the update norm, in level pixels.
    pub epsilon: f64,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self {
            pyramid_levels: 3,
            window_radius: 10,
            max_iterations: 30,
            epsilon: 0.01,
        }
    }
}

impl TrackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pyramid_levels < 1 {
            return Err(Error::Config("pyramid_levels must be >= 1".into()));
        }
        if self.window_radius < 2 {
            return Err(Error::Config("window_radius must be >= 2".into()));
        }
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        Ok(())
    }

    pub fn window_side(&self) -> usize {
        2 * self.window_radius + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackResult {
    pub point: Point,
    pub converged: bool,
    /// Mean absolute photometric error over the final level-0 window.
    pub residual: f64,
}

/// Outcome of tracking through a run of consecutive frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainResult {
    /// Final point, or the last successfully tracked point on failure.
    pub point: Point,
    pub converged: bool,
    /// Residual of the last successful hop.
    pub residual: f64,
    /// Hops completed successfully.
    pub hops: usize,
    /// Zero-based index of the hop that failed, counted from `from_idx`.
    pub failed_hop: Option<usize>,
}

fn check_pyramid_size(width: u32, height: u32, levels: usize, window_side: usize) -> Result<()> {
    if levels < 1 {
        return Err(Error::Pyramid("at least one level is required".into()));
    }
    let need = (1usize << (levels - 1)) * window_side;
    let side = width.min(height) as usize;
    if side < need {
        return Err(Error::Pyramid(format!(
            "{width}x{height} frame is too small for {levels} levels with a {window_side} px window (needs {need} px)"
        )));
    }
    Ok(())
}

/// 2x decimation after a separable `[1 4 6 4 1] / 16` low-pass.
fn pyr_down(src: &GrayFrame) -> GrayFrame {
    let (w, h) = (src.width as usize, src.height as usize);
    let (ow, oh) = ((w + 1) / 2, (h + 1) / 2);
    const K: [f32; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;

    // Horizontal pass at output column positions.
    let mut tmp = vec![0f32; ow * h];
    for y in 0..h {
        let row = &src.data[y * w..(y + 1) * w];
        for ox in 0..ow {
            let cx = 2 * ox as isize;
            let mut acc = 0f32;
            for (t, k) in K.iter().enumerate() {
                acc += k * row[clamp(cx + t as isize - 2, w)];
            }
            tmp[y * ow + ox] = acc;
        }
    }
    let mut data = vec![0f32; ow * oh];
    for oy in 0..oh {
        let cy = 2 * oy as isize;
        for (t, k) in K.iter().enumerate() {
            let sy = clamp(cy + t as isize - 2, h);
            let srow = &tmp[sy * ow..(sy + 1) * ow];
            let drow = &mut data[oy * ow..(oy + 1) * ow];
            for (d, s) in drow.iter_mut().zip(srow) {
                *d += k * s;
            }
        }
    }
    GrayFrame {
        width: ow as u32,
        height: oh as u32,
        data,
    }
}

/// Level 0 is the input; each further level halves both sides.
pub fn build_pyramid(frame: &GrayFrame, levels: usize) -> Result<Vec<GrayFrame>> {
    check_pyramid_size(frame.width, frame.height, levels, MIN_WINDOW_SIDE)?;
    Ok(build_unchecked(frame, levels))
}

fn build_unchecked(frame: &GrayFrame, levels: usize) -> Vec<GrayFrame> {
    let mut out = Vec::with_capacity(levels);
    out.push(frame.clone());
    for l in 1..levels {
        let next = pyr_down(&out[l - 1]);
        out.push(next);
    }
    out
}

/// Samples a `(2·half + 1)²` patch centered on `(cx, cy)` with bilinear
/// interpolation. All samples share the same fractional offset, so the
/// weights are computed once.
fn sample_patch(img: &GrayFrame, cx: f64, cy: f64, half: usize, out: &mut Vec<f32>) {
    let (w, h) = (img.width as isize, img.height as isize);
    let fx0 = cx.floor();
    let fy0 = cy.floor();
    let ax = (cx - fx0) as f32;
    let ay = (cy - fy0) as f32;
    let (ix, iy) = (fx0 as isize, fy0 as isize);
    let side = 2 * half + 1;
    out.clear();
    out.reserve(side * side);
    let half = half as isize;
    let cxs: Vec<(usize, usize)> = (-half..=half)
        .map(|d| {
            let x = ix + d;
            (x.clamp(0, w - 1) as usize, (x + 1).clamp(0, w - 1) as usize)
        })
        .collect();
    let stride = img.width as usize;
    for dy in -half..=half {
        let y = iy + dy;
        let y0 = y.clamp(0, h - 1) as usize * stride;
        let y1 = (y + 1).clamp(0, h - 1) as usize * stride;
        let r0 = &img.data[y0..y0 + stride];
        let r1 = &img.data[y1..y1 + stride];
        for &(x0, x1) in &cxs {
            let top = r0[x0] + ax * (r0[x1] - r0[x0]);
            let bot = r1[x0] + ax * (r1[x1] - r1[x0]);
            out.push(top + ay * (bot - top));
        }
    }
}

struct LevelOutcome {
    flow: Point,
    converged: bool,
    singular: bool,
    residual: f64,
}

/// One LK solve at a single pyramid level. `p` and `guess` are in level
/// coordinates.
fn track_level(
    src: &GrayFrame,
    dst: &GrayFrame,
    p: Point,
    guess: Point,
    cfg: &TrackConfig,
    src_patch: &mut Vec<f32>,
    dst_patch: &mut Vec<f32>,
) -> LevelOutcome {
    let r = cfg.window_radius;
    let side = 2 * r + 1;
    let ps = side + 2;
    sample_patch(src, p.x, p.y, r + 1, src_patch);

    // Gradients of the interpolated source patch, window-interior only.
    let n = (side * side) as f64;
    let mut grads = Vec::with_capacity(side * side);
    let (mut gxx, mut gxy, mut gyy) = (0f64, 0f64, 0f64);
    for j in 0..side {
        for i in 0..side {
            let c = (j + 1) * ps + (i + 1);
            let ix = 0.5 * (src_patch[c + 1] - src_patch[c - 1]) as f64;
            let iy = 0.5 * (src_patch[c + ps] - src_patch[c - ps]) as f64;
            gxx += ix * ix;
            gxy += ix * iy;
            gyy += iy * iy;
            grads.push((src_patch[c], ix, iy));
        }
    }
    let (a, b, c) = (gxx / n, gxy / n, gyy / n);
    let min_eig = 0.5 * (a + c) - (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let det = a * c - b * b;
    if min_eig * TENSOR_SCALE < MIN_EIGENVALUE || det <= 0.0 {
        return LevelOutcome {
            flow: guess,
            converged: false,
            singular: true,
            residual: f64::NAN,
        };
    }

    let mut v = Point::default();
    let mut converged = false;
    let mut residual = 0.0;
    for _ in 0..cfg.max_iterations {
        let q = p + guess + v;
        sample_patch(dst, q.x, q.y, r, dst_patch);
        let (mut bx, mut by, mut abs_err) = (0f64, 0f64, 0f64);
        for (&(i, ix, iy), &jv) in grads.iter().zip(dst_patch.iter()) {
            let d = (i - jv) as f64;
            bx += ix * d;
            by += iy * d;
            abs_err += d.abs();
        }
        residual = abs_err / n;
        let (bx, by) = (bx / n, by / n);
        let ex = (c * bx - b * by) / det;
        let ey = (a * by - b * bx) / det;
        v = v + Point::new(ex, ey);
        if ex.hypot(ey) < cfg.epsilon {
            converged = true;
            break;
        }
    }
    if converged {
        // Photometric error at the accepted position.
        let q = p + guess + v;
        sample_patch(dst, q.x, q.y, r, dst_patch);
        residual = grads
            .iter()
            .zip(dst_patch.iter())
            .map(|(&(i, _, _), &jv)| (i - jv).abs() as f64)
            .sum::<f64>()
            / n;
    }
    LevelOutcome {
        flow: guess + v,
        converged,
        singular: false,
        residual,
    }
}

fn track_in_pyramids(src: &[GrayFrame], dst: &[GrayFrame], p: Point, cfg: &TrackConfig) -> TrackResult {
    let levels = src.len().min(dst.len()).min(cfg.pyramid_levels);
    let mut src_patch = Vec::new();
    let mut dst_patch = Vec::new();
    let mut guess = Point::default();
    let mut last = LevelOutcome {
        flow: guess,
        converged: false,
        singular: true,
        residual: f64::NAN,
    };
    for level in (0..levels).rev() {
        let scale = 1.0 / (1u64 << level) as f64;
        let pl = Point::new(p.x * scale, p.y * scale);
        last = track_level(&src[level], &dst[level], pl, guess, cfg, &mut src_patch, &mut dst_patch);
        if level > 0 {
            guess = Point::new(2.0 * last.flow.x, 2.0 * last.flow.y);
        }
    }
    let point = p + last.flow;
    let (w, h) = (src[0].width as f64, src[0].height as f64);
    let margin = cfg.window_radius as f64;
    let inside = point.x >= -margin && point.y >= -margin && point.x <= w - 1.0 + margin && point.y <= h - 1.0 + margin;
    TrackResult {
        point,
        converged: last.converged && !last.singular && inside,
        residual: last.residual,
    }
}

/// Tracks `p` from `src` into `dst`.
///
/// `converged` is false when the level-0 structure tensor is near-singular,
/// when the iteration budget runs out, or when the result leaves the frame by
/// more than the window radius.
pub fn track_point(src: &GrayFrame, dst: &GrayFrame, p: Point, cfg: &TrackConfig) -> Result<TrackResult> {
    cfg.validate()?;
    if !src.same_size(dst) {
        return Err(Error::DimsMismatch(format!(
            "source is {}x{} but destination is {}x{}",
            src.width, src.height, dst.width, dst.height
        )));
    }
    check_pyramid_size(src.width, src.height, cfg.pyramid_levels, cfg.window_side())?;
    let sp = build_unchecked(src, cfg.pyramid_levels);
    let dp = build_unchecked(dst, cfg.pyramid_levels);
    Ok(track_in_pyramids(&sp, &dp, p, cfg))
}

/// Luma frames of one video with lazily built, shared pyramids.
///
/// Frames that are the same allocation in the source sequence share one
/// pyramid. The cache is safe for concurrent readers.
pub struct FlowFrames {
    levels: usize,
    slot_of_frame: Vec<usize>,
    frames: Vec<Arc<GrayFrame>>,
    pyramids: Vec<OnceLock<Vec<GrayFrame>>>,
}

impl FlowFrames {
    pub fn new(frames: Vec<Arc<GrayFrame>>, cfg: &TrackConfig) -> Result<Self> {
        cfg.validate()?;
        let mut slot_of_frame = Vec::with_capacity(frames.len());
        let mut unique: Vec<Arc<GrayFrame>> = Vec::new();
        let mut seen: HashMap<*const GrayFrame, usize> = HashMap::new();
        for f in &frames {
            let slot = *seen.entry(Arc::as_ptr(f)).or_insert_with(|| {
                unique.push(f.clone());
                unique.len() - 1
            });
            slot_of_frame.push(slot);
        }
        if let Some(first) = unique.first() {
            check_pyramid_size(first.width, first.height, cfg.pyramid_levels, cfg.window_side())?;
            if let Some(bad) = unique.iter().find(|f| !f.same_size(first)) {
                return Err(Error::DimsMismatch(format!(
                    "mixed frame sizes {}x{} and {}x{}",
                    first.width, first.height, bad.width, bad.height
                )));
            }
        }
        let pyramids = (0..unique.len()).map(|_| OnceLock::new()).collect();
        Ok(Self {
            levels: cfg.pyramid_levels,
            slot_of_frame,
            frames: unique,
            pyramids,
        })
    }

    /// Converts to luma, keeping shared RGB frames shared.
    pub fn from_sequence(seq: &FrameSequence, cfg: &TrackConfig, exec: Execution) -> Result<Self> {
        let mut slot: HashMap<*const RgbFrame, usize> = HashMap::new();
        let mut unique: Vec<&RgbFrame> = Vec::new();
        let mut order = Vec::with_capacity(seq.len());
        for f in seq.shared() {
            let s = *slot.entry(Arc::as_ptr(f)).or_insert_with(|| {
                unique.push(f.as_ref());
                unique.len() - 1
            });
            order.push(s);
        }
        let grays: Vec<Arc<GrayFrame>> = exec.map(&unique, |f| Arc::new(f.to_gray()));
        Self::new(order.into_iter().map(|s| grays[s].clone()).collect(), cfg)
    }

    pub fn len(&self) -> usize {
        self.slot_of_frame.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slot_of_frame.is_empty()
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn frame(&self, index: usize) -> Option<&GrayFrame> {
        self.slot_of_frame.get(index).map(|&s| self.frames[s].as_ref())
    }

    fn pyramid(&self, index: usize) -> &[GrayFrame] {
        let slot = self.slot_of_frame[index];
        self.pyramids[slot].get_or_init(|| build_unchecked(&self.frames[slot], self.levels))
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.len() {
            return Err(Error::Index {
                index,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// One hop between two frames of this video.
    pub fn track(&self, from: usize, to: usize, p: Point, cfg: &TrackConfig) -> Result<TrackResult> {
        self.check_index(from)?;
        self.check_index(to)?;
        if cfg.pyramid_levels > self.levels {
            return Err(Error::Config(format!(
                "{} levels requested but frames were prepared with {}",
                cfg.pyramid_levels, self.levels
            )));
        }
        Ok(track_in_pyramids(self.pyramid(from), self.pyramid(to), p, cfg))
    }
}

/// Tracks `p` frame by frame from `from_idx` to `to_idx`, calling `visit`
/// with the frame index reached and the cumulative state after every
/// successful hop. Stops at the first failing hop.
pub fn chain_track_visit(
    frames: &FlowFrames,
    p: Point,
    from_idx: usize,
    to_idx: usize,
    cfg: &TrackConfig,
    mut visit: impl FnMut(usize, &ChainResult),
) -> Result<ChainResult> {
    cfg.validate()?;
    frames.check_index(from_idx)?;
    frames.check_index(to_idx)?;
    if from_idx == to_idx {
        return Err(Error::Config(format!(
            "chain tracking needs distinct frames, got {from_idx} twice"
        )));
    }
    let forward = to_idx > from_idx;
    let mut state = ChainResult {
        point: p,
        converged: true,
        residual: 0.0,
        hops: 0,
        failed_hop: None,
    };
    let mut cur = from_idx;
    while cur != to_idx {
        let next = if forward { cur + 1 } else { cur - 1 };
        let hop = frames.track(cur, next, state.point, cfg)?;
        if !hop.converged {
            state.converged = false;
            state.failed_hop = Some(state.hops);
            return Ok(state);
        }
        state.point = hop.point;
        state.residual = hop.residual;
        state.hops += 1;
        cur = next;
        visit(cur, &state);
    }
    Ok(state)
}

/// Tracks `p` through every intermediate native frame between `from_idx` and
/// `to_idx`. `converged` is true only if every hop converged.
pub fn chain_track(
    frames: &FlowFrames,
    p: Point,
    from_idx: usize,
    to_idx: usize,
    cfg: &TrackConfig,
) -> Result<ChainResult> {
    chain_track_visit(frames, p, from_idx, to_idx, cfg, |_, _| {})
}


#[cfg(test)]
mod tests {
    use super::test_images::texture;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pyramid_halves_dimensions() {
        let f = GrayFrame::filled(1920, 1080, 0.25);
        let p = build_pyramid(&f, 3).unwrap();
        let dims: Vec<_> = p.iter().map(|l| (l.width, l.height)).collect();
        assert_eq!(dims, vec![(1920, 1080), (960, 540), (480, 270)]);
        for l in &p {
            assert!(l.data.iter().all(|&v| (v - 0.25).abs() < 1e-7));
        }
    }

    #[test]
    fn pyramid_rejects_small_frames() {
        let f = GrayFrame::filled(8, 8, 0.0);
        assert!(matches!(build_pyramid(&f, 5), Err(Error::Pyramid(_))));
    }

    #[test]
    fn zero_motion_is_identity() {
        let f = texture(160, 120, (0.0, 0.0));
        let p = Point::new(80.3, 61.7);
        let r = track_point(&f, &f, p, &TrackConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.point.distance(&p) < 0.01);
    }

    #[test]
    fn recovers_known_translation() {
        let src = texture(160, 120, (0.0, 0.0));
        let dst = texture(160, 120, (3.0, -2.0));
        let p = Point::new(80.0, 60.0);
        let r = track_point(&src, &dst, p, &TrackConfig::default()).unwrap();
        assert!(r.converged);
        let truth = Point::new(83.0, 58.0);
        assert!(r.point.distance(&truth) < 0.5, "{:?}", r.point);
    }

    #[test]
    fn constant_frames_do_not_converge() {
        let f = GrayFrame::filled(128, 128, 0.5);
        let r = track_point(&f, &f, Point::new(64.0, 64.0), &TrackConfig::default()).unwrap();
        assert!(!r.converged);
    }

    #[test]
    fn dims_mismatch_is_an_error() {
        let a = GrayFrame::filled(128, 128, 0.5);
        let b = GrayFrame::filled(128, 129, 0.5);
        assert!(matches!(
            track_point(&a, &b, Point::new(1.0, 1.0), &TrackConfig::default()),
            Err(Error::DimsMismatch(_))
        ));
    }

    fn moving_frames(n: usize, v: (f64, f64)) -> FlowFrames {
        let frames = (0..n)
            .map(|t| Arc::new(texture(160, 120, (v.0 * t as f64, v.1 * t as f64))))
            .collect();
        FlowFrames::new(frames, &TrackConfig::default()).unwrap()
    }

    #[test]
    fn single_hop_chain_matches_track_point() {
        let ff = moving_frames(2, (1.5, 0.5));
        let p = Point::new(70.0, 50.0);
        let chained = chain_track(&ff, p, 0, 1, &TrackConfig::default()).unwrap();
        let direct = track_point(ff.frame(0).unwrap(), ff.frame(1).unwrap(), p, &TrackConfig::default()).unwrap();
        assert_eq!(chained.point, direct.point);
        assert_eq!(chained.converged, direct.converged);
    }

    #[test]
    fn chain_accumulates_uniform_motion() {
        let ff = moving_frames(7, (2.0, -1.0));
        let p = Point::new(60.0, 70.0);
        let r = chain_track(&ff, p, 0, 6, &TrackConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.hops, 6);
        assert!(r.point.distance(&Point::new(72.0, 64.0)) < 0.5 * 6.0);
        // and backwards
        let back = chain_track(&ff, r.point, 6, 0, &TrackConfig::default()).unwrap();
        assert!(back.point.distance(&p) < 0.5 * 6.0);
    }

    #[test]
    fn chain_reports_failing_hop() {
        let tex = Arc::new(texture(128, 128, (0.0, 0.0)));
        let flat = Arc::new(GrayFrame::filled(128, 128, 0.5));
        let frames = vec![tex.clone(), tex.clone(), tex, flat];
        let ff = FlowFrames::new(frames, &TrackConfig::default()).unwrap();
        let p = Point::new(64.0, 64.0);
        // tracking backwards: the first hop starts on the flat frame
        let r = chain_track(&ff, p, 3, 0, &TrackConfig::default()).unwrap();
        assert!(!r.converged);
        assert_eq!(r.hops, 0);
        assert_eq!(r.failed_hop, Some(0));
        assert_eq!(r.point, p);
        let ok = chain_track(&ff, p, 0, 2, &TrackConfig::default()).unwrap();
        assert!(ok.converged);
        assert_eq!(ok.hops, 2);
    }

    #[test]
    fn shared_frames_share_pyramids() {
        let tex = Arc::new(texture(128, 128, (0.0, 0.0)));
        let ff = FlowFrames::new(vec![tex.clone(); 50], &TrackConfig::default()).unwrap();
        assert_eq!(ff.frames.len(), 1);
        assert_eq!(ff.len(), 50);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn shift_equivariance(dx in -8.0f64..8.0, dy in -8.0f64..8.0) {
            let src = texture(192, 160, (0.0, 0.0));
            let dst = texture(192, 160, (dx, dy));
            let p = Point::new(96.0, 80.0);
            let r = track_point(&src, &dst, p, &TrackConfig::default()).unwrap();
            prop_assert!(r.converged);
            prop_assert!(r.point.distance(&Point::new(96.0 + dx, 80.0 + dy)) < 0.5);
        }
    }
}
