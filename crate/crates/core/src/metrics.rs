//! Evaluation: box accuracy (m_IoU, IoU@R), temporal smoothness, saliency
//! agreement and the two fixed baselines.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{iou, to_rect, CropBox, FrameDims, RectBox};
use crate::smoothing::{interpolate_dense, AnnotationTrack};

pub const DEFAULT_IOU_THRESHOLDS: [f64; 2] = [0.3, 0.5];

/// Label attached to reported smoothness values, since the quantity
/// differenced is a modelling choice.
pub const TEMPORAL_SMOOTHNESS_DEFINITION: &str =
    "interpretation: 100*(1 - mean |delta| of (cx/width, cy/height, r) over consecutive frames)";

/// One crop box per native frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTrack {
    pub dims: FrameDims,
    pub boxes: Vec<CropBox>,
}

impl DenseTrack {
    pub fn new(dims: FrameDims, boxes: Vec<CropBox>) -> Self {
        Self { dims, boxes }
    }

    /// Linear interpolation of a sparse track over its declared frame count.
    pub fn from_track(track: &AnnotationTrack) -> Result<Self> {
        Ok(Self {
            dims: track.dims,
            boxes: interpolate_dense(track, track.frame_count)?,
        })
    }

    /// The same box on every frame.
    pub fn constant(dims: FrameDims, b: CropBox, frame_count: usize) -> Self {
        Self {
            dims,
            boxes: vec![b; frame_count],
        }
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }
}

fn check_pair(pred: &DenseTrack, gt: &DenseTrack) -> Result<()> {
    if pred.dims != gt.dims || pred.len() != gt.len() {
        return Err(Error::DimsMismatch(format!(
            "prediction has {} frames at {}, ground truth {} frames at {}",
            pred.len(),
            pred.dims,
            gt.len(),
            gt.dims
        )));
    }
    if pred.is_empty() {
        return Err(Error::EmptyTrack);
    }
    Ok(())
}

/// Mean frame-wise IoU of one video, in `[0, 1]`.
pub fn video_iou(pred: &DenseTrack, gt: &DenseTrack) -> Result<f64> {
    check_pair(pred, gt)?;
    let mut sum = 0.0;
    for (a, b) in pred.boxes.iter().zip(&gt.boxes) {
        sum += iou(&to_rect(a, pred.dims)?, &to_rect(b, gt.dims)?);
    }
    Ok(sum / pred.len() as f64)
}

fn require_videos(per_video: &[f64]) -> Result<()> {
    if per_video.is_empty() {
        Err(Error::InsufficientData("no videos to evaluate".into()))
    } else {
        Ok(())
    }
}

/// Mean of per-video IoUs, as a percentage.
pub fn m_iou(per_video_ious: &[f64]) -> Result<f64> {
    require_videos(per_video_ious)?;
    Ok(100.0 * per_video_ious.iter().sum::<f64>() / per_video_ious.len() as f64)
}

/// Share of videos whose IoU strictly exceeds `r`, as a percentage.
pub fn iou_at_r(per_video_ious: &[f64], r: f64) -> Result<f64> {
    require_videos(per_video_ious)?;
    let hits = per_video_ious.iter().filter(|&&v| v > r).count();
    Ok(100.0 * hits as f64 / per_video_ious.len() as f64)
}

/// `100·(1 − MAD)` of the normalized `(cx/W, cy/H, r)` sequence.
pub fn temporal_smoothness(track: &DenseTrack) -> Result<f64> {
    if track.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "temporal smoothness needs at least 2 frames, got {}",
            track.len()
        )));
    }
    let (w, h) = (track.dims.width as f64, track.dims.height as f64);
    let total: f64 = track
        .boxes
        .windows(2)
        .map(|p| {
            ((p[1].cx - p[0].cx) / w).abs() + ((p[1].cy - p[0].cy) / h).abs() + (p[1].r - p[0].r).abs()
        })
        .sum();
    let mad = total / (3.0 * (track.len() - 1) as f64);
    Ok(100.0 * (1.0 - mad))
}

/// Row-major non-negative map.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub width: u32,
    pub height: u32,
    pub values: Vec<f64>,
}

impl SaliencyMap {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        if values.len() != width as usize * height as usize {
            return Err(Error::DimsMismatch(format!(
                "map of {width}x{height} needs {} values, got {}",
                width as usize * height as usize,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidBox(format!("saliency value {v} is not a finite non-negative number")));
        }
        Ok(Self { width, height, values })
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Binary map of the realized rectangle: a pixel is 1 when its center lies
/// in `[x0, x1) x [y0, y1)`.
pub fn box_to_binary_map(b: &CropBox, dims: FrameDims) -> Result<SaliencyMap> {
    let rect = to_rect(b, dims)?;
    Ok(rect_map(&rect, dims.width, dims.height))
}

/// As [`box_to_binary_map`], rasterized on a map of a different resolution
/// than the frame.
pub fn box_to_binary_map_sized(b: &CropBox, dims: FrameDims, width: u32, height: u32) -> Result<SaliencyMap> {
    let rect = to_rect(b, dims)?.scaled(width as f64 / dims.width as f64, height as f64 / dims.height as f64);
    Ok(rect_map(&rect, width, height))
}

fn rect_map(rect: &RectBox, width: u32, height: u32) -> SaliencyMap {
    let inside = |lo: f64, hi: f64, i: u32| {
        let c = i as f64 + 0.5;
        lo <= c && c < hi
    };
    let mut values = Vec::with_capacity(width as usize * height as usize);
    for y in 0..height {
        let row = inside(rect.y0, rect.y1, y);
        for x in 0..width {
            values.push(if row && inside(rect.x0, rect.x1, x) { 1.0 } else { 0.0 });
        }
    }
    SaliencyMap { width, height, values }
}

fn check_maps(a: &SaliencyMap, b: &SaliencyMap) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::DimsMismatch(format!(
            "maps are {}x{} and {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

/// Pearson correlation over pixels.
pub fn lcc(a: &SaliencyMap, b: &SaliencyMap) -> Result<f64> {
    check_maps(a, b)?;
    let n = a.values.len() as f64;
    let ma = a.sum() / n;
    let mb = b.sum() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.values.iter().zip(&b.values) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::LccUndefined);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Histogram intersection of the two maps after scaling each to unit mass.
pub fn sim(a: &SaliencyMap, b: &SaliencyMap) -> Result<f64> {
    check_maps(a, b)?;
    let (sa, sb) = (a.sum(), b.sum());
    if sa <= 0.0 || sb <= 0.0 {
        return Err(Error::SimUndefined);
    }
    let s: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x / sa).min(y / sb)).sum();
    Ok(s.clamp(0.0, 1.0))
}

fn max_scaled_diffs<'a>(a: &'a SaliencyMap, b: &'a SaliencyMap) -> Result<impl Iterator<Item = f64> + 'a> {
    check_maps(a, b)?;
    let scale = |m: &SaliencyMap| {
        let mx = m.max();
        if mx > 0.0 {
            1.0 / mx
        } else {
            0.0
        }
    };
    let (ka, kb) = (scale(a), scale(b));
    Ok(a.values.iter().zip(&b.values).map(move |(x, y)| x * ka - y * kb))
}

/// Mean absolute difference after scaling each map to max 1.
pub fn mae(a: &SaliencyMap, b: &SaliencyMap) -> Result<f64> {
    let n = a.values.len() as f64;
    Ok(max_scaled_diffs(a, b)?.map(f64::abs).sum::<f64>() / n)
}

/// Mean squared difference after scaling each map to max 1.
pub fn mse(a: &SaliencyMap, b: &SaliencyMap) -> Result<f64> {
    let n = a.values.len() as f64;
    Ok(max_scaled_diffs(a, b)?.map(|d| d * d).sum::<f64>() / n)
}

/// Nearest-rank percentile: the value at rank `ceil(pct/100 · n)` (1-based)
/// of the sorted values, with rank clamped into `[1, n]`.
pub fn nearest_rank_percentile(values: &[f64], pct: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of an empty set");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((pct / 100.0) * v.len() as f64).ceil() as usize;
    v[rank.clamp(1, v.len()) - 1]
}

/// 1 where the value strictly exceeds the map's `pct`-th percentile.
pub fn percentile_binarize(map: &SaliencyMap, pct: f64) -> SaliencyMap {
    let values = if map.values.is_empty() {
        Vec::new()
    } else {
        let t = nearest_rank_percentile(&map.values, pct);
        map.values.iter().map(|&v| if v > t { 1.0 } else { 0.0 }).collect()
    };
    SaliencyMap {
        width: map.width,
        height: map.height,
        values,
    }
}

/// Full-height box at the frame center.
pub fn center_crop(dims: FrameDims) -> CropBox {
    let c = dims.center();
    CropBox::new(c.x, c.y, 1.0)
}

/// Full-height box keeping the horizontal center of `b`, clamped into the
/// frame.
pub fn preserve_height(b: &CropBox, dims: FrameDims) -> Result<CropBox> {
    CropBox::new(b.cx, dims.height as f64 / 2.0, 1.0).clamped(dims)
}

pub fn preserve_height_track(track: &DenseTrack) -> Result<DenseTrack> {
    Ok(DenseTrack {
        dims: track.dims,
        boxes: track
            .boxes
            .iter()
            .map(|b| preserve_height(b, track.dims))
            .collect::<Result<_>>()?,
    })
}

/// Runs `f` three times and returns the last result with the fastest
/// wall-clock time in seconds.
pub fn best_of_three<T>(mut f: impl FnMut() -> T) -> (T, f64) {
    let mut best = f64::INFINITY;
    let mut out = None;
    for _ in 0..3 {
        let t = Instant::now();
        let v = f();
        best = best.min(t.elapsed().as_secs_f64());
        out = Some(v);
    }
    (out.expect("three runs"), best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaliencyScores {
    pub lcc: f64,
    pub sim: f64,
    pub mae: f64,
    pub mse: f64,
}

/// Saliency agreement of one binary box map against one reference map.
pub fn saliency_scores(box_map: &SaliencyMap, reference: &SaliencyMap) -> Result<SaliencyScores> {
    Ok(SaliencyScores {
        lcc: lcc(box_map, reference)?,
        sim: sim(box_map, reference)?,
        mae: mae(box_map, reference)?,
        mse: mse(box_map, reference)?,
    })
}

/// Component-wise mean of saliency scores.
pub fn mean_saliency(scores: &[SaliencyScores]) -> Option<SaliencyScores> {
    if scores.is_empty() {
        return None;
    }
    let n = scores.len() as f64;
    let sum = scores.iter().fold([0.0; 4], |acc, s| [acc[0] + s.lcc, acc[1] + s.sim, acc[2] + s.mae, acc[3] + s.mse]);
    Some(SaliencyScores {
        lcc: sum[0] / n,
        sim: sum[1] / n,
        mae: sum[2] / n,
        mse: sum[3] / n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoMetrics {
    pub video_id: String,
    pub iou: f64,
    pub temporal_smoothness: Option<f64>,
}

/// Percentages are in `[0, 100]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub videos: usize,
    pub m_iou: f64,
    /// Keyed by the threshold formatted with two decimals.
    pub iou_at: BTreeMap<String, f64>,
    pub temporal_smoothness: Option<f64>,
    pub temporal_smoothness_definition: String,
    pub saliency: Option<SaliencyScores>,
    /// Best-of-three wall-clock seconds per video, when measured.
    pub timing_seconds_per_video: Option<f64>,
    pub per_video: Vec<VideoMetrics>,
}

/// One prediction / ground-truth pair.
#[derive(Debug, Clone)]
pub struct EvalPair {
    pub video_id: String,
    pub pred: DenseTrack,
    pub gt: DenseTrack,
}

pub fn threshold_key(r: f64) -> String {
    format!("{r:.2}")
}

/// Accuracy and smoothness over a set of videos. Per-video work is spread
/// over `exec`; results are reduced in input order.
pub fn evaluate(pairs: &[EvalPair], thresholds: &[f64], exec: Execution) -> Result<MetricsReport> {
    let per_video = exec.try_map(pairs, |p| {
        Ok::<_, Error>(VideoMetrics {
            video_id: p.video_id.clone(),
            iou: video_iou(&p.pred, &p.gt)?,
            temporal_smoothness: temporal_smoothness(&p.pred).ok(),
        })
    })?;
    let ious: Vec<f64> = per_video.iter().map(|v| v.iou).collect();
    let mut iou_at = BTreeMap::new();
    for &r in thresholds {
        iou_at.insert(threshold_key(r), iou_at_r(&ious, r)?);
    }
    let smooth: Vec<f64> = per_video.iter().filter_map(|v| v.temporal_smoothness).collect();
    Ok(MetricsReport {
        videos: pairs.len(),
        m_iou: m_iou(&ious)?,
        iou_at,
        temporal_smoothness: (!smooth.is_empty()).then(|| smooth.iter().sum::<f64>() / smooth.len() as f64),
        temporal_smoothness_definition: TEMPORAL_SMOOTHNESS_DEFINITION.to_string(),
        saliency: None,
        timing_seconds_per_video: None,
        per_video,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HD: FrameDims = FrameDims::FULL_HD;

    fn map(w: u32, h: u32, v: Vec<f64>) -> SaliencyMap {
        SaliencyMap::new(w, h, v).unwrap()
    }

    #[test]
    fn iou_identities() {
        let t = DenseTrack::new(HD, (0..10).map(|i| CropBox::new(500.0 + i as f64, 540.0, 0.7)).collect());
        let v = video_iou(&t, &t).unwrap();
        assert_eq!(m_iou(&[v]).unwrap(), 100.0);
        assert_eq!(iou_at_r(&[v], 0.99).unwrap(), 100.0);
        let far = DenseTrack::constant(HD, CropBox::new(1700.0, 540.0, 0.7), 10);
        assert_eq!(video_iou(&t, &far).unwrap(), 0.0);
        assert!(video_iou(&t, &DenseTrack::constant(HD, center_crop(HD), 9)).is_err());
    }

    #[test]
    fn two_video_example() {
        let v = [0.4, 0.6];
        assert!((m_iou(&v).unwrap() - 50.0).abs() < 1e-12);
        assert_eq!(iou_at_r(&v, 0.5).unwrap(), 50.0);
        // strict: equal to R does not count
        assert_eq!(iou_at_r(&[0.5], 0.5).unwrap(), 0.0);
    }

    #[test]
    fn smoothness_examples() {
        let c = DenseTrack::constant(HD, center_crop(HD), 30);
        assert_eq!(temporal_smoothness(&c).unwrap(), 100.0);
        let jump = DenseTrack::new(
            HD,
            (0..20)
                .map(|i| CropBox::new(if i % 2 == 0 { 0.0 } else { 1920.0 }, 540.0, 0.5))
                .collect(),
        );
        assert!((temporal_smoothness(&jump).unwrap() - 100.0 * (1.0 - 1.0 / 3.0)).abs() < 1e-9);
        assert!(temporal_smoothness(&DenseTrack::constant(HD, center_crop(HD), 1)).is_err());
    }

    #[test]
    fn smoothness_is_resolution_invariant() {
        let boxes = |s: f64| -> Vec<CropBox> {
            (0..12)
                .map(|i| CropBox::new(s * (400.0 + 13.0 * i as f64), s * 500.0, 0.6 + 0.01 * i as f64))
                .collect()
        };
        let a = temporal_smoothness(&DenseTrack::new(HD, boxes(1.0))).unwrap();
        let b = temporal_smoothness(&DenseTrack::new(FrameDims::new(960, 540).unwrap(), boxes(0.5))).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn binary_map_band() {
        let m = box_to_binary_map(&center_crop(HD), HD).unwrap();
        assert_eq!(m.sum(), 608.0 * 1080.0);
        let row: Vec<usize> = (0..1920).filter(|&x| m.values[x] == 1.0).collect();
        assert_eq!((row[0], *row.last().unwrap()), (656, 1263));
        let shifted = box_to_binary_map(&CropBox::new(961.0, 540.0, 1.0), HD).unwrap();
        assert_eq!(shifted.values[657], 1.0);
        assert_eq!(shifted.values[656], 0.0);
        assert_eq!(shifted.values[1264], 1.0);
    }

    #[test]
    fn saliency_identities() {
        let a = map(4, 1, vec![1.0, 0.0, 1.0, 0.0]);
        let inv = map(4, 1, vec![0.0, 1.0, 0.0, 1.0]);
        assert!((lcc(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((lcc(&a, &inv).unwrap() + 1.0).abs() < 1e-12);
        assert!((sim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(sim(&a, &inv).unwrap(), 0.0);
        assert_eq!(mae(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        let flat = map(4, 1, vec![2.0; 4]);
        assert!(matches!(lcc(&a, &flat), Err(Error::LccUndefined)));
        assert!(matches!(sim(&a, &map(4, 1, vec![0.0; 4])), Err(Error::SimUndefined)));
    }

    #[test]
    fn saliency_scale_invariance() {
        let a = map(3, 2, vec![0.1, 0.5, 0.2, 0.9, 0.0, 0.3]);
        let b = map(3, 2, vec![0.3, 0.1, 0.7, 0.2, 0.4, 0.6]);
        let a2 = map(3, 2, a.values.iter().map(|v| 5.0 * v + 2.0).collect());
        let a3 = map(3, 2, a.values.iter().map(|v| 7.0 * v).collect());
        assert!((lcc(&a, &b).unwrap() - lcc(&a2, &b).unwrap()).abs() < 1e-12);
        assert!((sim(&a, &b).unwrap() - sim(&a3, &b).unwrap()).abs() < 1e-12);
        assert!((mae(&a, &b).unwrap() - mae(&a3, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn percentile_examples() {
        let m = map(10, 10, (1..=100).map(|v| v as f64).collect());
        assert_eq!(percentile_binarize(&m, 90.0).sum(), 10.0);
        let c = map(5, 5, vec![3.0; 25]);
        assert_eq!(percentile_binarize(&c, 50.0).sum(), 0.0);
        let p50 = percentile_binarize(&m, 50.0);
        let p90 = percentile_binarize(&m, 90.0);
        assert!(p90.values.iter().zip(&p50.values).all(|(a, b)| a <= b));
    }

    #[test]
    fn percentile_depends_on_rank_only() {
        let m = map(3, 3, vec![0.3, 9.0, 0.1, 4.0, 0.2, 7.0, 5.0, 0.0, 1.0]);
        let squashed = map(3, 3, m.values.iter().map(|v| (v + 1.0f64).ln()).collect());
        for p in [10.0, 50.0, 70.0, 90.0] {
            assert_eq!(percentile_binarize(&m, p), percentile_binarize(&squashed, p));
        }
    }

    #[test]
    fn baselines() {
        let r = to_rect(&center_crop(HD), HD).unwrap();
        assert_eq!((r.x0, r.y0, r.x1, r.y1), (656.25, 0.0, 1263.75, 1080.0));
        let full = CropBox::new(700.0, 540.0, 1.0);
        assert_eq!(preserve_height(&full, HD).unwrap(), full);
        let p = preserve_height(&CropBox::new(100.0, 10.0, 0.2), HD).unwrap();
        assert!((p.cx - 303.75).abs() < 1e-12 && p.cy == 540.0 && p.r == 1.0);
    }

    #[test]
    fn evaluate_reports_thresholds() {
        let gt = DenseTrack::constant(HD, center_crop(HD), 10);
        let pairs = vec![
            EvalPair {
                video_id: "a".into(),
                pred: gt.clone(),
                gt: gt.clone(),
            },
            EvalPair {
                video_id: "b".into(),
                pred: DenseTrack::constant(HD, CropBox::new(200.0, 540.0, 1.0), 10),
                gt,
            },
        ];
        let r = evaluate(&pairs, &DEFAULT_IOU_THRESHOLDS, Execution::Sequential).unwrap();
        assert_eq!(r.iou_at["0.50"], 50.0);
        assert_eq!(r.temporal_smoothness, Some(100.0));
        assert_eq!(r, evaluate(&pairs, &DEFAULT_IOU_THRESHOLDS, Execution::Parallel).unwrap());
    }
}
