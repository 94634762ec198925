//! Dataset statistics: subject rejection, outlier detection, inter-subject
//! consistency, box statistics and content diversity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::frame::{FrameSequence, GrayFrame, RgbFrame};
use crate::geometry::{center_distance, iou, normalized_area, to_rect, FrameDims, Point};
use crate::metrics::nearest_rank_percentile;
use crate::smoothing::{Annotation, AnnotationTrack};

pub const DEFAULT_LOF_NEIGHBORS: usize = 20;
pub const DEFAULT_LOF_THRESHOLD: f64 = 1.5;
pub const DEFAULT_ZSCORE_THRESHOLD: f64 = 3.5;
/// Share of highest-TI videos left out of the outlier analysis.
pub const DEFAULT_TI_EXCLUDE_PERCENT: f64 = 13.0;

/// Added to mean reachability distances so duplicate points do not divide by
/// zero.
const LRD_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SessionEntry {
    pub video_id: String,
    pub dims: FrameDims,
    pub annotation: Annotation,
}

/// Every annotation one annotator produced, across videos.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub annotator_id: String,
    pub entries: Vec<SessionEntry>,
}

/// Groups annotations by annotator, ordered by annotator id and then by input
/// order.
pub fn sessions_from_tracks(tracks: &[AnnotationTrack]) -> Vec<SessionRecord> {
    let mut by_id: BTreeMap<&str, Vec<SessionEntry>> = BTreeMap::new();
    for t in tracks {
        for a in &t.annotations {
            by_id.entry(&a.annotator_id).or_default().push(SessionEntry {
                video_id: t.video_id.clone(),
                dims: t.dims,
                annotation: a.clone(),
            });
        }
    }
    by_id
        .into_iter()
        .map(|(id, entries)| SessionRecord {
            annotator_id: id.to_string(),
            entries,
        })
        .collect()
}

fn centroid(points: &[Point]) -> Point {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    Point::new(sx / n, sy / n)
}

/// Root-mean-square distance of the session's box centers from their
/// centroid, in pixels.
pub fn center_dispersion(session: &SessionRecord) -> Result<f64> {
    if session.entries.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "dispersion of session '{}' needs at least 2 annotations",
            session.annotator_id
        )));
    }
    let pts: Vec<Point> = session.entries.iter().map(|e| e.annotation.crop.center()).collect();
    let c = centroid(&pts);
    let ms = pts.iter().map(|p| (p.x - c.x).powi(2) + (p.y - c.y).powi(2)).sum::<f64>() / pts.len() as f64;
    Ok(ms.sqrt())
}

pub fn mean_box_area(session: &SessionRecord) -> Result<f64> {
    if session.entries.is_empty() {
        return Err(Error::InsufficientData(format!("session '{}' is empty", session.annotator_id)));
    }
    let sum: f64 = session
        .entries
        .iter()
        .map(|e| normalized_area(&e.annotation.crop, e.dims))
        .sum();
    Ok(sum / session.entries.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutlierMethod {
    Lof,
    ModifiedZScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub method: OutlierMethod,
    pub threshold: f64,
    /// Neighbourhood size for LOF; absent for the z-score method.
    pub neighbors: Option<usize>,
    /// One score per input point.
    pub scores: Vec<f64>,
    /// Indices of flagged points, ascending.
    pub flagged: Vec<usize>,
}

fn neighbor_cmp(a: &(f64, usize), b: &(f64, usize)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Local Outlier Factor of every point using exactly `k` nearest neighbours
/// (distance ties broken by index).
pub fn lof_scores(points: &[Point], k: usize) -> Result<Vec<f64>> {
    lof_scores_with(points, k, Execution::default())
}

pub fn lof_scores_with(points: &[Point], k: usize, exec: Execution) -> Result<Vec<f64>> {
    let n = points.len();
    if k == 0 || n <= k {
        return Err(Error::InsufficientData(format!(
            "LOF with k={k} needs more than {k} points, got {n}"
        )));
    }
    let neighbors: Vec<Vec<(f64, usize)>> = exec.map_range(0..n, |i| {
        let mut d: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (points[i].distance(&points[j]), j))
            .collect();
        d.select_nth_unstable_by(k - 1, neighbor_cmp);
        d.truncate(k);
        d.sort_unstable_by(neighbor_cmp);
        d
    });
    let k_distance: Vec<f64> = neighbors.iter().map(|nb| nb[k - 1].0).collect();
    let lrd: Vec<f64> = neighbors
        .iter()
        .map(|nb| {
            let reach: f64 = nb.iter().map(|&(d, o)| d.max(k_distance[o])).sum();
            1.0 / (reach / k as f64 + LRD_EPSILON)
        })
        .collect();
    Ok(neighbors
        .iter()
        .enumerate()
        .map(|(i, nb)| {
            let mean: f64 = nb.iter().map(|&(_, o)| lrd[o]).sum::<f64>() / k as f64;
            mean / lrd[i]
        })
        .collect())
}

pub fn lof_outliers(points: &[Point], k: usize, threshold: f64) -> Result<OutlierReport> {
    let scores = lof_scores(points, k)?;
    let flagged = scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > threshold)
        .map(|(i, _)| i)
        .collect();
    Ok(OutlierReport {
        method: OutlierMethod::Lof,
        threshold,
        neighbors: Some(k),
        scores,
        flagged,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Modified z-scores `0.6745·(v − median) / MAD`. When the MAD is zero the
/// mean absolute deviation around the median is used instead
/// (`0.7979·(v − median) / MeanAD`); if that is also zero every score is 0.
pub fn modified_z_scores(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let med = median(values);
    let abs_dev: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    let mad = median(&abs_dev);
    if mad > 0.0 {
        return values.iter().map(|v| 0.6745 * (v - med) / mad).collect();
    }
    let mean_ad = abs_dev.iter().sum::<f64>() / values.len() as f64;
    if mean_ad > 0.0 {
        values.iter().map(|v| 0.7979 * (v - med) / mean_ad).collect()
    } else {
        vec![0.0; values.len()]
    }
}

/// Flags points whose x or y modified z-score exceeds 3.5 in magnitude. The
/// per-point score is the larger of the two magnitudes.
pub fn zscore_outliers(points: &[Point]) -> Result<OutlierReport> {
    zscore_outliers_at(points, DEFAULT_ZSCORE_THRESHOLD)
}

pub fn zscore_outliers_at(points: &[Point], threshold: f64) -> Result<OutlierReport> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "modified z-score needs at least 3 points, got {}",
            points.len()
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    let zx = modified_z_scores(&xs);
    let zy = modified_z_scores(&ys);
    let scores: Vec<f64> = zx.iter().zip(&zy).map(|(a, b)| a.abs().max(b.abs())).collect();
    let flagged = scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > threshold)
        .map(|(i, _)| i)
        .collect();
    Ok(OutlierReport {
        method: OutlierMethod::ModifiedZScore,
        threshold,
        neighbors: None,
        scores,
        flagged,
    })
}

fn require_pairs(track: &AnnotationTrack) -> Result<()> {
    if track.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "video '{}' needs at least 2 annotations",
            track.video_id
        )));
    }
    Ok(())
}

/// Mean IoU of realized rectangles over consecutive annotation pairs.
pub fn consecutive_iou(track: &AnnotationTrack) -> Result<f64> {
    require_pairs(track)?;
    let rects = track
        .boxes()
        .map(|b| to_rect(b, track.dims))
        .collect::<Result<Vec<_>>>()?;
    let sum: f64 = rects.windows(2).map(|w| iou(&w[0], &w[1])).sum();
    Ok(sum / (rects.len() - 1) as f64)
}

/// Mean center distance over consecutive annotation pairs, in pixels.
pub fn consecutive_center_distance(track: &AnnotationTrack) -> Result<f64> {
    require_pairs(track)?;
    let a = &track.annotations;
    let sum: f64 = a.windows(2).map(|w| center_distance(&w[0].crop, &w[1].crop)).sum();
    Ok(sum / (a.len() - 1) as f64)
}

/// Mean distance of box centers from the frame center (center bias).
pub fn frame_center_distance(track: &AnnotationTrack) -> Result<f64> {
    if track.is_empty() {
        return Err(Error::EmptyTrack);
    }
    let c = track.dims.center();
    Ok(track.boxes().map(|b| b.center().distance(&c)).sum::<f64>() / track.len() as f64)
}

pub fn mean_track_area(track: &AnnotationTrack) -> Result<f64> {
    if track.is_empty() {
        return Err(Error::EmptyTrack);
    }
    Ok(track.boxes().map(|b| normalized_area(b, track.dims)).sum::<f64>() / track.len() as f64)
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

/// Hasler-Süsstrunk colorfulness on 0..255 RGB.
pub fn colorfulness(frame: &RgbFrame) -> f64 {
    let px = frame.data.chunks_exact(3);
    let rg = px.clone().map(|p| p[0] as f64 - p[1] as f64);
    let yb = px.map(|p| 0.5 * (p[0] as f64 + p[1] as f64) - p[2] as f64);
    let (mu_rg, sd_rg) = mean_std(rg);
    let (mu_yb, sd_yb) = mean_std(yb);
    (sd_rg * sd_rg + sd_yb * sd_yb).sqrt() + 0.3 * (mu_rg * mu_rg + mu_yb * mu_yb).sqrt()
}

/// Standard deviation of the Sobel gradient magnitude of the luma (on a
/// 0..255 scale) over interior pixels.
pub fn spatial_information(frame: &GrayFrame) -> f64 {
    let (w, h) = (frame.width as usize, frame.height as usize);
    if w < 3 || h < 3 {
        return 0.0;
    }
    let at = |x: usize, y: usize| frame.get(x, y) as f64 * 255.0;
    let mut mags = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            mags.push(gx.hypot(gy));
        }
    }
    mean_std(mags.into_iter()).1
}

/// Standard deviation of the pixel-wise luma difference (0..255 scale).
pub fn temporal_information(prev: &GrayFrame, cur: &GrayFrame) -> Result<f64> {
    if !prev.same_size(cur) {
        return Err(Error::DimsMismatch(format!(
            "TI over {}x{} and {}x{} frames",
            prev.width, prev.height, cur.width, cur.height
        )));
    }
    let diffs = prev.data.iter().zip(&cur.data).map(|(a, b)| (*b as f64 - *a as f64) * 255.0);
    Ok(mean_std(diffs).1)
}

/// How per-frame SI/TI values are pooled over a video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemporalPooling {
    #[default]
    Mean,
    /// The ITU-T P.910 convention.
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityFeatures {
    pub colorfulness: f64,
    pub spatial_information: f64,
    pub temporal_information: f64,
}

fn pool(values: &[f64], pooling: TemporalPooling) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    match pooling {
        TemporalPooling::Mean => values.iter().sum::<f64>() / values.len() as f64,
        TemporalPooling::Max => values.iter().copied().fold(f64::MIN, f64::max),
    }
}

/// Colorfulness (always averaged over frames), SI and TI of one video.
pub fn diversity_features(frames: &FrameSequence, pooling: TemporalPooling, exec: Execution) -> Result<DiversityFeatures> {
    if frames.is_empty() {
        return Err(Error::InsufficientData("diversity features of an empty video".into()));
    }
    let per_frame: Vec<(f64, f64, GrayFrame)> = exec.map(frames.shared(), |f| {
        let g = f.to_gray();
        (colorfulness(f), spatial_information(&g), g)
    });
    let cf: Vec<f64> = per_frame.iter().map(|t| t.0).collect();
    let si: Vec<f64> = per_frame.iter().map(|t| t.1).collect();
    let ti = exec.try_map_range(1..per_frame.len(), |i| temporal_information(&per_frame[i - 1].2, &per_frame[i].2))?;
    Ok(DiversityFeatures {
        colorfulness: pool(&cf, TemporalPooling::Mean),
        spatial_information: pool(&si, pooling),
        temporal_information: pool(&ti, pooling),
    })
}

/// Chooses which videos enter the outlier analysis: single-scene videos whose
/// TI is not in the top `ti_exclude_percent` of the set. Videos with unknown
/// TI are judged on scenes only.
pub fn outlier_analysis_mask(scene_counts: &[usize], ti: &[Option<f64>], ti_exclude_percent: f64) -> Vec<bool> {
    let known: Vec<f64> = ti.iter().flatten().copied().collect();
    let cutoff = if known.is_empty() || ti_exclude_percent <= 0.0 {
        None
    } else if ti_exclude_percent >= 100.0 {
        Some(f64::NEG_INFINITY)
    } else {
        Some(nearest_rank_percentile(&known, 100.0 - ti_exclude_percent))
    };
    scene_counts
        .iter()
        .zip(ti)
        .map(|(&scenes, t)| {
            let calm = match (t, cutoff) {
                (Some(v), Some(c)) => *v <= c,
                _ => true,
            };
            scenes <= 1 && calm
        })
        .collect()
}

/// Fixed-width text histogram over `[min, max]` of the values.
pub fn text_histogram(title: &str, values: &[f64], bins: usize, bar_width: usize) -> String {
    let mut out = format!("{title} (n={})\n", values.len());
    if values.is_empty() || bins == 0 {
        return out;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / span) * bins as f64).floor() as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let peak = counts.iter().copied().max().unwrap_or(1).max(1);
    for (b, &c) in counts.iter().enumerate() {
        let from = lo + span * b as f64 / bins as f64;
        let to = lo + span * (b + 1) as f64 / bins as f64;
        let bar = "#".repeat((c * bar_width + peak / 2) / peak);
        out.push_str(&format!("  [{from:>10.3}, {to:>10.3}) {c:>6} {bar}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CropBox;
    use crate::smoothing::Provenance;

    fn session(points: &[(f64, f64)]) -> SessionRecord {
        SessionRecord {
            annotator_id: "s".into(),
            entries: points
                .iter()
                .enumerate()
                .map(|(n, &(x, y))| SessionEntry {
                    video_id: format!("v{n}"),
                    dims: FrameDims::FULL_HD,
                    annotation: Annotation {
                        ordinal: 1,
                        frame_index: 0,
                        annotator_id: "s".into(),
                        crop: CropBox::new(x, y, 1.0),
                        attempt_count: None,
                    },
                })
                .collect(),
        }
    }

    fn track(boxes: &[CropBox]) -> AnnotationTrack {
        AnnotationTrack {
            video_id: "v".into(),
            dims: FrameDims::FULL_HD,
            frame_count: 6 * boxes.len(),
            stride: Some(6),
            scenes: None,
            provenance: Provenance::Raw,
            annotations: boxes
                .iter()
                .enumerate()
                .map(|(n, b)| Annotation {
                    ordinal: n + 1,
                    frame_index: 6 * n,
                    annotator_id: format!("s{n}"),
                    crop: *b,
                    attempt_count: None,
                })
                .collect(),
        }
    }

    #[test]
    fn dispersion_examples() {
        assert_eq!(center_dispersion(&session(&[(5.0, 5.0), (5.0, 5.0), (5.0, 5.0)])).unwrap(), 0.0);
        assert!((center_dispersion(&session(&[(0.0, 0.0), (10.0, 0.0)])).unwrap() - 5.0).abs() < 1e-12);
        let circle: Vec<_> = (0..12)
            .map(|i| {
                let t = i as f64 * std::f64::consts::PI / 6.0;
                (500.0 + 80.0 * t.cos(), 400.0 + 80.0 * t.sin())
            })
            .collect();
        assert!((center_dispersion(&session(&circle)).unwrap() - 80.0).abs() < 1e-9);
        assert!(center_dispersion(&session(&[(1.0, 1.0)])).is_err());
    }

    #[test]
    fn mean_area_of_full_height_boxes() {
        assert_eq!(mean_box_area(&session(&[(960.0, 540.0), (100.0, 540.0)])).unwrap(), 0.31640625);
    }

    #[test]
    fn sessions_group_by_annotator() {
        let mut t = track(&[CropBox::new(10.0, 10.0, 0.5); 3]);
        t.annotations[2].annotator_id = "s0".into();
        let s = sessions_from_tracks(&[t]);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].annotator_id, "s0");
        assert_eq!(s[0].entries.len(), 2);
    }

    #[test]
    fn zscore_examples() {
        let pts: Vec<Point> = [1.0, 2.0, 3.0, 4.0, 100.0].iter().map(|&x| Point::new(x, 0.0)).collect();
        let r = zscore_outliers(&pts).unwrap();
        assert_eq!(r.flagged, vec![4]);
        assert!((r.scores[4] - 0.6745 * 97.0).abs() < 1e-9);
        let same = vec![Point::new(3.0, 3.0); 10];
        assert!(zscore_outliers(&same).unwrap().flagged.is_empty());
        assert!(zscore_outliers(&same[..2]).is_err());
    }

    #[test]
    fn zscore_mad_zero_fallback() {
        // median 5, MAD 0, mean abs deviation 95/5 = 19
        let pts: Vec<Point> = [5.0, 5.0, 5.0, 5.0, 100.0].iter().map(|&x| Point::new(x, 1.0)).collect();
        let r = zscore_outliers(&pts).unwrap();
        assert!((r.scores[4] - 0.7979 * 95.0 / 19.0).abs() < 1e-12);
        assert_eq!(r.flagged, vec![4]);
    }

    #[test]
    fn lof_grid_interior_is_inlier() {
        let pts: Vec<Point> = (0..15)
            .flat_map(|y| (0..15).map(move |x| Point::new(x as f64, y as f64)))
            .collect();
        let s = lof_scores(&pts, 8).unwrap();
        for y in 3..12 {
            for x in 3..12 {
                assert!((s[y * 15 + x] - 1.0).abs() < 0.2);
            }
        }
    }

    #[test]
    fn lof_duplicates_are_finite() {
        let mut pts = vec![Point::new(1.0, 1.0); 10];
        pts.push(Point::new(50.0, 50.0));
        let s = lof_scores(&pts, 3).unwrap();
        assert!(s.iter().all(|v| v.is_finite()));
        assert!(lof_scores(&pts[..3], 3).is_err());
    }

    #[test]
    fn consecutive_measures() {
        let c = CropBox::new(960.0, 540.0, 0.8);
        let t = track(&[c; 5]);
        assert_eq!(consecutive_iou(&t).unwrap(), 1.0);
        assert_eq!(consecutive_center_distance(&t).unwrap(), 0.0);
        let alt = track(&[
            CropBox::new(200.0, 540.0, 0.5),
            CropBox::new(1700.0, 540.0, 0.5),
            CropBox::new(200.0, 540.0, 0.5),
        ]);
        assert_eq!(consecutive_iou(&alt).unwrap(), 0.0);
        let drift: Vec<_> = (0..6).map(|i| CropBox::new(500.0 + 10.0 * i as f64, 500.0, 0.5)).collect();
        assert!((consecutive_center_distance(&track(&drift)).unwrap() - 10.0).abs() < 1e-12);
        assert!(consecutive_iou(&track(&[c])).is_err());
    }

    #[test]
    fn colorfulness_examples() {
        assert_eq!(colorfulness(&RgbFrame::filled(8, 8, [128, 128, 128])), 0.0);
        let red = colorfulness(&RgbFrame::filled(8, 8, [255, 0, 0]));
        assert!((red - 85.53).abs() < 0.01, "{red}");
    }

    #[test]
    fn colorfulness_ignores_pixel_order() {
        let a = RgbFrame::from_fn(6, 4, |x, y| [(x * 40) as u8, (y * 60) as u8, ((x + y) * 20) as u8]);
        let mut b = a.clone();
        b.data = a.data.chunks_exact(3).rev().flatten().copied().collect();
        assert!((colorfulness(&a) - colorfulness(&b)).abs() < 1e-9);
    }

    #[test]
    fn si_ti_zero_on_constant_input() {
        let g = GrayFrame::filled(20, 20, 0.4);
        assert_eq!(spatial_information(&g), 0.0);
        assert_eq!(temporal_information(&g, &g).unwrap(), 0.0);
        assert!(temporal_information(&g, &GrayFrame::filled(20, 21, 0.4)).is_err());
    }

    #[test]
    fn si_of_vertical_step_matches_closed_form() {
        // left half 0, right half 1 (255 on the luma scale)
        let (w, h) = (20u32, 10u32);
        let g = GrayFrame::from_fn(w, h, |x, _| if x >= 10 { 1.0 } else { 0.0 });
        // Sobel response 4·255 on the two columns adjacent to the edge
        let p = 2.0 / (w - 2) as f64;
        let expect = 4.0 * 255.0 * (p * (1.0 - p)).sqrt();
        assert!((spatial_information(&g) - expect).abs() < 1e-9);
    }

    #[test]
    fn mask_excludes_multi_scene_and_high_ti() {
        let ti: Vec<Option<f64>> = (0..100).map(|i| Some(i as f64)).collect();
        let scenes = vec![1usize; 100];
        let m = outlier_analysis_mask(&scenes, &ti, 13.0);
        assert_eq!(m.iter().filter(|&&b| !b).count(), 13);
        assert!(!m[99] && m[86]);
        let m = outlier_analysis_mask(&[1, 3], &[None, None], 13.0);
        assert_eq!(m, vec![true, false]);
    }

    #[test]
    fn histogram_counts_everything() {
        let h = text_histogram("x", &[0.0, 0.1, 0.5, 1.0, 1.0], 4, 10);
        let total: usize = h
            .lines()
            .skip(1)
            .map(|l| l.split_whitespace().nth(3).unwrap().parse::<usize>().unwrap())
            .sum();
        assert_eq!(total, 5);
    }
}
