use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use vcrop_core::io::{read_saliency_map, write_report};
use vcrop_core::metrics::{
    best_of_three, box_to_binary_map_sized, center_crop, evaluate, mean_saliency, preserve_height_track,
    saliency_scores, threshold_key, DenseTrack, EvalPair, SaliencyScores,
};
use vcrop_core::{AnnotationTrack, Execution};

use super::{load_tracks, parse_thresholds, Thresholds};
use crate::{require_dir, require_output, DataError, UsageError};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Predicted annotation file.
    #[arg(long, required_unless_present = "center_crop")]
    pub input: Option<PathBuf>,
    /// Ground-truth annotation file.
    #[arg(long)]
    pub ground_truth: PathBuf,
    /// Report file (JSON). The summary is always printed.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Evaluate the fixed Center Crop baseline instead of `--input`.
    #[arg(long, conflicts_with = "input")]
    pub center_crop: bool,
    /// Replace every predicted box by the full-height box at the same horizontal center.
    #[arg(long)]
    pub preserve_height: bool,
    /// IoU@R thresholds, comma separated.
    #[arg(long, value_parser = parse_thresholds, default_value = "0.3,0.5")]
    pub iou_thresholds: Thresholds,
    /// Directory of `<video_id>/` folders holding per-frame saliency maps
    /// named by frame index (e.g. `000012.png`).
    #[arg(long)]
    pub saliency_dir: Option<PathBuf>,
    /// Record best-of-three wall-clock seconds per video for building the
    /// dense prediction. Makes the report run-dependent.
    #[arg(long)]
    pub timing: bool,
}

/// Trailing digits of a file stem as a frame index.
fn frame_index(path: &Path) -> Option<usize> {
    let stem = path.file_stem()?.to_str()?;
    let digits = stem.len() - stem.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    stem[stem.len() - digits..].parse().ok()
}

fn saliency_maps(dir: &Path, video_id: &str) -> Result<BTreeMap<usize, PathBuf>> {
    let sub = dir.join(video_id);
    if !sub.is_dir() {
        return Err(DataError(format!("no saliency maps for '{video_id}' (expected directory {})", sub.display())).into());
    }
    let mut maps = BTreeMap::new();
    for entry in std::fs::read_dir(&sub)? {
        let p = entry?.path();
        let is_image = p
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "pgm" | "ppm" | "pnm"));
        if !is_image {
            continue;
        }
        if let Some(i) = frame_index(&p) {
            if let Some(prev) = maps.insert(i, p.clone()) {
                return Err(DataError(format!("frame {i} has two maps: {} and {}", prev.display(), p.display())).into());
            }
        }
    }
    Ok(maps)
}

fn frame_scores(dir: &Path, video_id: &str, pred: &DenseTrack) -> Result<Vec<SaliencyScores>> {
    let mut out = Vec::new();
    for (i, path) in saliency_maps(dir, video_id)? {
        let b = pred.boxes.get(i).ok_or_else(|| {
            DataError(format!("saliency map {} is beyond the {} frames of '{video_id}'", path.display(), pred.len()))
        })?;
        let reference = read_saliency_map(&path).with_context(|| format!("reading {}", path.display()))?;
        let mask = box_to_binary_map_sized(b, pred.dims, reference.width, reference.height)?;
        out.push(saliency_scores(&mask, &reference).with_context(|| format!("scoring {}", path.display()))?);
    }
    Ok(out)
}

fn prediction(gt: &AnnotationTrack, pred: Option<&AnnotationTrack>, args: &Args) -> Result<DenseTrack> {
    let dense = match pred {
        None => DenseTrack::constant(gt.dims, center_crop(gt.dims), gt.frame_count),
        Some(p) => {
            if p.dims != gt.dims || p.frame_count != gt.frame_count {
                return Err(DataError(format!(
                    "prediction for '{}' covers {} frames of {} but ground truth covers {} frames of {}",
                    gt.video_id, p.frame_count, p.dims, gt.frame_count, gt.dims
                ))
                .into());
            }
            DenseTrack::from_track(p)?
        }
    };
    Ok(if args.preserve_height {
        preserve_height_track(&dense)?
    } else {
        dense
    })
}

pub fn run(args: Args) -> Result<()> {
    let gt_tracks = load_tracks(&args.ground_truth)?;
    let preds = match &args.input {
        Some(p) => load_tracks(p)?,
        None => Vec::new(),
    };
    if let Some(d) = &args.saliency_dir {
        require_dir(d, "saliency directory")?;
    }
    let output = args.output.as_deref().map(require_output).transpose()?;
    let thresholds = args.iou_thresholds.0.clone();
    if gt_tracks.is_empty() {
        return Err(UsageError("ground truth contains no videos".into()).into());
    }
    let by_id: BTreeMap<&str, &AnnotationTrack> = preds.iter().map(|t| (t.video_id.as_str(), t)).collect();

    let mut pairs = Vec::with_capacity(gt_tracks.len());
    let mut times = Vec::new();
    for gt in &gt_tracks {
        let pred = match args.center_crop {
            true => None,
            false => Some(
                *by_id
                    .get(gt.video_id.as_str())
                    .ok_or_else(|| DataError(format!("no prediction for video '{}'", gt.video_id)))?,
            ),
        };
        let dense = if args.timing {
            let (d, secs) = best_of_three(|| prediction(gt, pred, &args));
            times.push(secs);
            d?
        } else {
            prediction(gt, pred, &args)?
        };
        pairs.push(EvalPair {
            video_id: gt.video_id.clone(),
            pred: dense,
            gt: DenseTrack::from_track(gt)?,
        });
    }
    let exec = Execution::default();
    let mut report = evaluate(&pairs, &thresholds, exec)?;

    if let Some(dir) = &args.saliency_dir {
        let per_video = exec.try_map(&pairs, |p| frame_scores(dir, &p.video_id, &p.pred))?;
        let all: Vec<SaliencyScores> = per_video.into_iter().flatten().collect();
        report.saliency = Some(mean_saliency(&all).ok_or_else(|| DataError("no saliency maps found".into()))?);
    }
    if args.timing {
        report.timing_seconds_per_video = Some(times.iter().sum::<f64>() / times.len() as f64);
    }

    let mut line = format!("{} videos  m_IoU {:.2}", report.videos, report.m_iou);
    for &r in &thresholds {
        line.push_str(&format!("  IoU@{} {:.2}", threshold_key(r), report.iou_at[&threshold_key(r)]));
    }
    if let Some(s) = report.temporal_smoothness {
        line.push_str(&format!("  smoothness {s:.2}"));
    }
    println!("{line}");
    if let Some(s) = &report.saliency {
        println!("saliency  LCC {:.4}  SIM {:.4}  MAE {:.4}  MSE {:.4}", s.lcc, s.sim, s.mae, s.mse);
    }
    if let Some(t) = report.timing_seconds_per_video {
        println!("timing  {t:.3e} s per video");
    }
    if let Some(p) = output {
        write_report(&p, &report)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_index_from_stem() {
        assert_eq!(frame_index(Path::new("a/000012.png")), Some(12));
        assert_eq!(frame_index(Path::new("map_7.png")), Some(7));
        assert_eq!(frame_index(Path::new("cover.png")), None);
    }
}
