use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;
use vcrop_core::analysis::{
    center_dispersion, consecutive_center_distance, consecutive_iou, diversity_features, frame_center_distance,
    lof_outliers, mean_box_area, mean_track_area, outlier_analysis_mask, sessions_from_tracks, text_histogram,
    zscore_outliers_at, DiversityFeatures, OutlierReport, TemporalPooling, DEFAULT_LOF_NEIGHBORS,
    DEFAULT_LOF_THRESHOLD, DEFAULT_TI_EXCLUDE_PERCENT, DEFAULT_ZSCORE_THRESHOLD,
};
use vcrop_core::io::write_report;
use vcrop_core::scenes::{detect_scenes, SceneConfig, DEFAULT_THRESHOLD};
use vcrop_core::{Execution, Point};

use super::{load_tracks, load_video};
use crate::{require_dir, require_output, UsageError};

pub const DISPERSION_DEFINITION: &str = "root-mean-square distance of box centers from their centroid, in pixels";
pub const ZSCORE_DEFINITION: &str =
    "modified z-score 0.6745*(v - median)/MAD per axis, point score = max over x and y, flagged when above the threshold";

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum Pooling {
    Mean,
    Max,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Annotation file to analyze.
    #[arg(long)]
    pub input: PathBuf,
    /// Video directory; enables colorfulness, SI and TI and scene detection.
    #[arg(long)]
    pub video_dir: Option<PathBuf>,
    /// Report file (JSON). A summary is always printed.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_LOF_NEIGHBORS)]
    pub lof_neighbors: usize,
    #[arg(long, default_value_t = DEFAULT_LOF_THRESHOLD)]
    pub lof_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_ZSCORE_THRESHOLD)]
    pub zscore_threshold: f64,
    /// Videos in the top this-many percent of TI are left out of outlier analysis.
    #[arg(long, default_value_t = DEFAULT_TI_EXCLUDE_PERCENT)]
    pub ti_exclude_percent: f64,
    /// Temporal pooling of SI and TI.
    #[arg(long, value_enum, default_value_t = Pooling::Mean)]
    pub pooling: Pooling,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub scene_threshold: f64,
    /// Print text histograms of the per-session and per-video statistics.
    #[arg(long)]
    pub histograms: bool,
}

#[derive(Serialize)]
struct SessionStats {
    annotator_id: String,
    annotations: usize,
    center_dispersion: Option<f64>,
    mean_box_area: Option<f64>,
}

#[derive(Serialize)]
struct VideoStats {
    video_id: String,
    annotations: usize,
    scene_count: Option<usize>,
    consecutive_iou: Option<f64>,
    consecutive_center_distance: Option<f64>,
    frame_center_distance: Option<f64>,
    mean_box_area: Option<f64>,
    diversity: Option<DiversityFeatures>,
    in_outlier_analysis: bool,
}

#[derive(Serialize)]
struct Flag {
    video_id: String,
    ordinal: usize,
    score: f64,
}

#[derive(Serialize)]
struct MethodSummary {
    threshold: f64,
    neighbors: Option<usize>,
    analyzed_videos: usize,
    analyzed_annotations: usize,
    skipped_videos: Vec<String>,
    flagged: Vec<Flag>,
}

#[derive(Serialize)]
struct Outliers {
    ti_exclude_percent: f64,
    zscore_definition: &'static str,
    lof: MethodSummary,
    modified_z_score: MethodSummary,
}

#[derive(Serialize)]
struct Report {
    dispersion_definition: &'static str,
    sessions: Vec<SessionStats>,
    videos: Vec<VideoStats>,
    outliers: Outliers,
}

fn summary(threshold: f64, neighbors: Option<usize>) -> MethodSummary {
    MethodSummary {
        threshold,
        neighbors,
        analyzed_videos: 0,
        analyzed_annotations: 0,
        skipped_videos: Vec::new(),
        flagged: Vec::new(),
    }
}

fn record(into: &mut MethodSummary, video_id: &str, ordinals: &[usize], report: OutlierReport) {
    into.analyzed_videos += 1;
    into.analyzed_annotations += ordinals.len();
    for i in report.flagged {
        into.flagged.push(Flag {
            video_id: video_id.to_string(),
            ordinal: ordinals[i],
            score: report.scores[i],
        });
    }
}

pub fn run(args: Args) -> Result<()> {
    let tracks = load_tracks(&args.input)?;
    if let Some(d) = &args.video_dir {
        require_dir(d, "video directory")?;
    }
    let output = args.output.as_deref().map(require_output).transpose()?;
    if args.lof_neighbors == 0 {
        return Err(UsageError("--lof-neighbors must be at least 1".into()).into());
    }
    let pooling = match args.pooling {
        Pooling::Mean => TemporalPooling::Mean,
        Pooling::Max => TemporalPooling::Max,
    };
    let exec = Execution::default();
    let scene_cfg = SceneConfig {
        threshold: args.scene_threshold,
        ..SceneConfig::default()
    };

    let sessions: Vec<SessionStats> = sessions_from_tracks(&tracks)
        .iter()
        .map(|s| SessionStats {
            annotator_id: s.annotator_id.clone(),
            annotations: s.entries.len(),
            center_dispersion: center_dispersion(s).ok(),
            mean_box_area: mean_box_area(s).ok(),
        })
        .collect();

    let mut videos = Vec::with_capacity(tracks.len());
    for t in &tracks {
        let (diversity, detected) = match &args.video_dir {
            Some(dir) => {
                let video = load_video(dir, t)?;
                let d = diversity_features(&video, pooling, exec).with_context(|| format!("features of '{}'", t.video_id))?;
                let scenes = t.scenes.clone().unwrap_or_else(|| detect_scenes(&video, &scene_cfg, exec));
                (Some(d), Some(scenes.scene_count()))
            }
            None => (None, t.scenes.as_ref().map(|s| s.scene_count())),
        };
        videos.push(VideoStats {
            video_id: t.video_id.clone(),
            annotations: t.len(),
            scene_count: detected,
            consecutive_iou: consecutive_iou(t).ok(),
            consecutive_center_distance: consecutive_center_distance(t).ok(),
            frame_center_distance: frame_center_distance(t).ok(),
            mean_box_area: mean_track_area(t).ok(),
            diversity,
            in_outlier_analysis: false,
        });
    }

    let scene_counts: Vec<usize> = videos.iter().map(|v| v.scene_count.unwrap_or(1)).collect();
    let ti: Vec<Option<f64>> = videos.iter().map(|v| v.diversity.map(|d| d.temporal_information)).collect();
    let mask = outlier_analysis_mask(&scene_counts, &ti, args.ti_exclude_percent);
    let mut lof = summary(args.lof_threshold, Some(args.lof_neighbors));
    let mut zs = summary(args.zscore_threshold, None);
    for ((t, v), include) in tracks.iter().zip(videos.iter_mut()).zip(mask) {
        v.in_outlier_analysis = include;
        if !include {
            continue;
        }
        let points: Vec<Point> = t.boxes().map(|b| b.center()).collect();
        let ordinals: Vec<usize> = t.annotations.iter().map(|a| a.ordinal).collect();
        match lof_outliers(&points, args.lof_neighbors, args.lof_threshold) {
            Ok(r) => record(&mut lof, &t.video_id, &ordinals, r),
            Err(_) => lof.skipped_videos.push(t.video_id.clone()),
        }
        match zscore_outliers_at(&points, args.zscore_threshold) {
            Ok(r) => record(&mut zs, &t.video_id, &ordinals, r),
            Err(_) => zs.skipped_videos.push(t.video_id.clone()),
        }
    }

    let report = Report {
        dispersion_definition: DISPERSION_DEFINITION,
        sessions,
        videos,
        outliers: Outliers {
            ti_exclude_percent: args.ti_exclude_percent,
            zscore_definition: ZSCORE_DEFINITION,
            lof,
            modified_z_score: zs,
        },
    };

    println!(
        "{} sessions, {} videos, {} annotations",
        report.sessions.len(),
        report.videos.len(),
        report.videos.iter().map(|v| v.annotations).sum::<usize>()
    );
    for (name, m) in [("LOF", &report.outliers.lof), ("modified z-score", &report.outliers.modified_z_score)] {
        println!(
            "{name}: {} of {} annotations flagged in {} videos ({} skipped)",
            m.flagged.len(),
            m.analyzed_annotations,
            m.analyzed_videos,
            m.skipped_videos.len()
        );
    }
    if args.histograms {
        let col = |f: fn(&SessionStats) -> Option<f64>| report.sessions.iter().filter_map(f).collect::<Vec<_>>();
        let vcol = |f: fn(&VideoStats) -> Option<f64>| report.videos.iter().filter_map(f).collect::<Vec<_>>();
        print!("{}", text_histogram("center dispersion (px)", &col(|s| s.center_dispersion), 10, 40));
        print!("{}", text_histogram("mean box area", &col(|s| s.mean_box_area), 10, 40));
        print!("{}", text_histogram("consecutive IoU", &vcol(|v| v.consecutive_iou), 10, 40));
        print!("{}", text_histogram("consecutive center distance (px)", &vcol(|v| v.consecutive_center_distance), 10, 40));
    }
    if let Some(p) = output {
        write_report(&p, &report)?;
    }
    Ok(())
}
