use std::path::PathBuf;

use anyhow::{Context, Result};
use vcrop_core::analysis::{consecutive_center_distance, consecutive_iou};
use vcrop_core::io::{read_scene_lists, write_annotations};
use vcrop_core::motion::FlowFrames;
use vcrop_core::scenes::{detect_scenes, SceneConfig, DEFAULT_THRESHOLD};
use vcrop_core::smoothing::{smooth_track, DEFAULT_WINDOW};
use vcrop_core::{AnnotationTrack, Execution, FilterConfig};

use super::{load_tracks, load_video};
use crate::{require_dir, require_file, require_output, DataError};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Raw annotation file.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory holding `<video_id>.y4m` files or frame directories.
    #[arg(long)]
    pub video_dir: PathBuf,
    /// Smoothed annotation file to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Filter window size in annotations.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    /// Scene list file used for tracks without their own scene cuts.
    #[arg(long)]
    pub scenes: Option<PathBuf>,
    /// Threshold for detecting cuts when neither the track nor `--scenes` provides them.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub scene_threshold: f64,
}

fn consistency(track: &AnnotationTrack) -> Option<(f64, f64)> {
    Some((consecutive_iou(track).ok()?, consecutive_center_distance(track).ok()?))
}

fn relative(before: f64, after: f64) -> String {
    if before == 0.0 {
        return "n/a".into();
    }
    format!("{:+.1}%", 100.0 * (after - before) / before)
}

pub fn run(args: Args) -> Result<()> {
    let tracks = load_tracks(&args.input)?;
    require_dir(&args.video_dir, "video directory")?;
    let output = require_output(&args.output)?;
    let scene_file = match &args.scenes {
        Some(p) => {
            require_file(p, "scene list")?;
            Some(read_scene_lists(p).with_context(|| format!("reading {}", p.display()))?)
        }
        None => None,
    };
    let cfg = FilterConfig {
        window_size: args.window,
        ..FilterConfig::default()
    };
    cfg.validate()?;
    let scene_cfg = SceneConfig {
        threshold: args.scene_threshold,
        ..SceneConfig::default()
    };
    let exec = Execution::default();

    let mut smoothed = Vec::with_capacity(tracks.len());
    for track in &tracks {
        let id = &track.video_id;
        let video = load_video(&args.video_dir, track)?;
        if video.len() != track.frame_count {
            return Err(DataError(format!(
                "video '{id}' has {} frames but its track declares {}",
                video.len(),
                track.frame_count
            ))
            .into());
        }
        let boundaries = match (&track.scenes, scene_file.as_ref().and_then(|m| m.get(id))) {
            (Some(s), _) => s.clone(),
            (None, Some(s)) => s.clone(),
            (None, None) => detect_scenes(&video, &scene_cfg, exec),
        };
        let frames = FlowFrames::from_sequence(&video, &cfg.motion, exec)?;
        let mut out = smooth_track(track, &frames, &boundaries, &cfg, exec).with_context(|| format!("smoothing '{id}'"))?;
        out.scenes = Some(boundaries);

        match (consistency(track), consistency(&out)) {
            (Some((iou0, d0)), Some((iou1, d1))) => println!(
                "{id}: consecutive IoU {iou0:.4} -> {iou1:.4} ({}), center distance {d0:.2} -> {d1:.2} px ({})",
                relative(iou0, iou1),
                relative(d0, d1)
            ),
            _ => println!("{id}: single annotation, unchanged"),
        }
        smoothed.push(out);
    }
    write_annotations(&output, &smoothed)?;
    Ok(())
}
