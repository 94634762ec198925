use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use vcrop_core::io::{read_video, scan_videos, write_scene_lists, DEFAULT_FPS};
use vcrop_core::scenes::{detect_scenes, SceneConfig, DEFAULT_MIN_SCENE_LEN, DEFAULT_THRESHOLD};
use vcrop_core::Execution;

use crate::{require_dir, require_output, DataError};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Every video in this directory is processed.
    #[arg(long)]
    pub video_dir: PathBuf,
    /// Scene list file to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Mean HSV difference (0..255 scale) that starts a new scene.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub scene_threshold: f64,
    /// Cuts closer than this many frames to the previous cut are dropped.
    #[arg(long, default_value_t = DEFAULT_MIN_SCENE_LEN)]
    pub min_scene_len: usize,
}

pub fn run(args: Args) -> Result<()> {
    require_dir(&args.video_dir, "video directory")?;
    let output = require_output(&args.output)?;
    let cfg = SceneConfig {
        threshold: args.scene_threshold,
        min_scene_len: args.min_scene_len,
    };
    let videos = scan_videos(&args.video_dir, DEFAULT_FPS)?;
    if videos.is_empty() {
        return Err(DataError(format!("no videos in {}", args.video_dir.display())).into());
    }
    let mut lists = BTreeMap::new();
    for (id, source) in videos {
        let video = read_video(&source).with_context(|| format!("reading {}", source.path().display()))?;
        let scenes = detect_scenes(&video, &cfg, Execution::default());
        println!("{id}: {} frames, {} scenes, cuts {:?}", video.len(), scenes.scene_count(), scenes.cuts());
        lists.insert(id, scenes);
    }
    write_scene_lists(&output, &lists)?;
    Ok(())
}
