use std::path::PathBuf;

use anyhow::{Context, Result};
use vcrop_core::io::write_video;
use vcrop_core::metrics::{preserve_height_track, DenseTrack};
use vcrop_core::render::render_portrait;
use vcrop_core::Execution;

use super::{load_tracks, load_video};
use crate::{require_dir, UsageError};

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
pub enum Format {
    Y4m,
    Png,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Annotation file; every track is rendered.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub video_dir: PathBuf,
    /// Directory to write `<video_id>.y4m` (or `<video_id>/` frames) into.
    #[arg(long)]
    pub output: PathBuf,
    /// Output height in pixels; the width is the nearest even 9:16 width.
    #[arg(long, default_value_t = 1080)]
    pub height: u32,
    /// Follow only the horizontal center, with full-height crops.
    #[arg(long)]
    pub preserve_height: bool,
    #[arg(long, value_enum, default_value_t = Format::Y4m)]
    pub format: Format,
}

pub fn run(args: Args) -> Result<()> {
    let tracks = load_tracks(&args.input)?;
    require_dir(&args.video_dir, "video directory")?;
    require_dir(&args.output, "output directory")?;
    if args.height < 2 {
        return Err(UsageError("--height must be at least 2".into()).into());
    }
    let exec = Execution::default();
    for t in &tracks {
        let id = &t.video_id;
        let video = load_video(&args.video_dir, t)?;
        let mut dense = DenseTrack::from_track(t)?;
        if args.preserve_height {
            dense = preserve_height_track(&dense)?;
        }
        let out = render_portrait(&video, &dense, args.height, exec).with_context(|| format!("rendering '{id}'"))?;
        let path = match args.format {
            Format::Y4m => args.output.join(format!("{id}.y4m")),
            Format::Png => args.output.join(id),
        };
        write_video(&path, &out)?;
        let d = out.dims().expect("rendered video has frames");
        println!("{id}: {} frames at {d} -> {}", out.len(), path.display());
    }
    Ok(())
}
