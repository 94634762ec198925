use std::path::PathBuf;

use anyhow::Result;
use vcrop_core::io::{write_annotations, write_y4m};
use vcrop_core::synth::fixture_set;

use crate::UsageError;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Directory to create; receives `videos/`, `raw.json` and `ground_truth.json`.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 6)]
    pub videos: usize,
}

pub fn run(args: Args) -> Result<()> {
    if args.videos == 0 {
        return Err(UsageError("--videos must be at least 1".into()).into());
    }
    let set = fixture_set(args.seed, args.videos)?;
    let videos = args.output.join("videos");
    std::fs::create_dir_all(&videos)?;
    for (id, seq) in &set.videos {
        write_y4m(videos.join(format!("{id}.y4m")), seq)?;
    }
    write_annotations(args.output.join("raw.json"), &set.raw)?;
    write_annotations(args.output.join("ground_truth.json"), &set.ground_truth)?;
    println!("{} videos written to {}", set.videos.len(), args.output.display());
    Ok(())
}
