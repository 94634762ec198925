use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::{Context, Result};
use vcrop_server::{serve, ServerConfig, DEFAULT_PREVIEW_HEIGHT, DEFAULT_SAMPLES_PER_VIDEO, DEFAULT_SAMPLE_STRIDE};

use crate::{require_dir, UsageError};

#[derive(clap::Args, Debug)]
pub struct Args {
    #[arg(long)]
    pub video_dir: PathBuf,
    /// Directory for session event logs; sessions are lost on exit without it.
    #[arg(long)]
    pub state_dir: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Height of attempt previews in pixels.
    #[arg(long, default_value_t = DEFAULT_PREVIEW_HEIGHT)]
    pub preview_height: u32,
    /// Frames between the default samples of each video.
    #[arg(long, default_value_t = DEFAULT_SAMPLE_STRIDE)]
    pub stride: usize,
    /// Default samples per video.
    #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_VIDEO)]
    pub frames_per_video: usize,
    /// Built browser UI to serve under `/`.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    /// Worker threads of the HTTP runtime.
    #[arg(long, hide = true)]
    pub workers: Option<usize>,
}

pub fn run(args: Args) -> Result<()> {
    require_dir(&args.video_dir, "video directory")?;
    if let Some(d) = &args.static_dir {
        require_dir(d, "static directory")?;
    }
    if args.stride == 0 {
        return Err(UsageError("--stride must be at least 1".into()).into());
    }
    let config = ServerConfig {
        video_dir: args.video_dir,
        state_dir: args.state_dir,
        preview_height: args.preview_height,
        sample_stride: args.stride,
        samples_per_video: args.frames_per_video,
        static_dir: args.static_dir,
    };
    let mut rt = tokio::runtime::Builder::new_multi_thread();
    rt.enable_all();
    if let Some(n) = args.workers {
        rt.worker_threads(n);
    }
    let rt = rt.build().context("starting the async runtime")?;
    eprintln!("listening on http://{}", args.addr);
    rt.block_on(serve(config, args.addr))?;
    Ok(())
}
