//! Annotation session service.
//!
//! Serves frames of the videos in one directory, walks annotators through a
//! queue of frames with up to three attempts each, renders Lanczos previews
//! of every attempt and exports the accepted boxes in the annotation file
//! format of `vcrop-core`. See `API.md` in this crate for the endpoint
//! contract.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::Router;
use tower_http::services::ServeDir;

pub mod api;
pub mod catalog;
pub mod error;
pub mod session;
pub mod store;

pub use catalog::Catalog;
pub use error::ServerError;
pub use session::{AnnotationSession, Item, MAX_ATTEMPTS};
pub use store::SessionStore;

pub const DEFAULT_PREVIEW_HEIGHT: u32 = 1080;
/// Frames between default samples.
pub const DEFAULT_SAMPLE_STRIDE: usize = 6;
/// Default samples per video.
pub const DEFAULT_SAMPLES_PER_VIDEO: usize = 30;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub video_dir: PathBuf,
    /// Directory for session event logs; sessions live in memory only when unset.
    pub state_dir: Option<PathBuf>,
    pub preview_height: u32,
    /// Default queue: every video sampled every `sample_stride` frames.
    pub sample_stride: usize,
    pub samples_per_video: usize,
    /// Static files (the browser UI) served under `/`.
    pub static_dir: Option<PathBuf>,
}

impl ServerConfig {
    pub fn new(video_dir: impl Into<PathBuf>) -> Self {
        Self {
            video_dir: video_dir.into(),
            state_dir: None,
            preview_height: DEFAULT_PREVIEW_HEIGHT,
            sample_stride: DEFAULT_SAMPLE_STRIDE,
            samples_per_video: DEFAULT_SAMPLES_PER_VIDEO,
            static_dir: None,
        }
    }
}

pub struct AppState {
    pub catalog: Catalog,
    pub store: SessionStore,
    pub preview_height: u32,
    pub sample_stride: usize,
    pub samples_per_video: usize,
}

impl AppState {
    /// Scans the video directory and replays any persisted sessions.
    pub fn open(config: &ServerConfig) -> Result<Self, ServerError> {
        if config.preview_height < 2 {
            return Err(ServerError::Invalid(format!(
                "preview height {} is too small",
                config.preview_height
            )));
        }
        if config.sample_stride == 0 {
            return Err(ServerError::Invalid("sample stride must be at least 1".into()));
        }
        let catalog = Catalog::scan(&config.video_dir)?;
        let store = match &config.state_dir {
            Some(dir) => SessionStore::open(dir)?,
            None => SessionStore::in_memory(),
        };
        Ok(Self {
            catalog,
            store,
            preview_height: config.preview_height,
            sample_stride: config.sample_stride,
            samples_per_video: config.samples_per_video,
        })
    }
}

pub fn router(state: Arc<AppState>, static_dir: Option<&std::path::Path>) -> Router {
    let app = api::routes().with_state(state);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

/// Runs the service on `addr` until interrupted.
pub async fn serve(config: ServerConfig, addr: SocketAddr) -> Result<(), ServerError> {
    let state = Arc::new(AppState::open(&config)?);
    let app = router(state, config.static_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(vcrop_core::Error::from)?;
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(vcrop_core::Error::from)?;
    Ok(())
}
