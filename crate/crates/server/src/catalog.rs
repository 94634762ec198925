//! Videos available for annotation.

use std::collections::BTreeMap;
use std::path::Path;

use vcrop_core::io::{scan_videos, FrameReader, DEFAULT_FPS};
use vcrop_core::{FrameDims, RgbFrame};

use crate::error::ServerError;

pub struct VideoEntry {
    pub video_id: String,
    pub dims: FrameDims,
    pub frame_count: usize,
    reader: FrameReader,
}

impl VideoEntry {
    pub fn read_frame(&self, index: usize) -> Result<RgbFrame, ServerError> {
        if index >= self.frame_count {
            return Err(ServerError::NotFound(format!(
                "video '{}' has no frame {index} ({} frames)",
                self.video_id, self.frame_count
            )));
        }
        Ok(self.reader.read_frame(index)?)
    }
}

/// Every `<id>.y4m` file and every directory of numbered frames directly
/// under the video directory, keyed by id.
#[derive(Default)]
pub struct Catalog {
    videos: BTreeMap<String, VideoEntry>,
}

impl Catalog {
    pub fn scan(dir: impl AsRef<Path>) -> Result<Self, ServerError> {
        let mut videos = BTreeMap::new();
        for (id, source) in scan_videos(dir, DEFAULT_FPS)? {
            let reader = FrameReader::open(&source)?;
            videos.insert(
                id.clone(),
                VideoEntry {
                    video_id: id,
                    dims: reader.dims(),
                    frame_count: reader.len(),
                    reader,
                },
            );
        }
        Ok(Self { videos })
    }

    pub fn get(&self, id: &str) -> Result<&VideoEntry, ServerError> {
        self.videos
            .get(id)
            .ok_or_else(|| ServerError::NotFound(format!("unknown video '{id}'")))
    }

    pub fn iter(&self) -> impl Iterator<Item = &VideoEntry> {
        self.videos.values()
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }
}
