pub mod analyze;
pub mod evaluate;
pub mod render;
pub mod scenes;
pub mod serve;
pub mod smooth;
pub mod synth;

use std::path::Path;

use anyhow::{Context, Result};
use vcrop_core::io::{read_annotations, read_video, VideoSource, DEFAULT_FPS};
use vcrop_core::{AnnotationTrack, FrameSequence};

use crate::{require_file, DataError};

pub fn load_tracks(path: &Path) -> Result<Vec<AnnotationTrack>> {
    require_file(path, "annotation file")?;
    read_annotations(path).with_context(|| format!("reading {}", path.display()))
}

/// Reads the video of `track` from `dir` and checks its size against the
/// track header.
pub fn load_video(dir: &Path, track: &AnnotationTrack) -> Result<FrameSequence> {
    let id = &track.video_id;
    let source = VideoSource::find(dir, id, DEFAULT_FPS)
        .ok_or_else(|| DataError(format!("no video '{id}' (expected {id}.y4m or {id}/) in {}", dir.display())))?;
    let video = read_video(&source).with_context(|| format!("reading {}", source.path().display()))?;
    let dims = video.dims().ok_or_else(|| DataError(format!("video '{id}' has no frames")))?;
    if dims != track.dims {
        return Err(DataError(format!("video '{id}' is {dims} but its track declares {}", track.dims)).into());
    }
    Ok(video)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds(pub Vec<f64>);

/// Parses `0.3,0.5` style lists.
pub fn parse_thresholds(s: &str) -> Result<Thresholds, String> {
    s.split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().map_err(|_| format!("'{t}' is not a number"))?;
            if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(format!("threshold {v} outside [0, 1]"))
            }
        })
        .collect::<Result<_, _>>()
        .map(Thresholds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_lists() {
        assert_eq!(parse_thresholds("0.3,0.5").unwrap().0, [0.3, 0.5]);
        assert_eq!(parse_thresholds(" 0.7 ").unwrap().0, [0.7]);
        assert!(parse_thresholds("0.3,x").is_err());
        assert!(parse_thresholds("1.5").is_err());
    }
}
