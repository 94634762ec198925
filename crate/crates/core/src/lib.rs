//! Temporal smoothing of sparse 9:16 portrait-crop annotations on landscape
//! video, plus the tooling around it: Lucas-Kanade point tracking, scene cut
//! detection, dataset statistics, evaluation metrics, Lanczos rendering and
//! the file formats that tie them together.
//!
//! The central entry point is [`smoothing::smooth_track`], which refines each
//! annotation of a track by warping the ROI centers of its temporal
//! neighbours into the anchor frame and taking a Hamming-weighted average of
//! the admissible ones.

pub mod analysis;
pub mod error;
pub mod exec;
pub mod frame;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod motion;
pub mod render;
pub mod scenes;
pub mod smoothing;
pub mod synth;

pub use error::{Error, Result};
pub use exec::Execution;
pub use frame::{FrameSequence, GrayFrame, RgbFrame};
pub use geometry::{CropBox, FrameDims, Point, RectBox};
pub use scenes::SceneBoundaryList;
pub use smoothing::{Annotation, AnnotationTrack, FilterConfig, Provenance};
