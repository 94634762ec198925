//! HTTP routes.
//!
//! Request bodies are parsed by hand from raw bytes so that malformed JSON
//! gets the same error envelope as every other failure.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use vcrop_core::io::encode_png;
use vcrop_core::render::{portrait_dims, render_frame};
use vcrop_core::{Annotation, AnnotationTrack, CropBox, FrameDims, Provenance};

use crate::error::ServerError;
use crate::session::{AnnotationSession, Event, Item, MAX_ATTEMPTS};
use crate::store::lock;
use crate::AppState;

/// Largest accepted deviation from 9:16 for rectangle submissions, in pixels.
pub const ASPECT_TOLERANCE_PX: f64 = 1.0;

type Shared = Arc<AppState>;
type ApiResult<T> = Result<T, ServerError>;

pub fn routes() -> Router<Shared> {
    Router::new()
        .route("/api/videos", get(list_videos))
        .route("/api/videos/{video}/frames/{index}", get(frame_png))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(session_state))
        .route("/api/sessions/{id}/current", get(current_item))
        .route("/api/sessions/{id}/attempts", post(submit_attempt))
        .route("/api/sessions/{id}/accept", post(accept_current))
        .route("/api/sessions/{id}/items/{item}/attempts/{n}/preview", get(preview_png))
        .route("/api/export", get(export))
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ServerError::BadRequest(format!("malformed request body: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServerError::Invalid(format!("worker failed: {e}")))?
}

fn png(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "image/png")], bytes).into_response()
}

#[derive(Serialize)]
struct ItemDescriptor {
    item: usize,
    video_id: String,
    frame_index: usize,
    width: u32,
    height: u32,
    attempts_used: usize,
    attempts_remaining: usize,
    image_url: String,
}

#[derive(Serialize)]
struct Progress {
    session_id: String,
    annotator_id: String,
    total: usize,
    accepted: usize,
    pending: usize,
    completed: bool,
    current: Option<ItemDescriptor>,
}

fn descriptor(state: &AppState, s: &AnnotationSession) -> ApiResult<Option<ItemDescriptor>> {
    let Some((item, it)) = s.current() else { return Ok(None) };
    let video = state.catalog.get(&it.video_id)?;
    let used = s.current_attempts().len();
    Ok(Some(ItemDescriptor {
        item,
        video_id: it.video_id.clone(),
        frame_index: it.frame_index,
        width: video.dims.width,
        height: video.dims.height,
        attempts_used: used,
        attempts_remaining: MAX_ATTEMPTS - used,
        image_url: format!("/api/videos/{}/frames/{}", it.video_id, it.frame_index),
    }))
}

fn progress(state: &AppState, s: &AnnotationSession) -> ApiResult<Progress> {
    Ok(Progress {
        session_id: s.session_id.clone(),
        annotator_id: s.annotator_id.clone(),
        total: s.items.len(),
        accepted: s.accepted.len(),
        pending: s.pending(),
        completed: s.is_completed(),
        current: descriptor(state, s)?,
    })
}

async fn list_videos(State(state): State<Shared>) -> Json<Value> {
    let videos: Vec<Value> = state
        .catalog
        .iter()
        .map(|v| {
            json!({
                "video_id": v.video_id,
                "width": v.dims.width,
                "height": v.dims.height,
                "frame_count": v.frame_count,
            })
        })
        .collect();
    Json(json!({ "videos": videos }))
}

async fn frame_png(State(state): State<Shared>, Path((video, index)): Path<(String, usize)>) -> ApiResult<Response> {
    state.catalog.get(&video)?;
    let bytes = blocking(move || {
        let frame = state.catalog.get(&video)?.read_frame(index)?;
        Ok(encode_png(&frame)?)
    })
    .await?;
    Ok(png(bytes))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    annotator_id: String,
    #[serde(default)]
    items: Option<Vec<Item>>,
}

/// Every video sampled at frames 0, d, 2d, ... up to `per_video` frames each.
pub fn default_items(catalog: &crate::catalog::Catalog, stride: usize, per_video: usize) -> Vec<Item> {
    catalog
        .iter()
        .flat_map(|v| {
            (0..v.frame_count)
                .step_by(stride)
                .take(per_video)
                .map(|frame_index| Item {
                    video_id: v.video_id.clone(),
                    frame_index,
                })
        })
        .collect()
}

async fn create_session(State(state): State<Shared>, body: Bytes) -> ApiResult<(StatusCode, Json<Progress>)> {
    let req: CreateRequest = parse_body(&body)?;
    let annotator = req.annotator_id.trim().to_string();
    if annotator.is_empty() {
        return Err(ServerError::Validation("annotator_id must not be empty".into()));
    }
    let items = match req.items {
        Some(items) => items,
        None => default_items(&state.catalog, state.sample_stride, state.samples_per_video),
    };
    for (n, it) in items.iter().enumerate() {
        let v = state
            .catalog
            .get(&it.video_id)
            .map_err(|_| ServerError::NotFound(format!("items[{n}]: unknown video '{}'", it.video_id)))?;
        if it.frame_index >= v.frame_count {
            return Err(ServerError::NotFound(format!(
                "items[{n}]: video '{}' has no frame {} ({} frames)",
                it.video_id, it.frame_index, v.frame_count
            )));
        }
    }
    let session = AnnotationSession::new(uuid::Uuid::new_v4().to_string(), annotator, items);
    let body = progress(&state, &session)?;
    let st = state.clone();
    blocking(move || st.store.create(session)).await?;
    Ok((StatusCode::CREATED, Json(body)))
}

async fn session_state(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let slot = state.store.get(&id)?;
    let s = lock(&slot).session.clone();
    let p = progress(&state, &s)?;
    Ok(Json(json!({
        "progress": p,
        "items": s.items,
        "attempts": s.attempts,
        "accepted": s.accepted,
    })))
}

async fn current_item(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Progress>> {
    let slot = state.store.get(&id)?;
    let s = lock(&slot).session.clone();
    Ok(Json(progress(&state, &s)?))
}

/// Either a crop box or a drawn rectangle in native pixel coordinates.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum AttemptRequest {
    Box { cx: f64, cy: f64, r: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
}

/// Converts a submission into a box valid for `dims`.
pub fn attempt_box(dims: FrameDims, req: AttemptRequest) -> Result<CropBox, String> {
    let b = match req {
        AttemptRequest::Box { cx, cy, r } => CropBox::new(cx, cy, r),
        AttemptRequest::Rect { x0, y0, x1, y1 } => {
            let (w, h) = (x1 - x0, y1 - y0);
            if !(w > 0.0 && h > 0.0) {
                return Err(format!("rectangle [{x0}, {x1}) x [{y0}, {y1}) is empty"));
            }
            let want = h * 9.0 / 16.0;
            if (w - want).abs() > ASPECT_TOLERANCE_PX {
                return Err(format!("rectangle is {w} x {h} px, not 9:16 (width should be {want:.2})"));
            }
            CropBox::new((x0 + x1) / 2.0, (y0 + y1) / 2.0, h / dims.height as f64)
        }
    };
    b.validate_for(dims).map_err(|e| e.to_string())?;
    if !(b.cx >= 0.0 && b.cx <= dims.width as f64 && b.cy >= 0.0 && b.cy <= dims.height as f64) {
        return Err(format!("center ({}, {}) lies outside the frame", b.cx, b.cy));
    }
    Ok(b)
}

async fn submit_attempt(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let req: AttemptRequest = serde_json::from_slice(&body).map_err(|_| {
        ServerError::BadRequest("attempt body must be {cx, cy, r} or {x0, y0, x1, y1}".into())
    })?;
    let slot = state.store.get(&id)?;
    let st = state.clone();
    blocking(move || {
        let mut guard = lock(&slot);
        let Some((_, item)) = guard.session.current() else {
            return Err(crate::session::SessionError::Done.into());
        };
        let dims = st.catalog.get(&item.video_id)?.dims;
        let b = attempt_box(dims, req).map_err(ServerError::Validation)?;
        let item = guard.session.cursor;
        guard.record(&Event::Attempt {
            cx: b.cx,
            cy: b.cy,
            r: b.r,
        })?;
        let s = &guard.session;
        let n = s.attempts[item].len();
        let auto = s.cursor != item;
        Ok(Json(json!({
            "item": item,
            "attempt_number": n,
            "auto_accepted": auto,
            "box": b,
            "preview_url": format!("/api/sessions/{}/items/{item}/attempts/{n}/preview", s.session_id),
            "progress": progress(&st, s)?,
        })))
    })
    .await
}

async fn accept_current(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let slot = state.store.get(&id)?;
    let st = state.clone();
    blocking(move || {
        let mut guard = lock(&slot);
        guard.record(&Event::Accept)?;
        let s = &guard.session;
        let accepted = s.accepted.last().copied();
        Ok(Json(json!({
            "accepted": accepted,
            "progress": progress(&st, s)?,
        })))
    })
    .await
}

async fn preview_png(
    State(state): State<Shared>,
    Path((id, item, n)): Path<(String, usize, usize)>,
) -> ApiResult<Response> {
    let slot = state.store.get(&id)?;
    let (it, b) = {
        let guard = lock(&slot);
        let s = &guard.session;
        let it = s
            .items
            .get(item)
            .cloned()
            .ok_or_else(|| ServerError::NotFound(format!("session has no item {item}")))?;
        let b = n
            .checked_sub(1)
            .and_then(|i| s.attempts[item].get(i))
            .copied()
            .ok_or_else(|| ServerError::NotFound(format!("item {item} has no attempt {n}")))?;
        (it, b)
    };
    let bytes = blocking(move || {
        let video = state.catalog.get(&it.video_id)?;
        let frame = video.read_frame(it.frame_index)?;
        let (w, h) = portrait_dims(state.preview_height);
        Ok(encode_png(&render_frame(&frame, &b, video.dims, w, h)?)?)
    })
    .await?;
    Ok(png(bytes))
}

#[derive(Deserialize)]
struct ExportQuery {
    session: Option<String>,
    annotator: Option<String>,
}

/// Accepted items of `sessions` merged into one raw track per video.
///
/// Annotations are ordered by frame, then annotator, then session, then
/// queue position. A track whose frames are exactly 0, d, 2d, ... gets
/// stride d.
pub fn export_tracks(
    catalog: &crate::catalog::Catalog,
    sessions: &[AnnotationSession],
) -> ApiResult<Vec<AnnotationTrack>> {
    let mut per_video: BTreeMap<&str, Vec<(usize, &str, &str, usize, CropBox, u8)>> = BTreeMap::new();
    for s in sessions {
        for a in &s.accepted {
            let it = &s.items[a.item];
            per_video.entry(&it.video_id).or_default().push((
                it.frame_index,
                &s.annotator_id,
                &s.session_id,
                a.item,
                a.crop,
                a.attempt_count,
            ));
        }
    }
    if per_video.is_empty() {
        return Err(ServerError::EmptyExport);
    }
    let mut tracks = Vec::with_capacity(per_video.len());
    for (video_id, mut rows) in per_video {
        let video = catalog.get(video_id)?;
        rows.sort_by(|a, b| (a.0, a.1, a.2, a.3).cmp(&(b.0, b.1, b.2, b.3)));
        let frames: Vec<usize> = rows.iter().map(|r| r.0).collect();
        let track = AnnotationTrack {
            video_id: video_id.to_string(),
            dims: video.dims,
            frame_count: video.frame_count,
            stride: regular_stride(&frames),
            scenes: None,
            provenance: Provenance::Raw,
            annotations: rows
                .into_iter()
                .enumerate()
                .map(|(i, (frame_index, annotator, _, _, crop, count))| Annotation {
                    ordinal: i + 1,
                    frame_index,
                    annotator_id: annotator.to_string(),
                    crop,
                    attempt_count: Some(count),
                })
                .collect(),
        };
        track
            .validate()
            .map_err(|e| ServerError::Invalid(format!("export of '{video_id}' failed validation: {e}")))?;
        tracks.push(track);
    }
    Ok(tracks)
}

fn regular_stride(frames: &[usize]) -> Option<usize> {
    if frames.len() < 2 || frames[0] != 0 {
        return None;
    }
    let d = frames[1];
    (d > 0 && frames.iter().enumerate().all(|(i, &f)| f == i * d)).then_some(d)
}

async fn export(State(state): State<Shared>, Query(q): Query<ExportQuery>) -> ApiResult<Response> {
    if let Some(id) = &q.session {
        state.store.get(id)?;
    }
    let sessions: Vec<AnnotationSession> = state
        .store
        .snapshot()
        .into_iter()
        .filter(|s| q.session.as_ref().is_none_or(|id| &s.session_id == id))
        .filter(|s| q.annotator.as_ref().is_none_or(|a| &s.annotator_id == a))
        .collect();
    let tracks = export_tracks(&state.catalog, &sessions)?;
    let text = vcrop_core::io::format_annotations(&tracks);
    Ok(([(header::CONTENT_TYPE, "application/json")], text).into_response())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HD: FrameDims = FrameDims::FULL_HD;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> AttemptRequest {
        AttemptRequest::Rect { x0, y0, x1, y1 }
    }

    fn bx(cx: f64, cy: f64, r: f64) -> AttemptRequest {
        AttemptRequest::Box { cx, cy, r }
    }

    #[test]
    fn rect_aspect_tolerance() {
        // 9:16 at full height is 607.5 px wide
        let ok = attempt_box(HD, rect(100.0, 0.0, 708.0, 1080.0)).unwrap();
        assert_eq!(ok, CropBox::new(404.0, 540.0, 1.0));
        assert!(attempt_box(HD, rect(100.0, 0.0, 706.0, 1080.0)).is_err());
        assert!(attempt_box(HD, rect(0.0, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn box_must_fit() {
        assert!(attempt_box(HD, bx(960.0, 540.0, 1.0)).is_ok());
        assert!(attempt_box(HD, bx(960.0, 540.0, 1.5)).is_err());
        assert!(attempt_box(HD, bx(-1.0, 540.0, 0.5)).is_err());
    }

    #[test]
    fn stride_detection() {
        assert_eq!(regular_stride(&[0, 6, 12]), Some(6));
        assert_eq!(regular_stride(&[0, 6, 6]), None);
        assert_eq!(regular_stride(&[6, 12]), None);
        assert_eq!(regular_stride(&[0]), None);
        assert_eq!(regular_stride(&[0, 6, 13]), None);
    }
}
