//! File formats: Y4M and image-sequence video, annotation files, scene lists
//! and JSON reports.
//!
//! The annotation and scene-list writers produce a canonical text form (fixed
//! key order, two-space indentation, one annotation per line, coordinates with
//! six decimals) so that reading and rewriting a canonical file reproduces it
//! byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::ImageEncoder as _;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::frame::{FrameSequence, RgbFrame};
use crate::geometry::{CropBox, FrameDims};
use crate::metrics::SaliencyMap;
use crate::scenes::SceneBoundaryList;
use crate::smoothing::{Annotation, AnnotationTrack, Provenance};

pub const ANNOTATION_FORMAT: &str = "vcrop-annotations";
pub const SCENES_FORMAT: &str = "vcrop-scenes";
pub const FORMAT_VERSION: u64 = 1;
pub const DEFAULT_FPS: (u32, u32) = (30, 1);

const Y4M_MAGIC: &[u8] = b"YUV4MPEG2";
const FRAME_MAGIC: &[u8] = b"FRAME";
/// Longest header line accepted before giving up on a stream.
const MAX_HEADER_LEN: usize = 4096;

// ---------------------------------------------------------------------------
// Y4M

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chroma {
    C420,
    C422,
    C444,
    Mono,
}

impl Chroma {
    fn parse(tag: &str) -> Option<Self> {
        match tag {
            "420" | "420jpeg" | "420paldv" | "420mpeg2" => Some(Chroma::C420),
            "422" => Some(Chroma::C422),
            "444" => Some(Chroma::C444),
            "mono" => Some(Chroma::Mono),
            _ => None,
        }
    }

    /// Chroma plane size for a `w x h` luma plane.
    fn plane(self, w: usize, h: usize) -> (usize, usize) {
        match self {
            Chroma::C420 => (w.div_ceil(2), h.div_ceil(2)),
            Chroma::C422 => (w.div_ceil(2), h),
            Chroma::C444 => (w, h),
            Chroma::Mono => (0, 0),
        }
    }

    fn frame_bytes(self, w: usize, h: usize) -> usize {
        let (cw, ch) = self.plane(w, h);
        w * h + 2 * cw * ch
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Y4mHeader {
    pub width: u32,
    pub height: u32,
    pub fps: (u32, u32),
    pub chroma: Chroma,
    /// Full-range (0..255) samples rather than limited (16..235).
    pub full_range: bool,
}

/// Reads a header or frame line (without the trailing newline), tracking the
/// byte offset for error messages.
fn read_line<R: BufRead>(r: &mut R, offset: u64) -> Result<Option<Vec<u8>>> {
    let mut buf = Vec::new();
    let n = r.by_ref().take(MAX_HEADER_LEN as u64 + 1).read_until(b'\n', &mut buf)?;
    if n == 0 {
        return Ok(None);
    }
    if buf.last() != Some(&b'\n') {
        return Err(Error::parse(offset + n as u64, "unterminated header line"));
    }
    buf.pop();
    Ok(Some(buf))
}

fn parse_ratio(s: &str) -> Option<(u32, u32)> {
    let (a, b) = s.split_once(':')?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

fn parse_y4m_header(line: &[u8]) -> Result<Y4mHeader> {
    if !line.starts_with(Y4M_MAGIC) {
        return Err(Error::parse(0, "missing YUV4MPEG2 signature"));
    }
    let text = std::str::from_utf8(line).map_err(|e| Error::parse(e.valid_up_to() as u64, "header is not ASCII"))?;
    let mut width = None;
    let mut height = None;
    let mut fps = DEFAULT_FPS;
    let mut chroma = Chroma::C420;
    let mut full_range = false;
    let mut pos = Y4M_MAGIC.len();
    for token in text[Y4M_MAGIC.len()..].split(' ') {
        let at = pos as u64;
        pos += token.len() + 1;
        if token.is_empty() {
            continue;
        }
        let (tag, value) = token.split_at(1);
        match tag {
            "W" => width = Some(value.parse::<u32>().map_err(|_| Error::parse(at, format!("bad width '{value}'")))?),
            "H" => height = Some(value.parse::<u32>().map_err(|_| Error::parse(at, format!("bad height '{value}'")))?),
            "F" => {
                fps = parse_ratio(value)
                    .filter(|&(n, d)| n > 0 && d > 0)
                    .ok_or_else(|| Error::parse(at, format!("bad frame rate '{value}'")))?
            }
            "C" => {
                chroma = Chroma::parse(value)
                    .ok_or_else(|| Error::parse(at, format!("unsupported colorspace '{value}' (8-bit 420/422/444/mono only)")))?
            }
            "I" => {
                if value != "p" && value != "?" {
                    return Err(Error::parse(at, format!("interlacing '{value}' not supported")));
                }
            }
            "X" => {
                if let Some(range) = value.strip_prefix("COLORRANGE=") {
                    full_range = range.eq_ignore_ascii_case("FULL");
                }
            }
            "A" => {}
            _ => return Err(Error::parse(at, format!("unknown header tag '{token}'"))),
        }
    }
    let width = width.ok_or_else(|| Error::parse(line.len() as u64, "header has no W tag"))?;
    let height = height.ok_or_else(|| Error::parse(line.len() as u64, "header has no H tag"))?;
    if width == 0 || height == 0 {
        return Err(Error::parse(0, format!("degenerate size {width}x{height}")));
    }
    Ok(Y4mHeader {
        width,
        height,
        fps,
        chroma,
        full_range,
    })
}

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn ycc_to_rgb(y: u8, cb: u8, cr: u8, full_range: bool) -> [u8; 3] {
    let (y, cb, cr) = if full_range {
        (y as f64, cb as f64 - 128.0, cr as f64 - 128.0)
    } else {
        (
            (y as f64 - 16.0) * 255.0 / 219.0,
            (cb as f64 - 128.0) * 255.0 / 224.0,
            (cr as f64 - 128.0) * 255.0 / 224.0,
        )
    };
    [
        clamp_u8(y + 1.402 * cr),
        clamp_u8(y - 0.344136 * cb - 0.714136 * cr),
        clamp_u8(y + 1.772 * cb),
    ]
}

fn rgb_to_ycc(p: [u8; 3]) -> [f64; 3] {
    let (r, g, b) = (p[0] as f64, p[1] as f64, p[2] as f64);
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = (b - y) / 1.772;
    let cr = (r - y) / 1.402;
    [16.0 + y * 219.0 / 255.0, 128.0 + cb * 224.0 / 255.0, 128.0 + cr * 224.0 / 255.0]
}

fn decode_planes(h: &Y4mHeader, data: &[u8]) -> Result<RgbFrame> {
    let (w, ht) = (h.width as usize, h.height as usize);
    let (cw, ch) = h.chroma.plane(w, ht);
    let (luma, chroma) = data.split_at(w * ht);
    let (u, v) = chroma.split_at(cw * ch);
    let mut out = Vec::with_capacity(3 * w * ht);
    for y in 0..ht {
        for x in 0..w {
            let yv = luma[y * w + x];
            let (cb, cr) = match h.chroma {
                Chroma::Mono => (128, 128),
                Chroma::C444 => (u[y * w + x], v[y * w + x]),
                Chroma::C422 => (u[y * cw + x / 2], v[y * cw + x / 2]),
                Chroma::C420 => (u[(y / 2) * cw + x / 2], v[(y / 2) * cw + x / 2]),
            };
            out.extend_from_slice(&ycc_to_rgb(yv, cb, cr, h.full_range));
        }
    }
    RgbFrame::new(h.width, h.height, out)
}

/// Random access to the frames of a Y4M file.
#[derive(Debug)]
pub struct Y4mIndex {
    path: PathBuf,
    pub header: Y4mHeader,
    /// Byte offset of each frame's plane data.
    offsets: Vec<u64>,
}

impl Y4mIndex {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path)?;
        let len = file.metadata()?.len();
        let mut r = BufReader::new(file);
        let line = read_line(&mut r, 0)?.ok_or_else(|| Error::parse(0, "empty stream"))?;
        let header = parse_y4m_header(&line)?;
        let frame_bytes = header.chroma.frame_bytes(header.width as usize, header.height as usize) as u64;
        let mut offset = line.len() as u64 + 1;
        let mut offsets = Vec::new();
        while offset < len {
            let fl = read_line(&mut r, offset)?.ok_or_else(|| Error::parse(offset, "truncated frame header"))?;
            if !fl.starts_with(FRAME_MAGIC) {
                return Err(Error::parse(offset, "expected FRAME marker"));
            }
            offset += fl.len() as u64 + 1;
            if offset + frame_bytes > len {
                return Err(Error::parse(
                    offset,
                    format!("frame {} truncated: needs {frame_bytes} bytes, {} left", offsets.len(), len - offset),
                ));
            }
            offsets.push(offset);
            offset += frame_bytes;
            r.seek(SeekFrom::Start(offset))?;
        }
        Ok(Self { path, header, offsets })
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn dims(&self) -> FrameDims {
        FrameDims {
            width: self.header.width,
            height: self.header.height,
        }
    }

    pub fn read_frame(&self, index: usize) -> Result<RgbFrame> {
        let &off = self.offsets.get(index).ok_or(Error::Index {
            index,
            len: self.offsets.len(),
        })?;
        let n = self.header.chroma.frame_bytes(self.header.width as usize, self.header.height as usize);
        let mut f = File::open(&self.path)?;
        f.seek(SeekFrom::Start(off))?;
        let mut buf = vec![0u8; n];
        f.read_exact(&mut buf)?;
        decode_planes(&self.header, &buf)
    }
}

/// Decodes a whole Y4M stream held in memory.
pub fn parse_y4m(bytes: &[u8]) -> Result<FrameSequence> {
    let mut r = bytes;
    let line = read_line(&mut r, 0)?.ok_or_else(|| Error::parse(0, "empty stream"))?;
    let header = parse_y4m_header(&line)?;
    let frame_bytes = header.chroma.frame_bytes(header.width as usize, header.height as usize);
    let mut offset = line.len() + 1;
    let mut frames = Vec::new();
    while offset < bytes.len() {
        let rest = &bytes[offset..];
        let nl = rest
            .iter()
            .take(MAX_HEADER_LEN)
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::parse(offset as u64, "truncated frame header"))?;
        if !rest.starts_with(FRAME_MAGIC) {
            return Err(Error::parse(offset as u64, "expected FRAME marker"));
        }
        offset += nl + 1;
        if offset + frame_bytes > bytes.len() {
            return Err(Error::parse(
                offset as u64,
                format!("frame {} truncated: needs {frame_bytes} bytes, {} left", frames.len(), bytes.len() - offset),
            ));
        }
        frames.push(decode_planes(&header, &bytes[offset..offset + frame_bytes])?);
        offset += frame_bytes;
    }
    FrameSequence::new(frames, header.fps)
}

pub fn read_y4m(path: impl AsRef<Path>) -> Result<FrameSequence> {
    parse_y4m(&std::fs::read(path)?)
}

/// Encodes as 4:2:0 (JPEG siting), limited range BT.601.
pub fn encode_y4m(seq: &FrameSequence) -> Result<Vec<u8>> {
    let dims = seq
        .dims()
        .ok_or_else(|| Error::InsufficientData("cannot write a Y4M stream with no frames".into()))?;
    let (w, h) = (dims.width as usize, dims.height as usize);
    let (cw, ch) = Chroma::C420.plane(w, h);
    let mut out = format!(
        "YUV4MPEG2 W{} H{} F{}:{} Ip A1:1 C420jpeg XCOLORRANGE=LIMITED\n",
        dims.width, dims.height, seq.fps.0, seq.fps.1
    )
    .into_bytes();
    for f in seq.iter() {
        out.extend_from_slice(b"FRAME\n");
        let ycc: Vec<[f64; 3]> = f.data.chunks_exact(3).map(|p| rgb_to_ycc([p[0], p[1], p[2]])).collect();
        out.extend(ycc.iter().map(|p| clamp_u8(p[0])));
        for c in 1..3 {
            for by in 0..ch {
                for bx in 0..cw {
                    let mut sum = 0.0;
                    let mut n = 0.0;
                    for y in 2 * by..(2 * by + 2).min(h) {
                        for x in 2 * bx..(2 * bx + 2).min(w) {
                            sum += ycc[y * w + x][c];
                            n += 1.0;
                        }
                    }
                    out.push(clamp_u8(sum / n));
                }
            }
        }
    }
    Ok(out)
}

pub fn write_y4m(path: impl AsRef<Path>, seq: &FrameSequence) -> Result<()> {
    let bytes = encode_y4m(seq)?;
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(&bytes)?;
    f.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Image sequences

const IMAGE_EXTENSIONS: [&str; 4] = ["png", "ppm", "pgm", "pnm"];

/// Frame index encoded in a file name: the trailing digits of its stem.
fn frame_number(path: &Path) -> Option<usize> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    if !IMAGE_EXTENSIONS.contains(&ext.as_str()) {
        return None;
    }
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem.chars().rev().take_while(|c| c.is_ascii_digit()).collect();
    if digits.is_empty() {
        return None;
    }
    digits.chars().rev().collect::<String>().parse().ok()
}

/// Ordered frame paths of an image directory; indices must run `0..n`.
pub fn list_image_frames(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let mut numbered: BTreeMap<usize, PathBuf> = BTreeMap::new();
    for entry in std::fs::read_dir(dir.as_ref())? {
        let path = entry?.path();
        if let Some(n) = frame_number(&path) {
            if let Some(prev) = numbered.insert(n, path.clone()) {
                return Err(Error::DimsMismatch(format!(
                    "frame {n} appears twice: {} and {}",
                    prev.display(),
                    path.display()
                )));
            }
        }
    }
    if numbered.is_empty() {
        return Err(Error::parse(0, format!("no numbered image frames in {}", dir.as_ref().display())));
    }
    for (expect, &n) in numbered.keys().enumerate() {
        if n != expect {
            return Err(Error::MissingFrame { index: expect });
        }
    }
    Ok(numbered.into_values().collect())
}

pub fn read_image(path: impl AsRef<Path>) -> Result<RgbFrame> {
    let img = image::open(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    RgbFrame::new(w, h, img.into_raw())
}

pub fn read_image_dir(dir: impl AsRef<Path>, fps: (u32, u32)) -> Result<FrameSequence> {
    let frames = list_image_frames(dir)?
        .iter()
        .map(read_image)
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(frames, fps)
}

pub fn encode_png(frame: &RgbFrame) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out).write_image(
        &frame.data,
        frame.width,
        frame.height,
        image::ExtendedColorType::Rgb8,
    )?;
    Ok(out)
}


/// Writes `000000.png`, `000001.png`, ... into `dir`, creating it if needed.
pub fn write_image_dir(dir: impl AsRef<Path>, seq: &FrameSequence) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    for (i, f) in seq.iter().enumerate() {
        std::fs::write(dir.join(format!("{i:06}.png")), encode_png(f)?)?;
    }
    Ok(())
}

/// A video on disk: a Y4M file or a directory of numbered frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VideoSource {
    Y4m(PathBuf),
    ImageDir { path: PathBuf, fps: (u32, u32) },
}

impl VideoSource {
    /// Directories are image sequences, anything else is read as Y4M.
    pub fn detect(path: impl AsRef<Path>, fps: (u32, u32)) -> Self {
        let path = path.as_ref().to_path_buf();
        if path.is_dir() {
            VideoSource::ImageDir { path, fps }
        } else {
            VideoSource::Y4m(path)
        }
    }

    /// Looks for `<id>.y4m` or a directory `<id>` under `dir`.
    pub fn find(dir: impl AsRef<Path>, video_id: &str, fps: (u32, u32)) -> Option<Self> {
        let y4m = dir.as_ref().join(format!("{video_id}.y4m"));
        if y4m.is_file() {
            return Some(VideoSource::Y4m(y4m));
        }
        let sub = dir.as_ref().join(video_id);
        sub.is_dir().then_some(VideoSource::ImageDir { path: sub, fps })
    }

    pub fn path(&self) -> &Path {
        match self {
            VideoSource::Y4m(p) => p,
            VideoSource::ImageDir { path, .. } => path,
        }
    }
}

/// Every `<id>.y4m` file and every directory of numbered frames directly
/// under `dir`, sorted by id. Directories without numbered frames are
/// skipped.
pub fn scan_videos(dir: impl AsRef<Path>, fps: (u32, u32)) -> Result<Vec<(String, VideoSource)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir.as_ref())?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.sort();
    let mut found: BTreeMap<String, VideoSource> = BTreeMap::new();
    for path in paths {
        let entry = if path.is_dir() {
            if list_image_frames(&path).is_err() {
                continue;
            }
            path.file_name()
                .and_then(|n| n.to_str())
                .map(|n| (n.to_string(), VideoSource::ImageDir { path: path.clone(), fps }))
        } else if path.extension().is_some_and(|x| x.eq_ignore_ascii_case("y4m")) {
            path.file_stem()
                .and_then(|n| n.to_str())
                .map(|n| (n.to_string(), VideoSource::Y4m(path.clone())))
        } else {
            None
        };
        let Some((id, source)) = entry else { continue };
        if let Some(prev) = found.get(&id) {
            return Err(Error::validation(
                id.clone(),
                format!("video provided twice: {} and {}", prev.path().display(), path.display()),
            ));
        }
        found.insert(id, source);
    }
    Ok(found.into_iter().collect())
}

pub fn read_video(source: &VideoSource) -> Result<FrameSequence> {
    match source {
        VideoSource::Y4m(p) => read_y4m(p),
        VideoSource::ImageDir { path, fps } => read_image_dir(path, *fps),
    }
}

/// Writes Y4M when `path` ends in `.y4m`, otherwise a PNG directory.
pub fn write_video(path: impl AsRef<Path>, seq: &FrameSequence) -> Result<()> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("y4m")) {
        write_y4m(path, seq)
    } else {
        write_image_dir(path, seq)
    }
}

/// Frame-level random access for serving single frames.
#[derive(Debug)]
pub enum FrameReader {
    Y4m(Y4mIndex),
    Images { paths: Vec<PathBuf>, dims: FrameDims },
}

impl FrameReader {
    pub fn open(source: &VideoSource) -> Result<Self> {
        match source {
            VideoSource::Y4m(p) => Ok(FrameReader::Y4m(Y4mIndex::open(p)?)),
            VideoSource::ImageDir { path, .. } => {
                let paths = list_image_frames(path)?;
                let (width, height) = image::image_dimensions(&paths[0])?;
                Ok(FrameReader::Images {
                    paths,
                    dims: FrameDims { width, height },
                })
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FrameReader::Y4m(ix) => ix.len(),
            FrameReader::Images { paths, .. } => paths.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> FrameDims {
        match self {
            FrameReader::Y4m(ix) => ix.dims(),
            FrameReader::Images { dims, .. } => *dims,
        }
    }

    pub fn read_frame(&self, index: usize) -> Result<RgbFrame> {
        let frame = match self {
            FrameReader::Y4m(ix) => ix.read_frame(index)?,
            FrameReader::Images { paths, .. } => read_image(paths.get(index).ok_or(Error::Index {
                index,
                len: paths.len(),
            })?)?,
        };
        let d = self.dims();
        if (frame.width, frame.height) != (d.width, d.height) {
            return Err(Error::DimsMismatch(format!(
                "frame {index} is {}x{}, expected {d}",
                frame.width, frame.height
            )));
        }
        Ok(frame)
    }
}

/// Grayscale image as a saliency map (0..255 luma values).
pub fn read_saliency_map(path: impl AsRef<Path>) -> Result<SaliencyMap> {
    let img = image::open(path)?.to_luma8();
    let (w, h) = img.dimensions();
    SaliencyMap::new(w, h, img.into_raw().into_iter().map(f64::from).collect())
}

pub fn shared_frames(frames: Vec<RgbFrame>, fps: (u32, u32)) -> Result<FrameSequence> {
    FrameSequence::from_shared(frames.into_iter().map(Arc::new).collect(), fps)
}

// ---------------------------------------------------------------------------
// Strict JSON field access

struct Obj<'a> {
    path: String,
    map: &'a Map<String, Value>,
}

impl<'a> Obj<'a> {
    fn new(value: &'a Value, path: impl Into<String>, allowed: &[&str]) -> Result<Self> {
        let path = path.into();
        let map = value
            .as_object()
            .ok_or_else(|| Error::validation(path.clone(), "expected an object"))?;
        if let Some(k) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::validation(join(&path, k), "unknown field"));
        }
        Ok(Self { path, map })
    }

    fn field(&self, key: &str) -> String {
        join(&self.path, key)
    }

    fn get(&self, key: &str) -> Result<&'a Value> {
        self.map
            .get(key)
            .ok_or_else(|| Error::validation(self.field(key), "missing field"))
    }

    fn opt(&self, key: &str) -> Option<&'a Value> {
        self.map.get(key).filter(|v| !v.is_null())
    }

    fn str(&self, key: &str) -> Result<&'a str> {
        self.get(key)?
            .as_str()
            .ok_or_else(|| Error::validation(self.field(key), "expected a string"))
    }

    fn uint(&self, key: &str) -> Result<u64> {
        as_uint(self.get(key)?, &self.field(key))
    }

    fn num(&self, key: &str) -> Result<f64> {
        self.get(key)?
            .as_f64()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::validation(self.field(key), "expected a number"))
    }

    fn array(&self, key: &str) -> Result<&'a Vec<Value>> {
        self.get(key)?
            .as_array()
            .ok_or_else(|| Error::validation(self.field(key), "expected an array"))
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn as_uint(v: &Value, path: &str) -> Result<u64> {
    v.as_u64()
        .ok_or_else(|| Error::validation(path, "expected a non-negative integer"))
}

fn to_u32(v: u64, path: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::validation(path, format!("{v} is too large")))
}

fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| {
        // serde_json reports 1-based line and column; convert to a byte offset
        let offset: usize = text
            .split_inclusive('\n')
            .take(e.line().saturating_sub(1))
            .map(str::len)
            .sum::<usize>()
            + e.column().saturating_sub(1);
        Error::parse(offset as u64, e.to_string())
    })
}

fn check_header(root: &Obj, format: &str) -> Result<()> {
    let f = root.str("format")?;
    if f != format {
        return Err(Error::validation("format", format!("expected '{format}', got '{f}'")));
    }
    let v = root.uint("version")?;
    if v != FORMAT_VERSION {
        return Err(Error::validation("version", format!("unsupported version {v}")));
    }
    Ok(())
}

fn prefix_path(e: Error, prefix: &str) -> Error {
    match e {
        Error::Validation { path, message } => Error::Validation {
            path: join(prefix, &path),
            message,
        },
        other => other,
    }
}

// ---------------------------------------------------------------------------
// Annotation files

const VIDEO_KEYS: [&str; 8] = [
    "video_id",
    "width",
    "height",
    "frame_count",
    "stride",
    "scene_cuts",
    "provenance",
    "annotations",
];
const ANNOTATION_KEYS: [&str; 7] = ["ordinal", "frame_index", "annotator_id", "cx", "cy", "r", "attempt_count"];

fn parse_annotation(v: &Value, path: String) -> Result<Annotation> {
    let o = Obj::new(v, path, &ANNOTATION_KEYS)?;
    let attempt_count = match o.opt("attempt_count") {
        None => None,
        Some(v) => {
            let p = o.field("attempt_count");
            let n = as_uint(v, &p)?;
            Some(u8::try_from(n).map_err(|_| Error::validation(p, format!("{n} outside 1..=3")))?)
        }
    };
    Ok(Annotation {
        ordinal: o.uint("ordinal")? as usize,
        frame_index: o.uint("frame_index")? as usize,
        annotator_id: o.str("annotator_id")?.to_string(),
        crop: CropBox::new(o.num("cx")?, o.num("cy")?, o.num("r")?),
        attempt_count,
    })
}

fn parse_video(v: &Value, path: String) -> Result<AnnotationTrack> {
    let o = Obj::new(v, path.clone(), &VIDEO_KEYS)?;
    let width = to_u32(o.uint("width")?, &o.field("width"))?;
    let height = to_u32(o.uint("height")?, &o.field("height"))?;
    let dims = FrameDims::new(width, height).map_err(|e| Error::validation(o.field("width"), e.to_string()))?;
    let frame_count = o.uint("frame_count")? as usize;
    let stride = match o.opt("stride") {
        None => {
            // present-but-null means irregular; absent is an error
            o.get("stride")?;
            None
        }
        Some(s) => Some(as_uint(s, &o.field("stride"))? as usize),
    };
    let provenance_text = o.str("provenance")?;
    let provenance = Provenance::parse(provenance_text)
        .ok_or_else(|| Error::validation(o.field("provenance"), format!("unknown provenance '{provenance_text}'")))?;
    let scenes = match o.opt("scene_cuts") {
        None => None,
        Some(c) => {
            let p = o.field("scene_cuts");
            let arr = c.as_array().ok_or_else(|| Error::validation(p.clone(), "expected an array"))?;
            let cuts = arr
                .iter()
                .enumerate()
                .map(|(n, v)| as_uint(v, &format!("{p}[{n}]")).map(|c| c as usize))
                .collect::<Result<Vec<_>>>()?;
            Some(SceneBoundaryList::new(cuts, frame_count).map_err(|e| prefix_path(e, &path))?)
        }
    };
    let annotations = o
        .array("annotations")?
        .iter()
        .enumerate()
        .map(|(n, a)| parse_annotation(a, format!("{}[{n}]", o.field("annotations"))))
        .collect::<Result<Vec<_>>>()?;
    let track = AnnotationTrack {
        video_id: o.str("video_id")?.to_string(),
        dims,
        frame_count,
        stride,
        scenes,
        provenance,
        annotations,
    };
    track.validate().map_err(|e| prefix_path(e, &path))?;
    Ok(track)
}

/// Parses and validates an annotation document.
pub fn parse_annotations(text: &str) -> Result<Vec<AnnotationTrack>> {
    let root_value = parse_json(text)?;
    let root = Obj::new(&root_value, "", &["format", "version", "videos"])?;
    check_header(&root, ANNOTATION_FORMAT)?;
    let tracks = root
        .array("videos")?
        .iter()
        .enumerate()
        .map(|(n, v)| parse_video(v, format!("videos[{n}]")))
        .collect::<Result<Vec<_>>>()?;
    let mut seen = BTreeMap::new();
    for (n, t) in tracks.iter().enumerate() {
        if let Some(prev) = seen.insert(t.video_id.as_str(), n) {
            return Err(Error::validation(
                format!("videos[{n}].video_id"),
                format!("'{}' already used by videos[{prev}]", t.video_id),
            ));
        }
    }
    Ok(tracks)
}

pub fn read_annotations(path: impl AsRef<Path>) -> Result<Vec<AnnotationTrack>> {
    parse_annotations(&std::fs::read_to_string(path)?)
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn coord(v: f64) -> String {
    let s = format!("{v:.6}");
    // avoid "-0.000000" for tiny negatives produced by arithmetic
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Canonical text of an annotation document. Tracks are written in the
/// given order.
pub fn format_annotations(tracks: &[AnnotationTrack]) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"format\": {},", json_str(ANNOTATION_FORMAT));
    let _ = writeln!(out, "  \"version\": {FORMAT_VERSION},");
    if tracks.is_empty() {
        out.push_str("  \"videos\": []\n}\n");
        return out;
    }
    out.push_str("  \"videos\": [\n");
    for (vn, t) in tracks.iter().enumerate() {
        out.push_str("    {\n");
        let _ = writeln!(out, "      \"video_id\": {},", json_str(&t.video_id));
        let _ = writeln!(out, "      \"width\": {},", t.dims.width);
        let _ = writeln!(out, "      \"height\": {},", t.dims.height);
        let _ = writeln!(out, "      \"frame_count\": {},", t.frame_count);
        match t.stride {
            Some(s) => {
                let _ = writeln!(out, "      \"stride\": {s},");
            }
            None => out.push_str("      \"stride\": null,\n"),
        }
        if let Some(s) = &t.scenes {
            let cuts: Vec<String> = s.cuts().iter().map(usize::to_string).collect();
            let _ = writeln!(out, "      \"scene_cuts\": [{}],", cuts.join(", "));
        }
        let _ = writeln!(out, "      \"provenance\": {},", json_str(t.provenance.as_str()));
        if t.annotations.is_empty() {
            out.push_str("      \"annotations\": []\n");
        } else {
            out.push_str("      \"annotations\": [\n");
            for (an, a) in t.annotations.iter().enumerate() {
                let _ = write!(
                    out,
                    "        {{\"ordinal\": {}, \"frame_index\": {}, \"annotator_id\": {}, \"cx\": {}, \"cy\": {}, \"r\": {}",
                    a.ordinal,
                    a.frame_index,
                    json_str(&a.annotator_id),
                    coord(a.crop.cx),
                    coord(a.crop.cy),
                    coord(a.crop.r)
                );
                if let Some(c) = a.attempt_count {
                    let _ = write!(out, ", \"attempt_count\": {c}");
                }
                out.push('}');
                out.push_str(if an + 1 < t.annotations.len() { ",\n" } else { "\n" });
            }
            out.push_str("      ]\n");
        }
        out.push_str(if vn + 1 < tracks.len() { "    },\n" } else { "    }\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

/// Writes the canonical form after validating every track.
pub fn write_annotations(path: impl AsRef<Path>, tracks: &[AnnotationTrack]) -> Result<()> {
    for (n, t) in tracks.iter().enumerate() {
        t.validate().map_err(|e| prefix_path(e, &format!("videos[{n}]")))?;
    }
    write_atomic(path.as_ref(), format_annotations(tracks).as_bytes())
}

/// Same tracks with the provenance tag replaced.
pub fn with_provenance(tracks: &[AnnotationTrack], provenance: Provenance) -> Vec<AnnotationTrack> {
    tracks
        .iter()
        .cloned()
        .map(|mut t| {
            t.provenance = provenance;
            t
        })
        .collect()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Scene lists

pub fn format_scene_lists(lists: &BTreeMap<String, SceneBoundaryList>) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"format\": {},", json_str(SCENES_FORMAT));
    let _ = writeln!(out, "  \"version\": {FORMAT_VERSION},");
    if lists.is_empty() {
        out.push_str("  \"videos\": []\n}\n");
        return out;
    }
    out.push_str("  \"videos\": [\n");
    for (n, (id, s)) in lists.iter().enumerate() {
        let cuts: Vec<String> = s.cuts().iter().map(usize::to_string).collect();
        let _ = write!(
            out,
            "    {{\"video_id\": {}, \"frame_count\": {}, \"cuts\": [{}]}}",
            json_str(id),
            s.frame_count(),
            cuts.join(", ")
        );
        out.push_str(if n + 1 < lists.len() { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn parse_scene_lists(text: &str) -> Result<BTreeMap<String, SceneBoundaryList>> {
    let root_value = parse_json(text)?;
    let root = Obj::new(&root_value, "", &["format", "version", "videos"])?;
    check_header(&root, SCENES_FORMAT)?;
    let mut out = BTreeMap::new();
    for (n, v) in root.array("videos")?.iter().enumerate() {
        let path = format!("videos[{n}]");
        let o = Obj::new(v, path.clone(), &["video_id", "frame_count", "cuts"])?;
        let id = o.str("video_id")?.to_string();
        let cuts = o
            .array("cuts")?
            .iter()
            .enumerate()
            .map(|(c, v)| as_uint(v, &format!("{path}.cuts[{c}]")).map(|c| c as usize))
            .collect::<Result<Vec<_>>>()?;
        let list = SceneBoundaryList::new(cuts, o.uint("frame_count")? as usize).map_err(|e| match e {
            Error::Validation { path: p, message } => Error::Validation {
                path: join(&path, &p.replace("scene_cuts", "cuts")),
                message,
            },
            other => other,
        })?;
        if out.insert(id.clone(), list).is_some() {
            return Err(Error::validation(o.field("video_id"), format!("duplicate video '{id}'")));
        }
    }
    Ok(out)
}

pub fn read_scene_lists(path: impl AsRef<Path>) -> Result<BTreeMap<String, SceneBoundaryList>> {
    parse_scene_lists(&std::fs::read_to_string(path)?)
}

pub fn write_scene_lists(path: impl AsRef<Path>, lists: &BTreeMap<String, SceneBoundaryList>) -> Result<()> {
    write_atomic(path.as_ref(), format_scene_lists(lists).as_bytes())
}

// ---------------------------------------------------------------------------
// Reports

/// Pretty JSON with a trailing newline.
pub fn format_report<T: Serialize>(report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| Error::Config(format!("report serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_report<T: Serialize>(path: impl AsRef<Path>, report: &T) -> Result<()> {
    write_atomic(path.as_ref(), format_report(report)?.as_bytes())
}

pub fn read_report<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_value(parse_json(&text)?).map_err(|e| Error::validation("", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
  "format": "vcrop-annotations",
  "version": 1,
  "videos": [
    {
      "video_id": "clip-a",
      "width": 1920,
      "height": 1080,
      "frame_count": 18,
      "stride": 6,
      "scene_cuts": [9],
      "provenance": "raw",
      "annotations": [
        {"ordinal": 1, "frame_index": 0, "annotator_id": "s01", "cx": 960.000000, "cy": 540.000000, "r": 1.000000, "attempt_count": 2},
        {"ordinal": 2, "frame_index": 6, "annotator_id": "s02", "cx": 800.125000, "cy": 500.500000, "r": 0.750000},
        {"ordinal": 3, "frame_index": 12, "annotator_id": "s\"q", "cx": 700.000001, "cy": 400.000000, "r": 0.500000}
      ]
    },
    {
      "video_id": "clip-b",
      "width": 640,
      "height": 360,
      "frame_count": 5,
      "stride": null,
      "provenance": "smoothed",
      "annotations": [
        {"ordinal": 1, "frame_index": 1, "annotator_id": "s01", "cx": 320.000000, "cy": 180.000000, "r": 1.000000},
        {"ordinal": 2, "frame_index": 1, "annotator_id": "s02", "cx": 300.000000, "cy": 180.000000, "r": 1.000000}
      ]
    }
  ]
}
"#;

    #[test]
    fn canonical_round_trip() {
        let tracks = parse_annotations(SAMPLE).unwrap();
        assert_eq!(tracks.len(), 2);
        assert_eq!(tracks[0].scenes.as_ref().unwrap().cuts(), &[9]);
        assert_eq!(tracks[0].annotations[0].attempt_count, Some(2));
        assert_eq!(tracks[1].stride, None);
        assert_eq!(format_annotations(&tracks), SAMPLE);
    }

    fn expect_path(text: &str, path: &str) {
        match parse_annotations(text) {
            Err(Error::Validation { path: p, .. }) => assert_eq!(p, path),
            other => panic!("expected validation error at {path}, got {other:?}"),
        }
    }

    #[test]
    fn validation_errors_name_fields() {
        expect_path(&SAMPLE.replace("\"r\": 0.750000", "\"r\": 1.250000"), "videos[0].annotations[1].r");
        expect_path(&SAMPLE.replace("\"frame_index\": 12", "\"frame_index\": 13"), "videos[0].annotations[2].frame_index");
        expect_path(&SAMPLE.replace("\"cy\": 500.500000", "\"cy\": -1.0"), "videos[0].annotations[1].cy");
        expect_path(&SAMPLE.replace("\"attempt_count\": 2", "\"attempt_count\": 4"), "videos[0].annotations[0].attempt_count");
        expect_path(&SAMPLE.replace("\"provenance\": \"raw\"", "\"provenance\": \"guess\""), "videos[0].provenance");
        expect_path(&SAMPLE.replace("\"scene_cuts\": [9]", "\"scene_cuts\": [18]"), "videos[0].scene_cuts[0]");
        expect_path(&SAMPLE.replace("\"stride\": null,\n", ""), "videos[1].stride");
        expect_path(&SAMPLE.replace("\"r\": 0.500000}", "\"r\": 0.5, \"extra\": 1}"), "videos[0].annotations[2].extra");
        expect_path(&SAMPLE.replace("clip-b", "clip-a"), "videos[1].video_id");
        expect_path(&SAMPLE.replace("\"version\": 1", "\"version\": 2"), "version");
    }

    #[test]
    fn malformed_json_reports_offset() {
        let bad = &SAMPLE[..40];
        assert!(matches!(parse_annotations(bad), Err(Error::Parse { .. })));
    }

    #[test]
    fn smoothed_values_are_written_with_six_decimals() {
        let mut tracks = parse_annotations(SAMPLE).unwrap();
        tracks[0].annotations[1].crop.cx = 800.1234567891;
        tracks[0].annotations[1].crop.cy = -0.0000001 + 1.0;
        let text = format_annotations(&tracks);
        assert!(text.contains("\"cx\": 800.123457"));
        let again = parse_annotations(&text).unwrap();
        assert_eq!(format_annotations(&again), text);
        assert_eq!(coord(-1e-9), "0.000000");
    }

    #[test]
    fn scene_list_round_trip() {
        let mut m = BTreeMap::new();
        m.insert("b".to_string(), SceneBoundaryList::new(vec![3, 40], 90).unwrap());
        m.insert("a".to_string(), SceneBoundaryList::single_scene(12));
        let text = format_scene_lists(&m);
        let back = parse_scene_lists(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(format_scene_lists(&back), text);
        let bad = text.replace("[3, 40]", "[40, 3]");
        assert!(matches!(parse_scene_lists(&bad), Err(Error::Validation { path, .. }) if path == "videos[1].cuts[1]"));
    }

    fn solid_seq(colors: &[[u8; 3]], w: u32, h: u32) -> FrameSequence {
        FrameSequence::new(colors.iter().map(|&c| RgbFrame::filled(w, h, c)).collect(), (25, 1)).unwrap()
    }

    #[test]
    fn y4m_round_trip_of_solid_colors() {
        let colors = [[200, 30, 40], [10, 220, 90], [128, 128, 128]];
        let seq = solid_seq(&colors, 20, 16);
        let bytes = encode_y4m(&seq).unwrap();
        let back = parse_y4m(&bytes).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back.fps, (25, 1));
        for (f, c) in back.iter().zip(colors) {
            for p in f.data.chunks_exact(3) {
                for ch in 0..3 {
                    assert!((p[ch] as i32 - c[ch] as i32).abs() <= 2, "{p:?} vs {c:?}");
                }
            }
        }
    }

    #[test]
    fn y4m_header_errors_carry_offsets() {
        assert!(matches!(parse_y4m(b""), Err(Error::Parse { offset: 0, .. })));
        assert!(matches!(parse_y4m(b"YUV4MPEG2 W16 H16 C420p10\n"), Err(Error::Parse { offset: 18, .. })));
        let mut s = b"YUV4MPEG2 W16 H16\nFRAME\n".to_vec();
        s.extend(vec![0u8; 10]);
        assert!(matches!(parse_y4m(&s), Err(Error::Parse { offset: 24, .. })));
        let s = b"YUV4MPEG2 W16 H16\nFRAMX\n".to_vec();
        assert!(matches!(parse_y4m(&s), Err(Error::Parse { offset: 18, .. })));
    }

    #[test]
    fn y4m_full_range_and_mono() {
        let mut s = b"YUV4MPEG2 W2 H2 Cmono XCOLORRANGE=FULL\nFRAME\n".to_vec();
        s.extend([0u8, 255, 100, 7]);
        let f = parse_y4m(&s).unwrap();
        assert_eq!(f.frame(0).unwrap().pixel(1, 0), [255, 255, 255]);
        assert_eq!(f.frame(0).unwrap().pixel(1, 1), [7, 7, 7]);
        let mut s = b"YUV4MPEG2 W2 H2 Cmono\nFRAME\n".to_vec();
        s.extend([16u8, 235, 16, 16]);
        let f = parse_y4m(&s).unwrap();
        assert_eq!(f.frame(0).unwrap().pixel(0, 0), [0, 0, 0]);
        assert_eq!(f.frame(0).unwrap().pixel(1, 0), [255, 255, 255]);
    }

    #[test]
    fn y4m_index_matches_full_decode() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.y4m");
        let seq = solid_seq(&[[1, 2, 3], [250, 100, 0], [30, 60, 90], [5, 5, 5]], 18, 16);
        write_y4m(&p, &seq).unwrap();
        let ix = Y4mIndex::open(&p).unwrap();
        let full = read_y4m(&p).unwrap();
        assert_eq!(ix.len(), 4);
        for i in 0..4 {
            assert_eq!(&ix.read_frame(i).unwrap(), full.frame(i).unwrap());
        }
        assert!(ix.read_frame(4).is_err());
    }

    #[test]
    fn image_dir_contiguity() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_image_dir(dir.path(), DEFAULT_FPS), Err(Error::Parse { .. })));
        let f = RgbFrame::from_fn(16, 16, |x, y| [x as u8 * 10, y as u8 * 10, 3]);
        for i in [0, 1, 3] {
            std::fs::write(dir.path().join(format!("frame_{i:04}.png")), encode_png(&f).unwrap()).unwrap();
        }
        assert!(matches!(read_image_dir(dir.path(), DEFAULT_FPS), Err(Error::MissingFrame { index: 2 })));
        std::fs::write(dir.path().join("frame_0002.png"), encode_png(&f).unwrap()).unwrap();
        let seq = read_image_dir(dir.path(), DEFAULT_FPS).unwrap();
        assert_eq!(seq.len(), 4);
        assert_eq!(seq.frame(3).unwrap(), &f);
    }

    #[test]
    fn image_dir_rejects_mixed_sizes() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("0.png"), encode_png(&RgbFrame::filled(16, 16, [0; 3])).unwrap()).unwrap();
        std::fs::write(dir.path().join("1.png"), encode_png(&RgbFrame::filled(17, 16, [0; 3])).unwrap()).unwrap();
        assert!(matches!(read_image_dir(dir.path(), DEFAULT_FPS), Err(Error::DimsMismatch(_))));
    }

    #[test]
    fn scan_finds_both_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let f = RgbFrame::filled(16, 16, [9; 3]);
        let seq = FrameSequence::still(f.clone(), 2, DEFAULT_FPS);
        write_y4m(dir.path().join("b.y4m"), &seq).unwrap();
        write_image_dir(dir.path().join("a"), &seq).unwrap();
        std::fs::create_dir(dir.path().join("notes")).unwrap();
        std::fs::write(dir.path().join("readme.txt"), "x").unwrap();
        let found = scan_videos(dir.path(), DEFAULT_FPS).unwrap();
        let ids: Vec<&str> = found.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        assert!(matches!(found[0].1, VideoSource::ImageDir { .. }));
        write_image_dir(dir.path().join("b"), &seq).unwrap();
        assert!(matches!(scan_videos(dir.path(), DEFAULT_FPS), Err(Error::Validation { .. })));
    }

    #[test]
    fn report_round_trip() {
        let mut m: BTreeMap<String, f64> = BTreeMap::new();
        m.insert("0.30".into(), 12.5);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        write_report(&p, &m).unwrap();
        let back: BTreeMap<String, f64> = read_report(&p).unwrap();
        assert_eq!(back, m);
        assert_eq!(format_report(&back).unwrap(), std::fs::read_to_string(&p).unwrap());
    }
}
