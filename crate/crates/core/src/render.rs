//! Portrait rendering: crop extraction and Lanczos-3 resampling.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::frame::{FrameSequence, RgbFrame};
use crate::geometry::{to_rect, FrameDims, RectBox, PORTRAIT_ASPECT};
use crate::metrics::DenseTrack;

/// Lobes of the Lanczos kernel.
pub const LANCZOS_A: f64 = 3.0;

fn sinc(x: f64) -> f64 {
    let px = PI * x;
    px.sin() / px
}

/// `sinc(x)·sinc(x/a)` on `|x| < a`. Exact at integers so that aligned
/// resampling reproduces its input.
pub fn lanczos_kernel(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.abs() >= LANCZOS_A || x.fract() == 0.0 {
        0.0
    } else {
        sinc(x) * sinc(x / LANCZOS_A)
    }
}

/// Taps of one output coordinate: first source index (before clamping) and
/// normalized weights.
struct Taps {
    start: i64,
    weights: Vec<f32>,
}

fn axis_taps(src: u32, dst: u32) -> Vec<Taps> {
    let scale = src as f64 / dst as f64;
    // widen the kernel when shrinking so it acts as a low-pass filter
    let stretch = scale.max(1.0);
    let support = LANCZOS_A * stretch;
    (0..dst)
        .map(|o| {
            let center = (o as f64 + 0.5) * scale - 0.5;
            let start = (center - support).floor() as i64 + 1;
            let end = (center + support).ceil() as i64 - 1;
            let mut w: Vec<f64> = (start..=end)
                .map(|j| lanczos_kernel((j as f64 - center) / stretch))
                .collect();
            let sum: f64 = w.iter().sum();
            for v in &mut w {
                *v /= sum;
            }
            Taps {
                start,
                weights: w.into_iter().map(|v| v as f32).collect(),
            }
        })
        .collect()
}

#[inline]
fn clamp_index(j: i64, len: u32) -> usize {
    j.clamp(0, len as i64 - 1) as usize
}

/// Separable Lanczos-3 resize with clamp-to-edge borders.
pub fn lanczos_resize(frame: &RgbFrame, out_w: u32, out_h: u32) -> Result<RgbFrame> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidDims {
            width: out_w,
            height: out_h,
        });
    }
    if frame.width == 0 || frame.height == 0 {
        return Err(Error::InvalidDims {
            width: frame.width,
            height: frame.height,
        });
    }
    let (sw, sh) = (frame.width, frame.height);
    let xt = axis_taps(sw, out_w);
    let yt = axis_taps(sh, out_h);

    // horizontal pass over every source row
    let mut tmp = vec![0f32; 3 * out_w as usize * sh as usize];
    for y in 0..sh as usize {
        let row = &frame.data[3 * y * sw as usize..3 * (y + 1) * sw as usize];
        let out = &mut tmp[3 * y * out_w as usize..3 * (y + 1) * out_w as usize];
        for (o, t) in xt.iter().enumerate() {
            let mut acc = [0f32; 3];
            for (n, &w) in t.weights.iter().enumerate() {
                let s = 3 * clamp_index(t.start + n as i64, sw);
                acc[0] += w * row[s] as f32;
                acc[1] += w * row[s + 1] as f32;
                acc[2] += w * row[s + 2] as f32;
            }
            out[3 * o..3 * o + 3].copy_from_slice(&acc);
        }
    }

    let stride = 3 * out_w as usize;
    let mut data = vec![0u8; stride * out_h as usize];
    for (o, t) in yt.iter().enumerate() {
        let out = &mut data[o * stride..(o + 1) * stride];
        let mut acc = vec![0f32; stride];
        for (n, &w) in t.weights.iter().enumerate() {
            let y = clamp_index(t.start + n as i64, sh);
            let src = &tmp[y * stride..(y + 1) * stride];
            for (a, &s) in acc.iter_mut().zip(src) {
                *a += w * s;
            }
        }
        for (d, a) in out.iter_mut().zip(acc) {
            *d = a.round().clamp(0.0, 255.0) as u8;
        }
    }
    RgbFrame::new(out_w, out_h, data)
}

/// Integer pixel bounds of a crop: each edge rounded to the nearest pixel,
/// then the far edge pulled in by one pixel on any axis of odd length.
pub fn crop_bounds(rect: &RectBox, width: u32, height: u32) -> Result<(u32, u32, u32, u32)> {
    let edge = |v: f64, max: u32| v.round().clamp(0.0, max as f64) as u32;
    let (x0, y0) = (edge(rect.x0, width), edge(rect.y0, height));
    let (mut x1, mut y1) = (edge(rect.x1, width), edge(rect.y1, height));
    if x1 > x0 && (x1 - x0) % 2 == 1 {
        x1 -= 1;
    }
    if y1 > y0 && (y1 - y0) % 2 == 1 {
        y1 -= 1;
    }
    if x1 <= x0 || y1 <= y0 {
        return Err(Error::InvalidBox(format!(
            "rectangle ({}, {}, {}, {}) rounds to an empty crop",
            rect.x0, rect.y0, rect.x1, rect.y1
        )));
    }
    Ok((x0, y0, x1, y1))
}

pub fn extract_crop(frame: &RgbFrame, rect: &RectBox) -> Result<RgbFrame> {
    let (x0, y0, x1, y1) = crop_bounds(rect, frame.width, frame.height)?;
    let (w, h) = (x1 - x0, y1 - y0);
    let mut data = Vec::with_capacity(3 * w as usize * h as usize);
    let stride = 3 * frame.width as usize;
    for y in y0..y1 {
        let base = y as usize * stride;
        data.extend_from_slice(&frame.data[base + 3 * x0 as usize..base + 3 * x1 as usize]);
    }
    RgbFrame::new(w, h, data)
}

/// `v` rounded to the nearest even integer.
pub fn round_even(v: f64) -> u32 {
    (2.0 * (v / 2.0).round()) as u32
}

/// Output dimensions of a portrait render of the given height.
pub fn portrait_dims(out_height: u32) -> (u32, u32) {
    (round_even(out_height as f64 * PORTRAIT_ASPECT).max(2), out_height)
}

/// Crop of one frame resized to a fixed output size.
pub fn render_frame(frame: &RgbFrame, b: &crate::geometry::CropBox, dims: FrameDims, out_w: u32, out_h: u32) -> Result<RgbFrame> {
    let rect = to_rect(b, dims)?;
    let crop = extract_crop(frame, &rect)?;
    if crop.width == out_w && crop.height == out_h {
        return Ok(crop);
    }
    lanczos_resize(&crop, out_w, out_h)
}

/// Renders every frame of `frames` through the matching box of `track` into
/// a portrait sequence of height `out_height`.
pub fn render_portrait(frames: &FrameSequence, track: &DenseTrack, out_height: u32, exec: Execution) -> Result<FrameSequence> {
    if frames.len() != track.len() {
        return Err(Error::DimsMismatch(format!(
            "video has {} frames but the track has {} boxes",
            frames.len(),
            track.len()
        )));
    }
    if let Some(d) = frames.dims() {
        if d != track.dims {
            return Err(Error::DimsMismatch(format!("video is {d} but the track was annotated at {}", track.dims)));
        }
    }
    if out_height == 0 {
        return Err(Error::InvalidDims {
            width: 0,
            height: out_height,
        });
    }
    let (w, h) = portrait_dims(out_height);
    let out = exec.try_map_range(0..frames.len(), |i| {
        let f = &frames.shared()[i];
        render_frame(f, &track.boxes[i], track.dims, w, h)
            .map(Arc::new)
            .map_err(Error::at_frame(i))
    })?;
    FrameSequence::from_shared(out, frames.fps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CropBox;
    use crate::metrics::center_crop;

    #[test]
    fn kernel_values() {
        assert_eq!(lanczos_kernel(0.0), 1.0);
        assert_eq!(lanczos_kernel(1.0), 0.0);
        assert_eq!(lanczos_kernel(3.5), 0.0);
        let x: f64 = 0.5;
        let expect = (PI * x).sin() / (PI * x) * (PI * x / 3.0).sin() / (PI * x / 3.0);
        assert!((lanczos_kernel(x) - expect).abs() < 1e-15);
        assert_eq!(lanczos_kernel(-1.3), lanczos_kernel(1.3));
    }

    #[test]
    fn identity_resize_is_exact() {
        let f = RgbFrame::from_fn(23, 17, |x, y| [(x * 11) as u8, (y * 13) as u8, ((x * y) % 256) as u8]);
        assert_eq!(lanczos_resize(&f, 23, 17).unwrap(), f);
    }

    #[test]
    fn constant_stays_constant() {
        let f = RgbFrame::filled(40, 30, [17, 200, 93]);
        for (w, h) in [(13, 7), (80, 61), (40, 5), (1, 1)] {
            let r = lanczos_resize(&f, w, h).unwrap();
            assert!(r.data.chunks_exact(3).all(|p| p == [17, 200, 93]), "{w}x{h}");
        }
    }

    #[test]
    fn zero_output_rejected() {
        let f = RgbFrame::filled(4, 4, [0; 3]);
        assert!(lanczos_resize(&f, 0, 4).is_err());
    }

    #[test]
    fn crop_rounding() {
        let r = RectBox::new(656.25, 0.0, 1263.75, 1080.0).unwrap();
        assert_eq!(crop_bounds(&r, 1920, 1080).unwrap(), (656, 0, 1264, 1080));
        let odd = RectBox::new(10.2, 0.0, 17.4, 9.0).unwrap();
        let (x0, _, x1, y1) = crop_bounds(&odd, 100, 100).unwrap();
        assert_eq!((x1 - x0, y1), (6, 8));
        let tiny = RectBox::new(5.0, 5.0, 6.0, 6.0).unwrap();
        assert!(matches!(crop_bounds(&tiny, 100, 100), Err(Error::InvalidBox(_))));
    }

    #[test]
    fn full_frame_crop_is_identity() {
        let f = RgbFrame::from_fn(32, 18, |x, y| [x as u8, y as u8, 7]);
        let r = RectBox::new(0.0, 0.0, 32.0, 18.0).unwrap();
        assert_eq!(extract_crop(&f, &r).unwrap(), f);
    }

    #[test]
    fn portrait_output_dims() {
        assert_eq!(portrait_dims(1080), (608, 1080));
        assert_eq!(portrait_dims(720), (406, 720));
        assert_eq!(round_even(607.5), 608);
    }

    #[test]
    fn render_keeps_dims_and_reports_length_mismatch() {
        let dims = FrameDims::new(320, 180).unwrap();
        let base = RgbFrame::from_fn(320, 180, |x, y| [(x % 256) as u8, y as u8, 0]);
        let seq = FrameSequence::still(base.clone(), 4, (30, 1));
        let boxes = vec![
            CropBox::new(160.0, 90.0, 1.0),
            CropBox::new(100.0, 60.0, 0.5),
            CropBox::new(250.0, 120.0, 0.3),
            CropBox::new(10.0, 10.0, 0.8),
        ];
        let out = render_portrait(&seq, &DenseTrack::new(dims, boxes), 180, Execution::Sequential).unwrap();
        assert!(out.iter().all(|f| (f.width, f.height) == (102, 180)));
        // full-height center box at native height is a plain crop
        let c = center_crop(dims);
        let rect = to_rect(&c, dims).unwrap();
        assert_eq!(out.frame(0).unwrap(), &extract_crop(&base, &rect).unwrap());

        let short = DenseTrack::constant(dims, c, 3);
        let err = render_portrait(&seq, &short, 180, Execution::Sequential).unwrap_err();
        assert!(err.to_string().contains("4 frames"));
    }
}
