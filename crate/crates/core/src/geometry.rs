//! Crop-box representation and box-level measures.
//!
//! A [`CropBox`] is stored as `(cx, cy, r)`: the pixel center and the size
//! ratio `r = box height / frame height`. The box width is implied by the
//! fixed 9:16 portrait aspect, so the realized rectangle is always exactly
//! `r·H·9/16` by `r·H` pixels. Out-of-frame boxes are translated (never
//! scaled) back inside when realized.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width over height of every crop.
pub const PORTRAIT_ASPECT: f64 = 9.0 / 16.0;

/// Smallest accepted frame side.
pub const MIN_FRAME_SIDE: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameDims {
    pub width: u32,
    pub height: u32,
}

impl FrameDims {
    pub const FULL_HD: FrameDims = FrameDims {
        width: 1920,
        height: 1080,
    };

    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width < MIN_FRAME_SIDE || height < MIN_FRAME_SIDE {
            return Err(Error::InvalidDims { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn area(&self) -> f64 {
        self.width as f64 * self.height as f64
    }

    pub fn center(&self) -> Point {
        Point::new(self.width as f64 / 2.0, self.height as f64 / 2.0)
    }
}

impl std::fmt::Display for FrameDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropBox {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl CropBox {
    pub const fn new(cx: f64, cy: f64, r: f64) -> Self {
        Self { cx, cy, r }
    }

    pub fn center(&self) -> Point {
        Point::new(self.cx, self.cy)
    }

    pub fn with_center(self, p: Point) -> Self {
        Self {
            cx: p.x,
            cy: p.y,
            ..self
        }
    }

    /// Realized height in pixels.
    pub fn height_px(&self, dims: FrameDims) -> f64 {
        self.r * dims.height as f64
    }

    /// Realized width in pixels, before any clamping.
    pub fn width_px(&self, dims: FrameDims) -> f64 {
        self.height_px(dims) * PORTRAIT_ASPECT
    }

    /// Checks the value-level invariants: finite center and `0 < r <= 1`.
    pub fn validate(&self) -> Result<()> {
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::InvalidBox(format!(
                "non-finite center ({}, {})",
                self.cx, self.cy
            )));
        }
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::InvalidBox(format!(
                "size ratio r={} outside (0, 1]",
                self.r
            )));
        }
        Ok(())
    }

    /// Checks [`CropBox::validate`] plus fit against `dims`.
    pub fn validate_for(&self, dims: FrameDims) -> Result<()> {
        self.validate()?;
        let w = self.width_px(dims);
        if w > dims.width as f64 {
            return Err(Error::InvalidBox(format!(
                "realized width {w} exceeds frame width {}",
                dims.width
            )));
        }
        Ok(())
    }

    /// The same box with its center moved so that the realized rectangle lies
    /// inside the frame.
    pub fn clamped(&self, dims: FrameDims) -> Result<CropBox> {
        let rect = to_rect(self, dims)?;
        Ok(self.with_center(rect.center()))
    }
}

/// Axis-aligned rectangle in continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl RectBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) {
            return Err(Error::InvalidBox(format!(
                "degenerate rectangle ({x0}, {y0}, {x1}, {y1})"
            )));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    pub fn intersection_area(&self, other: &RectBox) -> f64 {
        let w = self.x1.min(other.x1) - self.x0.max(other.x0);
        let h = self.y1.min(other.y1) - self.y0.max(other.y0);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Scales both axes, e.g. to map a frame-space box onto a smaller map.
    pub fn scaled(&self, sx: f64, sy: f64) -> RectBox {
        RectBox {
            x0: self.x0 * sx,
            y0: self.y0 * sy,
            x1: self.x1 * sx,
            y1: self.y1 * sy,
        }
    }
}

/// Realizes a crop box as a pixel rectangle inside the frame.
///
/// The rectangle is `r·H` tall and `r·H·9/16` wide, centered on `(cx, cy)`,
/// then shifted the minimal amount needed to lie within `[0, W] x [0, H]`.
pub fn to_rect(b: &CropBox, dims: FrameDims) -> Result<RectBox> {
    b.validate()?;
    let h = b.height_px(dims);
    let w = h * PORTRAIT_ASPECT;
    let fw = dims.width as f64;
    let fh = dims.height as f64;
    if w > fw {
        return Err(Error::InvalidBox(format!(
            "realized width {w} exceeds frame width {fw} (r={} too large for this aspect)",
            b.r
        )));
    }
    let x0 = (b.cx - w / 2.0).clamp(0.0, fw - w);
    let y0 = (b.cy - h / 2.0).clamp(0.0, fh - h);
    Ok(RectBox {
        x0,
        y0,
        x1: x0 + w,
        y1: y0 + h,
    })
}

/// Intersection over union; 0 for disjoint rectangles.
pub fn iou(a: &RectBox, b: &RectBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

pub fn center_distance(a: &CropBox, b: &CropBox) -> f64 {
    a.center().distance(&b.center())
}

/// Realized box area over frame area. Clamping never changes the area, so
/// this depends on `r` only.
pub fn normalized_area(b: &CropBox, dims: FrameDims) -> f64 {
    let h = b.height_px(dims);
    h * h * PORTRAIT_ASPECT / dims.area()
}
