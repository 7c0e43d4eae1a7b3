//! Axis-aligned box arithmetic and binary-mask processing.
//!
//! This is the stage that turns segmentation masks into detection boxes:
//! binarize a grayscale mask, extract connected components, and emit one
//! pixel-tight box per component. Box extents are half-open in pixel space,
//! so `x_max - x_min` equals the pixel count along the axis.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// Errors from box construction and mask processing.
#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid box ({x_min}, {y_min}, {x_max}, {y_max}): {reason}")]
    InvalidBox {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
        reason: &'static str,
    },
    #[error("invalid normalized box: {reason}")]
    InvalidNormBox { reason: String },
    #[error("empty image: width and height must be positive")]
    EmptyImage,
    #[error("pixel buffer holds {len} bytes, expected {width}x{height} = {expected}")]
    SizeMismatch {
        len: usize,
        width: usize,
        height: usize,
        expected: usize,
    },
    #[error("box ({x_min}, {y_min}, {x_max}, {y_max}) exceeds image bounds {img_w}x{img_h}")]
    OutOfBounds {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
        img_w: f64,
        img_h: f64,
    },
    #[error("image dimensions must be positive, got {img_w}x{img_h}")]
    BadImageDims { img_w: f64, img_h: f64 },
}

fn lossy(v: impl num_traits::ToPrimitive) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Axis-aligned box in continuous pixel coordinates, y down.
///
/// Invariants: `x_min < x_max`, `y_min < y_max`, all coordinates finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox<T> {
    x_min: T,
    y_min: T,
    x_max: T,
    y_max: T,
}

impl<T: Real> BBox<T> {
    pub fn new(x_min: T, y_min: T, x_max: T, y_max: T) -> Result<Self, GeometryError> {
        let invalid = |reason| GeometryError::InvalidBox {
            x_min: lossy(x_min),
            y_min: lossy(y_min),
            x_max: lossy(x_max),
            y_max: lossy(y_max),
            reason,
        };
        if !(x_min.is_finite() && y_min.is_finite() && x_max.is_finite() && y_max.is_finite()) {
            return Err(invalid("coordinates must be finite"));
        }
        if x_min >= x_max || y_min >= y_max {
            return Err(invalid("box must have strictly positive area"));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn x_min(&self) -> T {
        self.x_min
    }
    pub fn y_min(&self) -> T {
        self.y_min
    }
    pub fn x_max(&self) -> T {
        self.x_max
    }
    pub fn y_max(&self) -> T {
        self.y_max
    }

    pub fn width(&self) -> T {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> T {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn center(&self) -> (T, T) {
        let half = T::from_f64_lossy(0.5);
        (
            (self.x_min + self.x_max) * half,
            (self.y_min + self.y_max) * half,
        )
    }

    /// Intersection area of two boxes; zero when disjoint.
    pub fn intersection_area(&self, other: &Self) -> T {
        let ix = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min)).max(T::zero());
        let iy = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min)).max(T::zero());
        ix * iy
    }

    /// Intersection over union with continuous areas; zero when disjoint.
    pub fn iou(&self, other: &Self) -> T {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union > T::zero() {
            inter / union
        } else {
            T::zero()
        }
    }

    /// Convert to image-normalized center form. The box must lie inside
    /// `[0, img_w] x [0, img_h]`.
    pub fn to_norm(&self, class_id: u32, img_w: T, img_h: T) -> Result<NormBox<T>, GeometryError> {
        if !(img_w > T::zero() && img_h > T::zero() && img_w.is_finite() && img_h.is_finite()) {
            return Err(GeometryError::BadImageDims {
                img_w: lossy(img_w),
                img_h: lossy(img_h),
            });
        }
        if self.x_min < T::zero()
            || self.y_min < T::zero()
            || self.x_max > img_w
            || self.y_max > img_h
        {
            return Err(GeometryError::OutOfBounds {
                x_min: lossy(self.x_min),
                y_min: lossy(self.y_min),
                x_max: lossy(self.x_max),
                y_max: lossy(self.y_max),
                img_w: lossy(img_w),
                img_h: lossy(img_h),
            });
        }
        let (cx, cy) = self.center();
        NormBox::new(
            class_id,
            cx / img_w,
            cy / img_h,
            self.width() / img_w,
            self.height() / img_h,
        )
    }
}

/// Image-normalized box in YOLO center form: `cx cy w h` in `[0, 1]`.
///
/// A small slack (1e-6) on the box-inside-image invariant absorbs the
/// quantization of 6-decimal label files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBox<T> {
    class_id: u32,
    cx: T,
    cy: T,
    w: T,
    h: T,
}

impl<T: Real> NormBox<T> {
    pub fn new(class_id: u32, cx: T, cy: T, w: T, h: T) -> Result<Self, GeometryError> {
        let err = |reason: String| GeometryError::InvalidNormBox { reason };
        if !(cx.is_finite() && cy.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(err("values must be finite".into()));
        }
        let zero = T::zero();
        let one = T::one();
        if cx < zero || cx > one || cy < zero || cy > one {
            return Err(err(format!(
                "center ({}, {}) outside [0, 1]",
                lossy(cx),
                lossy(cy)
            )));
        }
        if w <= zero || w > one || h <= zero || h > one {
            return Err(err(format!(
                "size ({}, {}) outside (0, 1]",
                lossy(w),
                lossy(h)
            )));
        }
        let slack = T::from_f64_lossy(1e-6);
        let half = T::from_f64_lossy(0.5);
        if cx - w * half < -slack
            || cx + w * half > one + slack
            || cy - h * half < -slack
            || cy + h * half > one + slack
        {
            return Err(err(format!(
                "box (cx={}, cy={}, w={}, h={}) extends outside the image",
                lossy(cx),
                lossy(cy),
                lossy(w),
                lossy(h)
            )));
        }
        Ok(Self {
            class_id,
            cx,
            cy,
            w,
            h,
        })
    }

    pub fn class_id(&self) -> u32 {
        self.class_id
    }
    pub fn cx(&self) -> T {
        self.cx
    }
    pub fn cy(&self) -> T {
        self.cy
    }
    pub fn w(&self) -> T {
        self.w
    }
    pub fn h(&self) -> T {
        self.h
    }

    /// Back to pixel coordinates against the given image size.
    pub fn from_norm(&self, img_w: T, img_h: T) -> Result<BBox<T>, GeometryError> {
        if !(img_w > T::zero() && img_h > T::zero() && img_w.is_finite() && img_h.is_finite()) {
            return Err(GeometryError::BadImageDims {
                img_w: lossy(img_w),
                img_h: lossy(img_h),
            });
        }
        let half = T::from_f64_lossy(0.5);
        BBox::new(
            (self.cx - self.w * half) * img_w,
            (self.cy - self.h * half) * img_h,
            (self.cx + self.w * half) * img_w,
            (self.cy + self.h * half) * img_h,
        )
    }
}

/// Row-major boolean grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    /// Threshold a grayscale raster: a bit is set iff its intensity is
    /// `>= threshold`. `pixels` is row-major, `width * height` bytes.
    pub fn binarize(
        pixels: &[u8],
        width: usize,
        height: usize,
        threshold: u8,
    ) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::EmptyImage);
        }
        let expected = width * height;
        if pixels.len() != expected {
            return Err(GeometryError::SizeMismatch {
                len: pixels.len(),
                width,
                height,
                expected,
            });
        }
        Ok(Self {
            width,
            height,
            bits: pixels.iter().map(|&p| p >= threshold).collect(),
        })
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::EmptyImage);
        }
        if bits.len() != width * height {
            return Err(GeometryError::SizeMismatch {
                len: bits.len(),
                width,
                height,
                expected: width * height,
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count_set(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Pixel adjacency rule for component extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(&self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(0, -1), (-1, 0), (1, 0), (0, 1)],
            Connectivity::Eight => &[
                (-1, -1),
                (0, -1),
                (1, -1),
                (-1, 0),
                (1, 0),
                (-1, 1),
                (0, 1),
                (1, 1),
            ],
        }
    }
}

/// One maximal connected region of set bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// Member pixels as `(x, y)`, sorted row-major.
    pub pixels: Vec<(usize, usize)>,
    pub min_x: usize,
    pub min_y: usize,
    pub max_x: usize,
    pub max_y: usize,
}

impl Component {
    pub fn size(&self) -> usize {
        self.pixels.len()
    }
}

/// Extract maximal connected components of the set bits.
///
/// Components partition the set bits and are ordered by `(min_y, min_x)`
/// of their tight bounds, which makes the output deterministic.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> Vec<Component> {
    let (w, h) = (mask.width, mask.height);
    let mut visited = vec![false; w * h];
    let mut components = Vec::new();
    let mut stack = Vec::new();

    for start_y in 0..h {
        for start_x in 0..w {
            let idx = start_y * w + start_x;
            if !mask.bits[idx] || visited[idx] {
                continue;
            }
            visited[idx] = true;
            stack.push((start_x, start_y));
            let mut pixels = Vec::new();
            while let Some((x, y)) = stack.pop() {
                pixels.push((x, y));
                for &(dx, dy) in connectivity.offsets() {
                    let nx = x as isize + dx;
                    let ny = y as isize + dy;
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    let nidx = ny * w + nx;
                    if mask.bits[nidx] && !visited[nidx] {
                        visited[nidx] = true;
                        stack.push((nx, ny));
                    }
                }
            }
            pixels.sort_unstable_by_key(|&(x, y)| (y, x));
            let min_x = pixels.iter().map(|p| p.0).min().unwrap();
            let max_x = pixels.iter().map(|p| p.0).max().unwrap();
            let min_y = pixels.iter().map(|p| p.1).min().unwrap();
            let max_y = pixels.iter().map(|p| p.1).max().unwrap();
            components.push(Component {
                pixels,
                min_x,
                min_y,
                max_x,
                max_y,
            });
        }
    }

    components.sort_by_key(|c| (c.min_y, c.min_x, c.pixels[0]));
    components
}

/// One pixel-tight box per component, half-open extents
/// (`x_max` = rightmost pixel + 1). Components smaller than `min_area`
/// pixels are dropped.
pub fn components_to_boxes<T: Real>(components: &[Component], min_area: usize) -> Vec<BBox<T>> {
    components
        .iter()
        .filter(|c| c.size() >= min_area)
        .map(|c| {
            BBox::new(
                T::from_usize_lossy(c.min_x),
                T::from_usize_lossy(c.min_y),
                T::from_usize_lossy(c.max_x + 1),
                T::from_usize_lossy(c.max_y + 1),
            )
            .expect("pixel-tight bounds always form a valid box")
        })
        .collect()
}
