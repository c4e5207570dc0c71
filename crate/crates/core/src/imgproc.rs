//! Image containers, patch cropping with edge replication, and gray
//! conversion shared by the rest of the pipeline.
//!
//! All pixel math happens on `f64` values in `[0, 1]`; 8-bit files are
//! normalized at decode time.

use std::path::Path;

use crate::{Error, Result};

/// Default luma channel weights, shared with the enhancer configuration.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Single-channel 2-D map (gray patch, illumination map, cell grid, ...).
/// Row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize) -> Self {
        Plane {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height, "plane data length");
        Plane {
            width,
            height,
            data,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn at_mut(&mut self, x: usize, y: usize) -> &mut f64 {
        &mut self.data[y * self.width + x]
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Interleaved RGB raster with values in `[0, 1]`.
///
/// Used both for full frames and for cropped patches.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// Row-major `[r, g, b, r, g, b, ...]`, length `width * height * 3`.
    pub data: Vec<f64>,
}

/// A cropped search/training patch. Same representation as [`Image`].
pub type ImagePatch = Image;

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Image {
            width,
            height,
            data: vec![0.0; width * height * 3],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height * 3, "image data length");
        Image {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i] = rgb[0];
        self.data[i + 1] = rgb[1];
        self.data[i + 2] = rgb[2];
    }

    /// Decode a PNG/JPEG frame, normalizing 8-bit samples to `[0, 1]`.
    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path)
            .map_err(|e| Error::image(path, e))?
            .to_rgb8();
        let (w, h) = img.dimensions();
        let mut data = Vec::with_capacity((w * h * 3) as usize);
        for px in img.pixels() {
            data.push(px.0[0] as f64 / 255.0);
            data.push(px.0[1] as f64 / 255.0);
            data.push(px.0[2] as f64 / 255.0);
        }
        Ok(Image::from_vec(w as usize, h as usize, data))
    }

    /// Write as 8-bit PNG (values clamped and rounded).
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let mut buf = image::RgbImage::new(self.width as u32, self.height as u32);
        for y in 0..self.height {
            for x in 0..self.width {
                let p = self.pixel(x, y);
                let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
                buf.put_pixel(x as u32, y as u32, image::Rgb([q(p[0]), q(p[1]), q(p[2])]));
            }
        }
        buf.save(path).map_err(|e| Error::image(path, e))
    }
}

/// Save a single-channel map as 8-bit grayscale PNG (clamped to `[0, 1]`).
pub fn save_plane_png(plane: &Plane, path: &Path) -> Result<()> {
    let mut buf = image::GrayImage::new(plane.width as u32, plane.height as u32);
    for y in 0..plane.height {
        for x in 0..plane.width {
            let v = (plane.at(x, y).clamp(0.0, 1.0) * 255.0).round() as u8;
            buf.put_pixel(x as u32, y as u32, image::Luma([v]));
        }
    }
    buf.save(path).map_err(|e| Error::image(path, e))
}

/// Axis-aligned box in pixel coordinates, center convention.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        if !(w > 0.0 && h > 0.0 && cx.is_finite() && cy.is_finite()) {
            return Err(Error::InvalidBBox(format!(
                "center ({cx}, {cy}), size {w}x{h}"
            )));
        }
        Ok(BBox { cx, cy, w, h })
    }

    /// From top-left `(x, y, w, h)`, the ground-truth file convention.
    pub fn from_top_left(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        BBox::new(x + w / 2.0, y + h / 2.0, w, h)
    }

    /// Top-left corner `(x, y)`.
    pub fn top_left(&self) -> (f64, f64) {
        (self.cx - self.w / 2.0, self.cy - self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

/// Geometry of a patch crop: which source region to sample and at what
/// output resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchSpec {
    /// Source-space center of the region.
    pub center: (f64, f64),
    /// Source-space extent (width, height) in pixels.
    pub extent: (f64, f64),
    /// Output patch size in pixels.
    pub output: (usize, usize),
}

impl PatchSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.extent.0 > 0.0
            && self.extent.1 > 0.0
            && self.output.0 > 0
            && self.output.1 > 0
            && self.center.0.is_finite()
            && self.center.1.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::DegeneratePatch)
        }
    }
}

/// Crop a patch from `img`, replicating the nearest edge pixel outside
/// the image bounds and resampling bilinearly from the source extent to
/// the output size.
pub fn crop_patch(img: &Image, spec: &PatchSpec) -> Result<ImagePatch> {
    spec.validate()?;
    if img.width == 0 || img.height == 0 {
        return Err(Error::DegeneratePatch);
    }
    let (out_w, out_h) = spec.output;
    let sx = spec.extent.0 / out_w as f64;
    let sy = spec.extent.1 / out_h as f64;
    let x0 = spec.center.0 - spec.extent.0 / 2.0;
    let y0 = spec.center.1 - spec.extent.1 / 2.0;

    let mut out = Image::new(out_w, out_h);
    for oy in 0..out_h {
        // Source coordinate of the output pixel center.
        let fy = y0 + (oy as f64 + 0.5) * sy - 0.5;
        let (y_lo, y_hi, wy) = sample_axis(fy, img.height);
        for ox in 0..out_w {
            let fx = x0 + (ox as f64 + 0.5) * sx - 0.5;
            let (x_lo, x_hi, wx) = sample_axis(fx, img.width);

            let p00 = img.pixel(x_lo, y_lo);
            let p10 = img.pixel(x_hi, y_lo);
            let p01 = img.pixel(x_lo, y_hi);
            let p11 = img.pixel(x_hi, y_hi);
            let mut rgb = [0.0; 3];
            for c in 0..3 {
                let top = p00[c] * (1.0 - wx) + p10[c] * wx;
                let bot = p01[c] * (1.0 - wx) + p11[c] * wx;
                rgb[c] = top * (1.0 - wy) + bot * wy;
            }
            out.set_pixel(ox, oy, rgb);
        }
    }
    Ok(out)
}

/// Bilinear sample support along one axis with edge replication:
/// returns the two source indices and the weight of the upper one.
#[inline]
fn sample_axis(f: f64, size: usize) -> (usize, usize, f64) {
    let max = (size - 1) as f64;
    let f = f.clamp(0.0, max);
    let lo = f.floor();
    let w = f - lo;
    let lo_i = lo as usize;
    let hi_i = (lo_i + 1).min(size - 1);
    (lo_i, hi_i, w)
}

/// Weighted channel sum `sum_m alpha_m * channel_m`, the same weights the
/// enhancer uses for world illumination.
pub fn to_gray(patch: &ImagePatch, alpha: [f64; 3]) -> Plane {
    let mut out = Plane::new(patch.width, patch.height);
    for (i, v) in out.data.iter_mut().enumerate() {
        let px = &patch.data[i * 3..i * 3 + 3];
        *v = alpha[0] * px[0] + alpha[1] * px[1] + alpha[2] * px[2];
    }
    out
}
