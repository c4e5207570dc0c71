//! Cell-grid feature extraction: gray, HOG, and color-name channels
//! stacked into one windowed map, plus projection of the pixel-domain
//! target mask onto the cell grid.

mod cn;
mod fhog;

use std::sync::Arc;

pub use cn::{extract_cn, CnTable, CN_CHANNELS, CN_ROWS};
pub use fhog::{extract_fhog, hog_channels};

use crate::imgproc::{to_gray, ImagePatch, Plane, LUMA_WEIGHTS};
use crate::spectral::{Complex64, Fft2, SpectralMap};
use crate::{Error, Result};

/// Real feature tensor over the cell grid, channel-major planes.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        FeatureMap {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
        }
    }

    /// Number of cells per channel plane.
    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[c * self.cells() + y * self.width + x]
    }

    #[inline]
    pub fn at_mut(&mut self, x: usize, y: usize, c: usize) -> &mut f64 {
        let t = self.cells();
        &mut self.data[c * t + y * self.width + x]
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let t = self.cells();
        &self.data[c * t..(c + 1) * t]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let t = self.cells();
        &mut self.data[c * t..(c + 1) * t]
    }

    pub fn same_shape(&self, other: &FeatureMap) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Per-channel forward DFT.
    pub fn to_spectrum(&self, fft: &Fft2) -> SpectralMap {
        use rayon::prelude::*;
        debug_assert_eq!((fft.width, fft.height), (self.width, self.height));
        let t = self.cells();
        let mut out = SpectralMap::zeros(self.width, self.height, self.channels);
        out.data
            .par_chunks_exact_mut(t)
            .zip(self.data.par_chunks_exact(t))
            .for_each(|(spec, plane)| {
                for (s, v) in spec.iter_mut().zip(plane) {
                    *s = Complex64::new(*v, 0.0);
                }
                fft.forward_in_place(spec);
            });
        out
    }
}

/// Cell-domain mask weights in `[0, 1]` (fractional pixel coverage).
pub type CellMask = Plane;

/// Feature extraction settings.
#[derive(Debug, Clone)]
pub struct FeatureConfig {
    /// Cell edge length in pixels.
    pub cell_size: usize,
    /// Unsigned HOG orientation count (31 channels at 9).
    pub hog_orientations: usize,
    pub use_gray: bool,
    pub use_hog: bool,
    pub use_cn: bool,
    /// Channel weights for the gray conversion; kept identical to the
    /// enhancer's illumination weights.
    pub gray_alpha: [f64; 3],
    pub cn_table: Arc<CnTable>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            cell_size: 4,
            hog_orientations: 9,
            use_gray: true,
            use_hog: true,
            use_cn: true,
            gray_alpha: LUMA_WEIGHTS,
            cn_table: CnTable::builtin(),
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cell_size == 0 || self.hog_orientations == 0 {
            return Err(Error::InvalidConfig(
                "cell_size and hog_orientations must be positive".into(),
            ));
        }
        if !(self.use_gray || self.use_hog || self.use_cn) {
            return Err(Error::InvalidConfig("no feature channels enabled".into()));
        }
        Ok(())
    }

    /// Total stacked channel count.
    pub fn channels(&self) -> usize {
        let mut d = 0;
        if self.use_gray {
            d += 1;
        }
        if self.use_hog {
            d += hog_channels(self.hog_orientations);
        }
        if self.use_cn {
            d += CN_CHANNELS;
        }
        d
    }
}

/// Per-cell mean gray value recentred around zero.
pub fn extract_gray(patch: &ImagePatch, cfg: &FeatureConfig) -> Result<FeatureMap> {
    check_dims(patch.width, patch.height, cfg.cell_size, "extract_gray")?;
    let gray = to_gray(patch, cfg.gray_alpha);
    let grid_w = patch.width / cfg.cell_size;
    let grid_h = patch.height / cfg.cell_size;
    let mut out = FeatureMap::zeros(grid_w, grid_h, 1);
    let inv_area = 1.0 / (cfg.cell_size * cfg.cell_size) as f64;
    for y in 0..patch.height {
        for x in 0..patch.width {
            *out.at_mut(x / cfg.cell_size, y / cfg.cell_size, 0) += gray.at(x, y) * inv_area;
        }
    }
    for v in out.data.iter_mut() {
        *v -= 0.5;
    }
    Ok(out)
}

/// Stack the enabled feature channels and taper every channel with a 2-D
/// Hann window over the grid.
pub fn compose_features(patch: &ImagePatch, cfg: &FeatureConfig) -> Result<FeatureMap> {
    check_dims(patch.width, patch.height, cfg.cell_size, "compose_features")?;
    let grid_w = patch.width / cfg.cell_size;
    let grid_h = patch.height / cfg.cell_size;

    let mut out = FeatureMap::zeros(grid_w, grid_h, cfg.channels());
    let mut next = 0usize;
    let push = |map: FeatureMap, out: &mut FeatureMap, next: &mut usize| -> Result<()> {
        if (map.width, map.height) != (grid_w, grid_h) {
            return Err(Error::DimensionMismatch {
                context: "compose_features",
                expected: format!("{grid_w}x{grid_h}"),
                got: format!("{}x{}", map.width, map.height),
            });
        }
        let t = map.cells();
        out.data[*next * t..(*next + map.channels) * t].copy_from_slice(&map.data);
        *next += map.channels;
        Ok(())
    };

    // HOG is the heavy extractor; run it alongside the others.
    let (hog, rest) = rayon::join(
        || -> Result<Option<FeatureMap>> {
            if cfg.use_hog {
                let gray = to_gray(patch, cfg.gray_alpha);
                Ok(Some(extract_fhog(&gray, cfg.cell_size, cfg.hog_orientations)?))
            } else {
                Ok(None)
            }
        },
        || -> Result<(Option<FeatureMap>, Option<FeatureMap>)> {
            let gray = if cfg.use_gray {
                Some(extract_gray(patch, cfg)?)
            } else {
                None
            };
            let cn = if cfg.use_cn {
                Some(extract_cn(patch, &cfg.cn_table, cfg.cell_size)?)
            } else {
                None
            };
            Ok((gray, cn))
        },
    );
    let hog = hog?;
    let (gray, cn) = rest?;

    if let Some(map) = gray {
        push(map, &mut out, &mut next)?;
    }
    if let Some(map) = hog {
        push(map, &mut out, &mut next)?;
    }
    if let Some(map) = cn {
        push(map, &mut out, &mut next)?;
    }

    let win = hann_window(grid_w, grid_h);
    for c in 0..out.channels {
        for (v, w) in out.plane_mut(c).iter_mut().zip(&win.data) {
            *v *= w;
        }
    }
    Ok(out)
}

/// Separable 2-D Hann taper; endpoints are zero for grids larger than 1.
pub fn hann_window(width: usize, height: usize) -> Plane {
    let axis = |n: usize| -> Vec<f64> {
        if n == 1 {
            return vec![1.0];
        }
        (0..n)
            .map(|i| 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / (n - 1) as f64).cos()))
            .collect()
    };
    let hx = axis(width);
    let hy = axis(height);
    let mut out = Plane::new(width, height);
    for y in 0..height {
        for x in 0..width {
            *out.at_mut(x, y) = hx[x] * hy[y];
        }
    }
    out
}

/// Project a pixel-domain mask to the cell grid: each cell weight is the
/// mean of the mask pixels it covers.
pub fn mask_to_cells(mask: &Plane, cell_size: usize) -> Result<CellMask> {
    check_dims(mask.width, mask.height, cell_size, "mask_to_cells")?;
    let grid_w = mask.width / cell_size;
    let grid_h = mask.height / cell_size;
    let mut out = Plane::new(grid_w, grid_h);
    let inv_area = 1.0 / (cell_size * cell_size) as f64;
    for y in 0..mask.height {
        for x in 0..mask.width {
            *out.at_mut(x / cell_size, y / cell_size) += mask.at(x, y) * inv_area;
        }
    }
    Ok(out)
}

/// Element-wise product of every feature channel with the cell mask.
pub fn apply_mask(features: &FeatureMap, mask: &CellMask) -> Result<FeatureMap> {
    if (features.width, features.height) != (mask.width, mask.height) {
        return Err(Error::DimensionMismatch {
            context: "apply_mask",
            expected: format!("{}x{}", features.width, features.height),
            got: format!("{}x{}", mask.width, mask.height),
        });
    }
    let mut out = features.clone();
    for c in 0..out.channels {
        for (v, m) in out.plane_mut(c).iter_mut().zip(&mask.data) {
            *v *= m;
        }
    }
    Ok(out)
}

fn check_dims(w: usize, h: usize, cell: usize, context: &'static str) -> Result<()> {
    if w < cell || h < cell {
        return Err(Error::PatchTooSmall {
            width: w,
            height: h,
            cell_size: cell,
        });
    }
    if w % cell != 0 || h % cell != 0 {
        return Err(Error::DimensionMismatch {
            context,
            expected: format!("dims divisible by {cell}"),
            got: format!("{w}x{h}"),
        });
    }
    Ok(())
}
