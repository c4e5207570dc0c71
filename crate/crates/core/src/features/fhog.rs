//! 31-channel HOG cell descriptor: 2*O contrast-sensitive and O
//! contrast-insensitive orientation channels plus 4 normalization
//! (texture-energy) channels, with O = 9 orientations.
//!
//! Gradients use clamped central differences, votes are trilinearly
//! interpolated over (x, y, orientation), and each cell is normalized
//! against its four surrounding 2x2 energy blocks with 0.2 clipping.

use crate::features::FeatureMap;
use crate::imgproc::Plane;
use crate::{Error, Result};

/// Stabilizer added to the block energy before the square root.
const NORM_EPS: f64 = 1e-4;
/// Weight of the texture-energy channels.
const TEXTURE_WEIGHT: f64 = 0.2357;
/// Normalized votes are clipped here before aggregation.
const CLIP: f64 = 0.2;

/// Number of output channels for `orientations` unsigned bins.
pub fn hog_channels(orientations: usize) -> usize {
    3 * orientations + 4
}

/// Extract the HOG cell map of a single-channel patch.
///
/// Patch dimensions must be positive multiples of `cell_size`.
pub fn extract_fhog(patch: &Plane, cell_size: usize, orientations: usize) -> Result<FeatureMap> {
    if patch.width < cell_size || patch.height < cell_size {
        return Err(Error::PatchTooSmall {
            width: patch.width,
            height: patch.height,
            cell_size,
        });
    }
    if patch.width % cell_size != 0 || patch.height % cell_size != 0 {
        return Err(Error::DimensionMismatch {
            context: "extract_fhog",
            expected: format!("dims divisible by {cell_size}"),
            got: format!("{}x{}", patch.width, patch.height),
        });
    }
    let grid_w = patch.width / cell_size;
    let grid_h = patch.height / cell_size;
    let nb = 2 * orientations; // signed orientation bins
    let hist = orientation_histograms(patch, cell_size, grid_w, grid_h, nb);
    Ok(normalize_histograms(&hist, grid_w, grid_h, orientations))
}

/// Soft-binned per-cell orientation histograms (the trilinear vote pass).
fn orientation_histograms(
    patch: &Plane,
    cell_size: usize,
    grid_w: usize,
    grid_h: usize,
    nb: usize,
) -> Vec<f64> {
    let mut hist = vec![0.0; grid_w * grid_h * nb];
    let w = patch.width;
    let h = patch.height;
    let inv_cell = 1.0 / cell_size as f64;
    let bin_scale = nb as f64 / std::f64::consts::TAU;

    for y in 0..h {
        let y_lo = y.saturating_sub(1);
        let y_hi = (y + 1).min(h - 1);
        // Cell coordinate of this pixel row and its bilinear split.
        let cy = (y as f64 + 0.5) * inv_cell - 0.5;
        let cy0 = cy.floor();
        let wy1 = cy - cy0;
        let cy0 = cy0 as isize;

        for x in 0..w {
            let x_lo = x.saturating_sub(1);
            let x_hi = (x + 1).min(w - 1);
            let gx = patch.at(x_hi, y) - patch.at(x_lo, y);
            let gy = patch.at(x, y_hi) - patch.at(x, y_lo);
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let mut angle = gy.atan2(gx);
            if angle < 0.0 {
                angle += std::f64::consts::TAU;
            }
            let fb = angle * bin_scale;
            let b0 = fb.floor();
            let wb1 = fb - b0;
            let b0 = (b0 as usize) % nb;
            let b1 = (b0 + 1) % nb;

            let cx = (x as f64 + 0.5) * inv_cell - 0.5;
            let cx0f = cx.floor();
            let wx1 = cx - cx0f;
            let cx0 = cx0f as isize;

            for (cyi, wy) in [(cy0, 1.0 - wy1), (cy0 + 1, wy1)] {
                if cyi < 0 || cyi >= grid_h as isize || wy == 0.0 {
                    continue;
                }
                for (cxi, wx) in [(cx0, 1.0 - wx1), (cx0 + 1, wx1)] {
                    if cxi < 0 || cxi >= grid_w as isize || wx == 0.0 {
                        continue;
                    }
                    let base = (cyi as usize * grid_w + cxi as usize) * nb;
                    let vote = mag * wx * wy;
                    hist[base + b0] += vote * (1.0 - wb1);
                    hist[base + b1] += vote * wb1;
                }
            }
        }
    }
    hist
}

/// Block normalization with clipping; emits the final channel layout.
fn normalize_histograms(
    hist: &[f64],
    grid_w: usize,
    grid_h: usize,
    orientations: usize,
) -> FeatureMap {
    let nb = 2 * orientations;
    let channels = hog_channels(orientations);

    // Gradient energy per cell over unsigned orientations.
    let mut energy = vec![0.0; grid_w * grid_h];
    for (cell, e) in energy.iter_mut().enumerate() {
        let hs = &hist[cell * nb..(cell + 1) * nb];
        *e = (0..orientations).map(|o| (hs[o] + hs[o + orientations]).powi(2)).sum();
    }
    let e_at = |x: isize, y: isize| {
        let xc = x.clamp(0, grid_w as isize - 1) as usize;
        let yc = y.clamp(0, grid_h as isize - 1) as usize;
        energy[yc * grid_w + xc]
    };

    let mut out = FeatureMap::zeros(grid_w, grid_h, channels);
    for gy in 0..grid_h as isize {
        for gx in 0..grid_w as isize {
            let cell = gy as usize * grid_w + gx as usize;
            let hs = &hist[cell * nb..(cell + 1) * nb];
            let own = e_at(gx, gy);
            let mut inv_norm = [0.0; 4];
            for (k, (dx, dy)) in [(-1, -1), (1, -1), (-1, 1), (1, 1)].into_iter().enumerate() {
                let sum = own + e_at(gx + dx, gy) + e_at(gx, gy + dy) + e_at(gx + dx, gy + dy);
                inv_norm[k] = 1.0 / (sum + NORM_EPS).sqrt();
            }

            let mut texture = [0.0; 4];
            for o in 0..nb {
                let mut acc = 0.0;
                for k in 0..4 {
                    let v = (hs[o] * inv_norm[k]).min(CLIP);
                    acc += v;
                    texture[k] += v;
                }
                *out.at_mut(gx as usize, gy as usize, o) = 0.5 * acc;
            }
            for o in 0..orientations {
                let s = hs[o] + hs[o + orientations];
                let acc: f64 = inv_norm.iter().map(|n| (s * n).min(CLIP)).sum();
                *out.at_mut(gx as usize, gy as usize, nb + o) = 0.5 * acc;
            }
            for k in 0..4 {
                *out.at_mut(gx as usize, gy as usize, 3 * orientations + k) =
                    TEXTURE_WEIGHT * texture[k];
            }
        }
    }
    out
}
