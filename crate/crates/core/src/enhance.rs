//! Pretreatment stage: global tone-mapping enhancement of a low-light
//! patch and the illumination-change mask derived from it.
//!
//! The chain is: per-pixel world illumination (weighted channel sum) →
//! log-average luminance → global adaptation factor → enhanced patch.
//! The drop in illumination caused by enhancement separates target from
//! context pixels via a three-sigma rule over the central target box.

use crate::imgproc::{BBox, Image, ImagePatch, Plane, LUMA_WEIGHTS};
use crate::{Error, Result};

/// Channel weights and the log-domain stabilizer for the enhancer.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnhancerConfig {
    /// `(alpha_R, alpha_G, alpha_B)`, must sum to 1.
    pub alpha: [f64; 3],
    /// Small positive constant keeping `log(delta + L)` finite at L = 0.
    pub delta: f64,
}

impl Default for EnhancerConfig {
    fn default() -> Self {
        EnhancerConfig {
            alpha: LUMA_WEIGHTS,
            delta: 1e-4,
        }
    }
}

impl EnhancerConfig {
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.alpha.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "channel weights must sum to 1, got {sum}"
            )));
        }
        if self.alpha.iter().any(|a| *a < 0.0) {
            return Err(Error::InvalidConfig("negative channel weight".into()));
        }
        if self.delta <= 0.0 {
            return Err(Error::InvalidConfig("delta must be positive".into()));
        }
        Ok(())
    }
}

/// Per-pixel world illumination: the alpha-weighted channel sum.
pub fn world_illumination(patch: &ImagePatch, cfg: &EnhancerConfig) -> Plane {
    let mut out = Plane::new(patch.width, patch.height);
    for (i, v) in out.data.iter_mut().enumerate() {
        let px = &patch.data[i * 3..i * 3 + 3];
        *v = cfg.alpha[0] * px[0] + cfg.alpha[1] * px[1] + cfg.alpha[2] * px[2];
    }
    out
}

/// Log-average luminance of an illumination map:
/// `exp(mean(log(delta + L)))`. Strictly positive.
pub fn log_average_luminance(lw: &Plane, cfg: &EnhancerConfig) -> f64 {
    let n = lw.len() as f64;
    let sum: f64 = lw.data.iter().map(|l| (cfg.delta + l).ln()).sum();
    (sum / n).exp()
}

/// Global adaptation factor per pixel:
/// `log(L/L_avg + 1) / log(L_max/L_avg + 1)`, in `[0, 1]`.
///
/// Errors with "uniformly dark patch" when the map is identically zero,
/// which makes the normalizing denominator vanish.
pub fn global_adaptation(lw: &Plane, cfg: &EnhancerConfig) -> Result<Plane> {
    let l_max = lw.max_value();
    if l_max <= 0.0 {
        return Err(Error::UniformlyDark);
    }
    let l_avg = log_average_luminance(lw, cfg);
    let denom = (l_max / l_avg + 1.0).ln();
    let mut out = Plane::new(lw.width, lw.height);
    for (v, l) in out.data.iter_mut().zip(&lw.data) {
        *v = (l / l_avg + 1.0).ln() / denom;
    }
    Ok(out)
}

/// The two illumination statistics the pipeline reports alongside its
/// outputs.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct IlluminationStats {
    pub log_avg: f64,
    pub l_max: f64,
}

/// Everything the pretreatment stage produces from one patch in one pass.
#[derive(Debug, Clone)]
pub struct Pretreatment {
    /// Tone-mapped patch, clamped to `[0, 1]`.
    pub enhanced: ImagePatch,
    /// Illumination change `L(original) - L(enhanced)`, signed.
    pub theta: Plane,
    pub stats: IlluminationStats,
}

/// Per-pixel gain applied by the enhancer. Pure black passes through
/// with gain 1 (the 0/0 guard).
#[inline]
fn gain(lw: f64, lg: f64) -> f64 {
    if lw > 0.0 {
        lg / lw
    } else {
        1.0
    }
}

/// Run the full pretreatment once: enhanced patch plus the illumination
/// change map, sharing the illumination computation.
pub fn pretreat(patch: &ImagePatch, cfg: &EnhancerConfig) -> Result<Pretreatment> {
    let lw = world_illumination(patch, cfg);
    let l_max = lw.max_value();
    if l_max <= 0.0 {
        return Err(Error::UniformlyDark);
    }
    let lg = global_adaptation(&lw, cfg)?;

    let mut enhanced = Image::new(patch.width, patch.height);
    let mut theta = Plane::new(patch.width, patch.height);
    for i in 0..lw.len() {
        let g = gain(lw.data[i], lg.data[i]);
        let px = &patch.data[i * 3..i * 3 + 3];
        // Illumination of the raw (unclamped) enhanced pixel; clamping is
        // only a storage invariant and would distort the change map.
        let mut lw_e = 0.0;
        for c in 0..3 {
            let raw = px[c] * g;
            lw_e += cfg.alpha[c] * raw;
            enhanced.data[i * 3 + c] = raw.clamp(0.0, 1.0);
        }
        theta.data[i] = lw.data[i] - lw_e;
    }
    Ok(Pretreatment {
        enhanced,
        theta,
        stats: IlluminationStats {
            log_avg: log_average_luminance(&lw, cfg),
            l_max,
        },
    })
}

/// Tone-map a patch: each channel scaled by `L_g / L_w`, clamped to
/// `[0, 1]`.
pub fn enhance_patch(patch: &ImagePatch, cfg: &EnhancerConfig) -> Result<ImagePatch> {
    Ok(pretreat(patch, cfg)?.enhanced)
}

/// Illumination change of a patch under enhancement, computed from the
/// original and (unclamped) enhanced illumination maps.
pub fn illumination_change(patch: &ImagePatch, cfg: &EnhancerConfig) -> Result<Plane> {
    Ok(pretreat(patch, cfg)?.theta)
}

/// Algebraic form of the illumination change,
/// `L - log(L/L_avg + 1) / log(L_max/L_avg + 1)`.
///
/// Kept as a cross-check on [`illumination_change`]; the two must agree
/// on every patch.
pub fn illumination_change_closed_form(patch: &ImagePatch, cfg: &EnhancerConfig) -> Result<Plane> {
    let lw = world_illumination(patch, cfg);
    let lg = global_adaptation(&lw, cfg)?;
    let mut out = Plane::new(lw.width, lw.height);
    for i in 0..lw.len() {
        // The guarded gain leaves pure-black pixels untouched, so their
        // change is exactly zero there as well.
        out.data[i] = if lw.data[i] > 0.0 {
            lw.data[i] - lg.data[i]
        } else {
            0.0
        };
    }
    Ok(out)
}

/// Binary target mask over a patch plus the box it was cropped to.
#[derive(Debug, Clone)]
pub struct TargetMask {
    /// Values in {0, 1}; zero everywhere outside the target box.
    pub mask: Plane,
    /// Pixel bounds `(x0, y0, x1, y1)` of the target box (half-open).
    pub bounds: (usize, usize, usize, usize),
    /// Mean of the illumination change inside the box.
    pub mu: f64,
    /// Standard deviation of the illumination change inside the box.
    pub sigma: f64,
}

/// Build the target-aware mask from an illumination-change map.
///
/// Mean and deviation are taken over the target box only; a pixel is
/// kept when its change lies within three sigma of that mean, and the
/// result is zeroed outside the box.
pub fn build_mask(theta: &Plane, target_box: &BBox) -> Result<TargetMask> {
    let (x0, y0, x1, y1) = box_pixel_bounds(theta, target_box)?;

    let mut n = 0usize;
    let mut sum = 0.0;
    for y in y0..y1 {
        for x in x0..x1 {
            sum += theta.at(x, y);
            n += 1;
        }
    }
    let mu = sum / n as f64;
    let mut var = 0.0;
    for y in y0..y1 {
        for x in x0..x1 {
            let d = theta.at(x, y) - mu;
            var += d * d;
        }
    }
    let sigma = (var / n as f64).sqrt();
    // Absorbs rounding noise so a constant map keeps its full box.
    let band = 3.0 * sigma + 1e-12;

    let mut mask = Plane::new(theta.width, theta.height);
    for y in y0..y1 {
        for x in x0..x1 {
            if (theta.at(x, y) - mu).abs() <= band {
                *mask.at_mut(x, y) = 1.0;
            }
        }
    }
    Ok(TargetMask {
        mask,
        bounds: (x0, y0, x1, y1),
        mu,
        sigma,
    })
}

fn box_pixel_bounds(plane: &Plane, b: &BBox) -> Result<(usize, usize, usize, usize)> {
    let x0 = (b.cx - b.w / 2.0).round().max(0.0) as usize;
    let y0 = (b.cy - b.h / 2.0).round().max(0.0) as usize;
    let x1 = ((b.cx + b.w / 2.0).round() as usize).min(plane.width);
    let y1 = ((b.cy + b.h / 2.0).round() as usize).min(plane.height);
    if x0 >= x1 || y0 >= y1 {
        return Err(Error::InvalidBBox(format!(
            "target box {b:?} does not intersect a {}x{} patch",
            plane.width, plane.height
        )));
    }
    Ok((x0, y0, x1, y1))
}
