//! Per-frame tracking loop: pretreat the search patch, detect via the
//! fused dual-filter response, estimate scale, rebuild the mask, and
//! retrain on the updated appearance model.

use crate::enhance::{build_mask, pretreat, EnhancerConfig};
use crate::features::{
    apply_mask, compose_features, mask_to_cells, CellMask, FeatureConfig, FeatureMap,
};
use crate::filter::{
    make_label, train_dual_with_spectra, train_single_with_spectrum, CropOperator, DualFilter,
    FeatureModel, TrainConfig,
};
use crate::imgproc::{crop_patch, BBox, Image, ImagePatch, PatchSpec, Plane};
use crate::scale::{ScaleFilter, ScaleOptions};
use crate::spectral::{Complex64, Fft2, SpectralMap};
use crate::{Error, Result};

/// Detection-stage settings.
#[derive(Debug, Clone, Copy)]
pub struct DetectConfig {
    /// Weight of the target-focused response in the fusion.
    pub psi: f64,
    /// Search region padding: region extent = (1 + padding) x target.
    pub search_padding: f64,
    /// Approximate side length, in pixels, of the resized search patch.
    pub search_size: usize,
    /// Scale-filter settings (sample count, step, regularizer, rate).
    pub scale: ScaleOptions,
    /// Detect the target-focused branch with the previous frame's mask
    /// (the new position is unknown before detection); when false an
    /// all-ones mask is used instead.
    pub detect_with_previous_mask: bool,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            psi: 0.02,
            search_padding: 4.0,
            search_size: 200,
            scale: ScaleOptions::default(),
            detect_with_previous_mask: true,
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<()> {
        if self.psi < 0.0 {
            return Err(Error::InvalidConfig("psi must be nonnegative".into()));
        }
        if self.search_padding <= 0.0 || self.search_size < 16 {
            return Err(Error::InvalidConfig("search geometry out of range".into()));
        }
        if self.scale.count % 2 == 0 {
            return Err(Error::InvalidConfig("scale count must be odd".into()));
        }
        if self.scale.step <= 1.0 {
            return Err(Error::InvalidConfig("scale step must exceed 1".into()));
        }
        Ok(())
    }
}

/// Pipeline ablation ladder. Each variant switches off one mechanism of
/// the full tracker; `Bacf` is the plain single-filter baseline without
/// enhancement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Enhancement + coupled dual filters + weighted response fusion.
    Full,
    /// Enhancement + dual filters trained independently (no coupling).
    EnhancedWeighted,
    /// Enhancement + single context filter.
    EnhancedOnly,
    /// Alias of `EnhancedOnly`: the enhanced single-filter baseline.
    BacfEnhanced,
    /// Single context filter on raw frames.
    Bacf,
}

impl Variant {
    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "full" => Some(Variant::Full),
            "ew" => Some(Variant::EnhancedWeighted),
            "e" => Some(Variant::EnhancedOnly),
            "bacf_e" => Some(Variant::BacfEnhanced),
            "bacf" => Some(Variant::Bacf),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::EnhancedWeighted => "ew",
            Variant::EnhancedOnly => "e",
            Variant::BacfEnhanced => "bacf_e",
            Variant::Bacf => "bacf",
        }
    }

    /// Rewrite a parameter set to this pipeline variant.
    pub fn apply(&self, params: &mut TrackerParams) {
        match self {
            Variant::Full => {
                params.enhance_enabled = true;
                params.dual_enabled = true;
            }
            Variant::EnhancedWeighted => {
                params.enhance_enabled = true;
                params.dual_enabled = true;
                params.train.mu = 0.0;
            }
            Variant::EnhancedOnly | Variant::BacfEnhanced => {
                params.enhance_enabled = true;
                params.dual_enabled = false;
            }
            Variant::Bacf => {
                params.enhance_enabled = false;
                params.dual_enabled = false;
            }
        }
    }
}

/// Complete tracker parameter set.
#[derive(Debug, Clone)]
pub struct TrackerParams {
    pub enhancer: EnhancerConfig,
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub detect: DetectConfig,
    /// Run the pretreatment enhancement on every patch.
    pub enhance_enabled: bool,
    /// Train and fuse the target-focused filter.
    pub dual_enabled: bool,
    /// Build the illumination mask (all-ones when disabled).
    pub mask_enabled: bool,
    /// Keep the last response map and mask for debug dumps.
    pub keep_debug: bool,
}

impl Default for TrackerParams {
    fn default() -> Self {
        TrackerParams {
            enhancer: EnhancerConfig::default(),
            features: FeatureConfig::default(),
            train: TrainConfig::default(),
            detect: DetectConfig::default(),
            enhance_enabled: true,
            dual_enabled: true,
            mask_enabled: true,
            keep_debug: false,
        }
    }
}

impl TrackerParams {
    pub fn validate(&self) -> Result<()> {
        self.enhancer.validate()?;
        self.features.validate()?;
        self.train.validate()?;
        self.detect.validate()
    }
}

/// Location of a response peak in cell units, including the subcell
/// quadratic refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub dx: f64,
    pub dy: f64,
    /// Set when the response carried no information (all values equal);
    /// the displacement is zero then.
    pub flat: bool,
}

impl Peak {
    /// Map the cell displacement to pixels given the combined
    /// cell-size x patch-resize x scale factor per axis.
    pub fn to_pixels(&self, factor_x: f64, factor_y: f64) -> (f64, f64) {
        (self.dx * factor_x, self.dy * factor_y)
    }
}

/// Argmax of the response with circular wraparound, refined by a 1-D
/// quadratic fit along each axis over the 3x3 neighborhood.
pub fn locate_peak(response: &Plane) -> Peak {
    let (w, h) = (response.width, response.height);
    let mut best = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    let mut arg = (0usize, 0usize);
    for y in 0..h {
        for x in 0..w {
            let v = response.at(x, y);
            if v > best {
                best = v;
                arg = (x, y);
            }
            if v < min {
                min = v;
            }
        }
    }
    if !(best - min).is_finite() || best - min <= 1e-12 * best.abs().max(1.0) {
        return Peak {
            dx: 0.0,
            dy: 0.0,
            flat: true,
        };
    }
    let (ix, iy) = arg;
    let refine = |minus: f64, center: f64, plus: f64| -> f64 {
        let denom = minus - 2.0 * center + plus;
        if denom >= -1e-12 {
            return 0.0;
        }
        (0.5 * (minus - plus) / denom).clamp(-0.5, 0.5)
    };
    let dx_sub = refine(
        response.at((ix + w - 1) % w, iy),
        best,
        response.at((ix + 1) % w, iy),
    );
    let dy_sub = refine(
        response.at(ix, (iy + h - 1) % h),
        best,
        response.at(ix, (iy + 1) % h),
    );
    let wrap = |i: usize, n: usize| -> f64 {
        if i > n / 2 {
            i as f64 - n as f64
        } else {
            i as f64
        }
    };
    Peak {
        dx: wrap(ix, w) + dx_sub,
        dy: wrap(iy, h) + dy_sub,
        flat: false,
    }
}

/// Channel-summed spectral correlation of filters against detection
/// features, fused with weight `psi` and inverse-transformed.
pub fn fused_response_spectra(
    w_g_hat: &SpectralMap,
    z_g_hat: &SpectralMap,
    target: Option<(&SpectralMap, &SpectralMap)>,
    psi: f64,
    fft: &Fft2,
) -> Plane {
    let bins = w_g_hat.bins();
    let mut acc = vec![Complex64::new(0.0, 0.0); bins];
    for c in 0..w_g_hat.channels {
        let wc = w_g_hat.plane(c);
        let zc = z_g_hat.plane(c);
        for i in 0..bins {
            acc[i] += wc[i].conj() * zc[i];
        }
    }
    if let Some((w_o_hat, z_o_hat)) = target {
        for c in 0..w_o_hat.channels {
            let wc = w_o_hat.plane(c);
            let zc = z_o_hat.plane(c);
            for i in 0..bins {
                acc[i] += psi * wc[i].conj() * zc[i];
            }
        }
    }
    fft.inverse_to_plane(&acc)
}

/// Fused response from spatial feature maps: context correlation plus
/// `psi`-weighted target-focused correlation, summed over channels.
pub fn fused_response(
    filters: &DualFilter,
    z_g: &FeatureMap,
    z_o: &FeatureMap,
    psi: f64,
    fft: &Fft2,
) -> Result<Plane> {
    if !filters.w_g.same_shape(z_g) || !filters.w_o.same_shape(z_o) {
        return Err(Error::DimensionMismatch {
            context: "fused_response",
            expected: format!(
                "{}x{}x{}",
                filters.w_g.width, filters.w_g.height, filters.w_g.channels
            ),
            got: format!("{}x{}x{}", z_g.width, z_g.height, z_g.channels),
        });
    }
    let w_g_hat = filters.w_g.to_spectrum(fft);
    let z_g_hat = z_g.to_spectrum(fft);
    let w_o_hat = filters.w_o.to_spectrum(fft);
    let z_o_hat = z_o.to_spectrum(fft);
    Ok(fused_response_spectra(
        &w_g_hat,
        &z_g_hat,
        Some((&w_o_hat, &z_o_hat)),
        psi,
        fft,
    ))
}

/// Outcome of one tracking step.
#[derive(Debug, Clone, Copy)]
pub struct StepResult {
    pub bbox: BBox,
    /// The response carried no peak; the tracker held its position.
    pub flat_response: bool,
}

/// Online tracker state for one sequence.
pub struct Tracker {
    params: TrackerParams,
    frame_size: (usize, usize),
    /// Target size at scale 1, source pixels.
    base_target: (f64, f64),
    /// Search extent at scale 1, source pixels.
    search_extent: (f64, f64),
    /// Resized search patch size, pixels (multiples of the cell size).
    patch_size: (usize, usize),
    /// Source pixels per patch pixel at scale 1, per axis.
    resize: (f64, f64),
    grid: (usize, usize),
    crop: CropOperator,
    label_hat: Vec<Complex64>,
    fft: Fft2,
    ones_mask: CellMask,

    center: (f64, f64),
    scale: f64,
    scale_bounds: (f64, f64),
    filters: DualFilter,
    w_g_hat: SpectralMap,
    w_o_hat: SpectralMap,
    model: FeatureModel,
    cell_mask: CellMask,
    scale_filter: ScaleFilter,
    frame_index: usize,
    debug_response: Option<Plane>,
    debug_mask: Option<Plane>,
}

impl Tracker {
    /// Bootstrap from the first frame and its ground-truth box.
    pub fn init(frame: &Image, gt: &BBox, params: TrackerParams) -> Result<Tracker> {
        params.validate()?;
        if !(gt.w > 0.0 && gt.h > 0.0) {
            return Err(Error::InvalidBBox("degenerate initial box".into()));
        }
        let cell = params.features.cell_size;
        let base_target = (gt.w, gt.h);
        let search_extent = (
            gt.w * (1.0 + params.detect.search_padding),
            gt.h * (1.0 + params.detect.search_padding),
        );
        let area = (params.detect.search_size * params.detect.search_size) as f64;
        let rho = (area / (search_extent.0 * search_extent.1)).sqrt();
        // Snap each axis to a cell count with a fast transform plan.
        let snap = |v: f64| {
            let cells = ((v * rho / cell as f64).round() as usize).max(3);
            crate::spectral::fast_grid_size(cells) * cell
        };
        let patch_size = (snap(search_extent.0), snap(search_extent.1));
        let resize = (
            search_extent.0 / patch_size.0 as f64,
            search_extent.1 / patch_size.1 as f64,
        );
        let grid = (patch_size.0 / cell, patch_size.1 / cell);

        let target_cells = (
            base_target.0 / resize.0 / cell as f64,
            base_target.1 / resize.1 / cell as f64,
        );
        let support = (
            (target_cells.0.round() as usize).clamp(1, grid.0),
            (target_cells.1.round() as usize).clamp(1, grid.1),
        );
        let crop = CropOperator::new(grid.0, grid.1, support.0, support.1)?;
        let fft = Fft2::new(grid.0, grid.1);
        let label = make_label(grid.0, grid.1, target_cells.0, target_cells.1, &params.train);
        let label_hat = fft.forward_plane(&label);
        let mut ones_mask = Plane::new(grid.0, grid.1);
        ones_mask.data.fill(1.0);

        let center = (
            gt.cx.clamp(0.0, frame.width as f64),
            gt.cy.clamp(0.0, frame.height as f64),
        );
        let min_scale = (4.0 / base_target.0).max(4.0 / base_target.1).min(1.0);
        let max_scale = (frame.width as f64 / base_target.0)
            .min(frame.height as f64 / base_target.1)
            .max(1.0);

        let scale_filter = ScaleFilter::new(frame, center, base_target, 1.0, params.detect.scale)?;

        let mut tracker = Tracker {
            frame_size: (frame.width, frame.height),
            base_target,
            search_extent,
            patch_size,
            resize,
            grid,
            crop,
            label_hat,
            fft,
            ones_mask: ones_mask.clone(),
            center,
            scale: 1.0,
            scale_bounds: (min_scale, max_scale),
            filters: DualFilter {
                w_g: FeatureMap::zeros(grid.0, grid.1, params.features.channels()),
                w_o: FeatureMap::zeros(grid.0, grid.1, params.features.channels()),
            },
            w_g_hat: SpectralMap::zeros(grid.0, grid.1, params.features.channels()),
            w_o_hat: SpectralMap::zeros(grid.0, grid.1, params.features.channels()),
            model: FeatureModel::new(
                FeatureMap::zeros(grid.0, grid.1, params.features.channels()),
                FeatureMap::zeros(grid.0, grid.1, params.features.channels()),
            ),
            cell_mask: ones_mask,
            scale_filter,
            frame_index: 0,
            debug_response: None,
            debug_mask: None,
            params,
        };
        tracker.learn(frame, true)?;
        tracker.frame_index = 1;
        Ok(tracker)
    }

    pub fn bbox(&self) -> BBox {
        BBox {
            cx: self.center.0,
            cy: self.center.1,
            w: self.base_target.0 * self.scale,
            h: self.base_target.1 * self.scale,
        }
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    /// Feature grid dimensions in cells.
    pub fn grid(&self) -> (usize, usize) {
        self.grid
    }

    pub fn last_response(&self) -> Option<&Plane> {
        self.debug_response.as_ref()
    }

    pub fn last_mask(&self) -> Option<&Plane> {
        self.debug_mask.as_ref()
    }

    fn search_spec(&self) -> PatchSpec {
        PatchSpec {
            center: self.center,
            extent: (
                self.search_extent.0 * self.scale,
                self.search_extent.1 * self.scale,
            ),
            output: self.patch_size,
        }
    }

    /// Enhance a patch, tolerating uniformly dark crops (raw patch and
    /// no change map in that case).
    fn pretreat_patch(&self, patch: ImagePatch) -> (ImagePatch, Option<Plane>) {
        if !self.params.enhance_enabled {
            return (patch, None);
        }
        match pretreat(&patch, &self.params.enhancer) {
            Ok(p) => (p.enhanced, Some(p.theta)),
            Err(_) => (patch, None),
        }
    }

    /// Target box in patch pixel coordinates (constant: the patch is
    /// always resized so the target occupies the central region).
    fn patch_target_box(&self) -> BBox {
        BBox {
            cx: self.patch_size.0 as f64 / 2.0,
            cy: self.patch_size.1 as f64 / 2.0,
            w: self.base_target.0 / self.resize.0,
            h: self.base_target.1 / self.resize.1,
        }
    }

    /// Extract training features and the cell mask at the current
    /// position, update the appearance model, and retrain the filters.
    fn learn(&mut self, frame: &Image, first: bool) -> Result<()> {
        let patch = crop_patch(frame, &self.search_spec())?;
        let (enhanced, theta) = self.pretreat_patch(patch);

        let x_g = compose_features(&enhanced, &self.params.features)?;
        let dual = self.params.dual_enabled;
        let cm = if dual && self.params.mask_enabled {
            match &theta {
                Some(theta) => {
                    let mask = build_mask(theta, &self.patch_target_box())?;
                    if self.params.keep_debug {
                        self.debug_mask = Some(mask.mask.clone());
                    }
                    mask_to_cells(&mask.mask, self.params.features.cell_size)?
                }
                None => self.ones_mask.clone(),
            }
        } else {
            self.ones_mask.clone()
        };
        let x_o = if dual {
            apply_mask(&x_g, &cm)?
        } else {
            x_g.clone()
        };

        if first {
            self.model = FeatureModel::new(x_g, x_o);
        } else {
            self.model
                .update(&x_g, &x_o, self.params.train.learning_rate)?;
        }

        let x_g_hat = self.model.x_g.to_spectrum(&self.fft);
        if dual {
            let x_o_hat = self.model.x_o.to_spectrum(&self.fft);
            let warm = if first { None } else { Some(&self.filters) };
            let (filters, w_g_hat, w_o_hat) = train_dual_with_spectra(
                &x_g_hat,
                &x_o_hat,
                &self.label_hat,
                &self.crop,
                &self.params.train,
                &self.fft,
                warm,
            );
            self.filters = filters;
            self.w_g_hat = w_g_hat;
            self.w_o_hat = w_o_hat;
        } else {
            let warm = if first { None } else { Some(&self.filters.w_g) };
            let (w_g, w_g_hat) = train_single_with_spectrum(
                &x_g_hat,
                &self.label_hat,
                &self.crop,
                &self.params.train,
                &self.fft,
                warm,
            );
            self.filters.w_g = w_g;
            self.w_g_hat = w_g_hat;
        }
        self.cell_mask = cm;
        Ok(())
    }

    /// Track one frame: detect, rescale, and retrain. Never fails on a
    /// lost target; a flat response is reported through the flag.
    pub fn step(&mut self, frame: &Image) -> Result<StepResult> {
        if (frame.width, frame.height) != self.frame_size {
            return Err(Error::DimensionMismatch {
                context: "step",
                expected: format!("{}x{}", self.frame_size.0, self.frame_size.1),
                got: format!("{}x{}", frame.width, frame.height),
            });
        }
        // Detection at the previous position and scale.
        let patch = crop_patch(frame, &self.search_spec())?;
        let (enhanced, _) = self.pretreat_patch(patch);
        let z_g = compose_features(&enhanced, &self.params.features)?;
        let z_g_hat = z_g.to_spectrum(&self.fft);

        let response = if self.params.dual_enabled {
            let detect_mask = if self.params.detect.detect_with_previous_mask {
                &self.cell_mask
            } else {
                &self.ones_mask
            };
            let z_o = apply_mask(&z_g, detect_mask)?;
            let z_o_hat = z_o.to_spectrum(&self.fft);
            fused_response_spectra(
                &self.w_g_hat,
                &z_g_hat,
                Some((&self.w_o_hat, &z_o_hat)),
                self.params.detect.psi,
                &self.fft,
            )
        } else {
            fused_response_spectra(&self.w_g_hat, &z_g_hat, None, 0.0, &self.fft)
        };

        let peak = locate_peak(&response);
        if self.params.keep_debug {
            self.debug_response = Some(response);
        }
        let (dx, dy) = peak.to_pixels(
            self.params.features.cell_size as f64 * self.resize.0 * self.scale,
            self.params.features.cell_size as f64 * self.resize.1 * self.scale,
        );
        self.center = (
            (self.center.0 + dx).clamp(0.0, self.frame_size.0 as f64),
            (self.center.1 + dy).clamp(0.0, self.frame_size.1 as f64),
        );

        // Scale estimation at the new position.
        self.scale = self
            .scale_filter
            .estimate(frame, self.center, self.scale)?
            .clamp(self.scale_bounds.0, self.scale_bounds.1);

        // Retrain at the new position and scale.
        self.learn(frame, false)?;
        self.frame_index += 1;
        Ok(StepResult {
            bbox: self.bbox(),
            flat_response: peak.flat,
        })
    }
}
