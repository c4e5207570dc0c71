//! 1-D correlation-filter scale estimation.
//!
//! A pyramid of target-sized patches at geometrically spaced scale
//! factors is resized to a fixed model size; HOG features of each sample
//! form one column of a feature matrix whose rows are ridge-regressed
//! against a 1-D Gaussian label along the scale axis. The response
//! argmax picks the scale step, and the filter numerator/denominator are
//! updated by linear interpolation.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::features::extract_fhog;
use crate::imgproc::{crop_patch, to_gray, Image, PatchSpec, LUMA_WEIGHTS};
use crate::spectral::Complex64;
use crate::Result;

/// Scale-axis settings, all owned by the detection configuration.
#[derive(Debug, Clone, Copy)]
pub struct ScaleOptions {
    /// Number of scale samples (odd; 1 disables estimation).
    pub count: usize,
    /// Geometric step between adjacent samples.
    pub step: f64,
    /// Ridge regularizer of the scale filter.
    pub lambda: f64,
    /// Numerator/denominator interpolation rate.
    pub learning_rate: f64,
    /// Label bandwidth as a fraction of the sample count.
    pub sigma_factor: f64,
    /// Pixel-area cap of the resized scale model.
    pub model_max_area: f64,
}

impl Default for ScaleOptions {
    fn default() -> Self {
        ScaleOptions {
            count: 33,
            step: 1.02,
            lambda: 0.01,
            learning_rate: 0.025,
            sigma_factor: 0.25,
            model_max_area: 1024.0,
        }
    }
}

const CELL: usize = 4;

/// Online 1-D scale filter.
pub struct ScaleFilter {
    opts: ScaleOptions,
    /// Scale factor of each sample index (geometric, ascending).
    factors: Vec<f64>,
    /// Hann taper across the scale axis.
    window: Vec<f64>,
    /// Label spectrum; the label peaks at the center index.
    y_hat: Vec<Complex64>,
    /// Per-feature-row numerator, `feature_len x count`.
    num: Vec<Complex64>,
    /// Per-bin denominator (channel sum of spectral energy).
    den: Vec<f64>,
    feature_len: usize,
    model_w: usize,
    model_h: usize,
    base_target: (f64, f64),
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ScaleFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ScaleFilter({} scales, model {}x{})",
            self.opts.count, self.model_w, self.model_h
        )
    }
}

impl ScaleFilter {
    /// Build and train the filter on the first frame.
    pub fn new(
        frame: &Image,
        center: (f64, f64),
        base_target: (f64, f64),
        scale: f64,
        opts: ScaleOptions,
    ) -> Result<Self> {
        let count = opts.count.max(1);
        let half = (count as i64 - 1) / 2;
        let factors: Vec<f64> = (0..count as i64)
            .map(|i| opts.step.powi((i - half) as i32))
            .collect();
        let window: Vec<f64> = if count == 1 {
            vec![1.0]
        } else {
            (0..count)
                .map(|i| {
                    0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / (count - 1) as f64).cos())
                })
                .collect()
        };

        // Model patch: base target shrunk under the area cap, snapped to
        // whole cells.
        let area = base_target.0 * base_target.1;
        let shrink = (opts.model_max_area / area).sqrt().min(1.0);
        let snap = |v: f64| (((v * shrink / CELL as f64).round() as usize).max(2)) * CELL;
        let model_w = snap(base_target.0);
        let model_h = snap(base_target.1);
        let feature_len = (model_w / CELL) * (model_h / CELL) * 31;

        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(count);
        let inv = planner.plan_fft_inverse(count);

        // 1-D Gaussian label peaked at the center sample.
        let sigma = opts.sigma_factor * (count as f64).sqrt();
        let mut label: Vec<Complex64> = (0..count)
            .map(|i| {
                let d = i as f64 - half as f64;
                Complex64::new((-(d * d) / (2.0 * sigma * sigma)).exp(), 0.0)
            })
            .collect();
        fwd.process(&mut label);

        let mut filter = ScaleFilter {
            opts,
            factors,
            window,
            y_hat: label,
            num: vec![Complex64::new(0.0, 0.0); feature_len * count],
            den: vec![0.0; count],
            feature_len,
            model_w,
            model_h,
            base_target,
            fwd,
            inv,
        };
        let spectra = filter.sample_spectra(frame, center, scale)?;
        filter.write_model(&spectra, 1.0);
        Ok(filter)
    }

    pub fn sample_count(&self) -> usize {
        self.opts.count.max(1)
    }

    /// HOG features of the scale pyramid, transformed along the scale
    /// axis. Returns `feature_len` rows of `count` spectra.
    fn sample_spectra(
        &self,
        frame: &Image,
        center: (f64, f64),
        scale: f64,
    ) -> Result<Vec<Complex64>> {
        use rayon::prelude::*;
        let count = self.sample_count();
        let columns: Vec<Vec<f64>> = self
            .factors
            .par_iter()
            .map(|factor| -> Result<Vec<f64>> {
                let spec = PatchSpec {
                    center,
                    extent: (
                        (self.base_target.0 * scale * factor).max(2.0),
                        (self.base_target.1 * scale * factor).max(2.0),
                    ),
                    output: (self.model_w, self.model_h),
                };
                let patch = crop_patch(frame, &spec)?;
                let gray = to_gray(&patch, LUMA_WEIGHTS);
                let hog = extract_fhog(&gray, CELL, 9)?;
                debug_assert_eq!(hog.data.len(), self.feature_len);
                Ok(hog.data)
            })
            .collect::<Result<_>>()?;
        let mut rows = vec![Complex64::new(0.0, 0.0); self.feature_len * count];
        for (s, column) in columns.iter().enumerate() {
            for (f, v) in column.iter().enumerate() {
                rows[f * count + s] = Complex64::new(v * self.window[s], 0.0);
            }
        }
        let mut scratch =
            vec![Complex64::new(0.0, 0.0); self.fwd.get_inplace_scratch_len().max(1)];
        for row in rows.chunks_exact_mut(count) {
            self.fwd.process_with_scratch(row, &mut scratch);
        }
        Ok(rows)
    }

    /// Blend new sample spectra into the numerator/denominator.
    fn write_model(&mut self, spectra: &[Complex64], rate: f64) {
        let count = self.sample_count();
        let keep = 1.0 - rate;
        for (f, row) in spectra.chunks_exact(count).enumerate() {
            for s in 0..count {
                let target = self.y_hat[s] * row[s].conj();
                let slot = &mut self.num[f * count + s];
                *slot = *slot * keep + target * rate;
            }
        }
        let mut energy = vec![0.0; count];
        for row in spectra.chunks_exact(count) {
            for (e, v) in energy.iter_mut().zip(row) {
                *e += v.norm_sqr();
            }
        }
        for (d, e) in self.den.iter_mut().zip(&energy) {
            *d = *d * keep + e * rate;
        }
    }

    /// Response over the scale axis for the current samples.
    fn response(&self, spectra: &[Complex64]) -> Vec<f64> {
        let count = self.sample_count();
        let mut acc = vec![Complex64::new(0.0, 0.0); count];
        for (f, row) in spectra.chunks_exact(count).enumerate() {
            for s in 0..count {
                acc[s] += self.num[f * count + s] * row[s];
            }
        }
        for (s, a) in acc.iter_mut().enumerate() {
            *a /= Complex64::new(self.den[s] + self.opts.lambda, 0.0);
        }
        let mut scratch =
            vec![Complex64::new(0.0, 0.0); self.inv.get_inplace_scratch_len().max(1)];
        self.inv.process_with_scratch(&mut acc, &mut scratch);
        acc.iter().map(|c| c.re / count as f64).collect()
    }

    /// Estimate the scale at `center`, update the filter at the chosen
    /// scale, and return the new scale factor.
    ///
    /// A single-sample configuration leaves the scale unchanged.
    pub fn estimate(&mut self, frame: &Image, center: (f64, f64), scale: f64) -> Result<f64> {
        if self.sample_count() == 1 {
            let spectra = self.sample_spectra(frame, center, scale)?;
            self.write_model(&spectra, self.opts.learning_rate);
            return Ok(scale);
        }
        let spectra = self.sample_spectra(frame, center, scale)?;
        let response = self.response(&spectra);
        let best = response
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let new_scale = scale * self.factors[best];

        let train = self.sample_spectra(frame, center, new_scale)?;
        self.write_model(&train, self.opts.learning_rate);
        Ok(new_scale)
    }
}
