//! Dual-filter training.
//!
//! Each filter solves a ridge regression against the Gaussian label under
//! a hard support constraint (nonzero only on the central target-sized
//! cells), and the two filters are bound by a quadratic coupling term.
//! The solver is ADMM: an auxiliary variable carries the data term in the
//! spectral domain where it is a per-bin rank-one system, the filter
//! update is a spatial scaling plus support projection, and a Lagrangian
//! multiplier ties them together under a growing penalty.

use rayon::prelude::*;

use crate::features::FeatureMap;
use crate::imgproc::Plane;
use crate::spectral::{Complex64, Fft2, SpectralMap};
use crate::{Error, Result};

/// Gaussian regression label over the cell grid, peak 1 wrapped to the
/// index origin (the correlation convention's "no displacement" bin).
pub type GaussianLabel = Plane;

/// Solver and model-update parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    /// Ridge weight on each filter.
    pub lambda1: f64,
    /// Coupling weight between the two filters.
    pub mu: f64,
    /// Initial ADMM penalty.
    pub gamma0: f64,
    /// Penalty ceiling.
    pub gamma_max: f64,
    /// Penalty growth per iteration.
    pub gamma_scale: f64,
    /// ADMM iterations per filter per frame.
    pub admm_iters: usize,
    /// Appearance-model linear interpolation rate.
    pub learning_rate: f64,
    /// Label bandwidth as a fraction of the root target cell area.
    pub label_sigma_factor: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda1: 0.01,
            mu: 200.0,
            gamma0: 1.0,
            gamma_max: 10_000.0,
            gamma_scale: 10.0,
            admm_iters: 3,
            learning_rate: 0.02,
            label_sigma_factor: 1.0 / 16.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda1 > 0.0
            && self.mu >= 0.0
            && self.gamma0 > 0.0
            && self.gamma_max >= self.gamma0
            && self.gamma_scale >= 1.0
            && self.admm_iters > 0
            && self.learning_rate >= 0.0
            && self.learning_rate <= 1.0
            && self.label_sigma_factor > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("train config out of range".into()))
        }
    }
}

/// Central support region of the filter inside the cell grid; realizes
/// the crop/zero-pad pair as a hard projection on full-grid tensors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropOperator {
    pub grid_w: usize,
    pub grid_h: usize,
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl CropOperator {
    pub fn new(grid_w: usize, grid_h: usize, support_w: usize, support_h: usize) -> Result<Self> {
        if support_w == 0 || support_h == 0 || support_w > grid_w || support_h > grid_h {
            return Err(Error::InvalidConfig(format!(
                "support {support_w}x{support_h} does not fit {grid_w}x{grid_h} grid"
            )));
        }
        Ok(CropOperator {
            grid_w,
            grid_h,
            x0: (grid_w - support_w) / 2,
            y0: (grid_h - support_h) / 2,
            width: support_w,
            height: support_h,
        })
    }

    /// Number of support cells N.
    pub fn support_cells(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x0 + self.width && y >= self.y0 && y < self.y0 + self.height
    }

    /// Zero a full-grid tensor outside the support.
    pub fn project(&self, map: &mut FeatureMap) {
        let (w, h) = (map.width, map.height);
        debug_assert_eq!((w, h), (self.grid_w, self.grid_h));
        for c in 0..map.channels {
            let plane = map.plane_mut(c);
            for y in 0..h {
                let row = &mut plane[y * w..(y + 1) * w];
                if y < self.y0 || y >= self.y0 + self.height {
                    row.fill(0.0);
                } else {
                    row[..self.x0].fill(0.0);
                    row[self.x0 + self.width..].fill(0.0);
                }
            }
        }
    }
}

/// The jointly trained pair: context filter and target-focused filter,
/// both stored at full grid size and zero outside the crop support.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFilter {
    pub w_g: FeatureMap,
    pub w_o: FeatureMap,
}

/// Historic appearance kept by linear interpolation, one tensor per
/// filter branch.
#[derive(Debug, Clone)]
pub struct FeatureModel {
    pub x_g: FeatureMap,
    pub x_o: FeatureMap,
}

impl FeatureModel {
    /// First-frame initialization: the model is the current features.
    pub fn new(x_g: FeatureMap, x_o: FeatureMap) -> Self {
        FeatureModel { x_g, x_o }
    }

    /// `model <- (1 - rate) * model + rate * new`, per branch.
    pub fn update(&mut self, x_g: &FeatureMap, x_o: &FeatureMap, rate: f64) -> Result<()> {
        if !self.x_g.same_shape(x_g) || !self.x_o.same_shape(x_o) {
            return Err(Error::DimensionMismatch {
                context: "update_model",
                expected: format!("{}x{}x{}", self.x_g.width, self.x_g.height, self.x_g.channels),
                got: format!("{}x{}x{}", x_g.width, x_g.height, x_g.channels),
            });
        }
        for (m, v) in self.x_g.data.iter_mut().zip(&x_g.data) {
            *m = (1.0 - rate) * *m + rate * v;
        }
        for (m, v) in self.x_o.data.iter_mut().zip(&x_o.data) {
            *m = (1.0 - rate) * *m + rate * v;
        }
        Ok(())
    }
}

/// Gaussian label over a `grid_w x grid_h` grid for a target covering
/// `target_w x target_h` cells.
///
/// Bandwidth: `sigma = label_sigma_factor * sqrt(target_w * target_h)`.
/// Distances are circular so the peak sits at bin (0, 0).
pub fn make_label(
    grid_w: usize,
    grid_h: usize,
    target_w: f64,
    target_h: f64,
    cfg: &TrainConfig,
) -> GaussianLabel {
    let sigma = cfg.label_sigma_factor * (target_w * target_h).sqrt();
    let denom = 2.0 * sigma * sigma;
    let mut out = Plane::new(grid_w, grid_h);
    for y in 0..grid_h {
        let dy = y.min(grid_h - y) as f64;
        for x in 0..grid_w {
            let dx = x.min(grid_w - x) as f64;
            *out.at_mut(x, y) = (-(dx * dx + dy * dy) / denom).exp();
        }
    }
    out
}

/// Closed-form filter update on the support cells:
/// `w = (mu * w_other + T * theta + gamma * T * v) / (lambda1 + mu + gamma * T)`,
/// zeroed outside the support. `theta` and `v` are spatial tensors here.
pub fn solve_w_subproblem(
    w_other: &FeatureMap,
    theta: &FeatureMap,
    v: &FeatureMap,
    gamma: f64,
    cfg: &TrainConfig,
    crop: &CropOperator,
) -> FeatureMap {
    let t = (w_other.width * w_other.height) as f64;
    let mut numerator = FeatureMap::zeros(theta.width, theta.height, theta.channels);
    for i in 0..numerator.data.len() {
        numerator.data[i] = t * theta.data[i] + gamma * t * v.data[i];
    }
    solve_w_from_numerator(Some(w_other), &numerator, gamma, cfg, crop)
}

/// Same update with `T*theta + gamma*T*v` already combined (the hot path
/// inverts a single combined spectrum instead of two).
fn solve_w_from_numerator(
    w_other: Option<&FeatureMap>,
    numerator: &FeatureMap,
    gamma: f64,
    cfg: &TrainConfig,
    crop: &CropOperator,
) -> FeatureMap {
    let t = (numerator.width * numerator.height) as f64;
    let mu = if w_other.is_some() { cfg.mu } else { 0.0 };
    let denom = cfg.lambda1 + mu + gamma * t;
    let mut out = FeatureMap::zeros(numerator.width, numerator.height, numerator.channels);
    for i in 0..out.data.len() {
        let coupled = w_other.map_or(0.0, |w| mu * w.data[i]);
        out.data[i] = (coupled + numerator.data[i]) / denom;
    }
    crop.project(&mut out);
    out
}

/// Per-bin auxiliary update in the spectral domain.
///
/// For every frequency bin the normal matrix is rank-one plus a scaled
/// identity, `x x^H + T gamma I`, so the solve reduces to one projection
/// against `x`:
/// `v = (y x - T theta + gamma T w) / (gamma T)
///    - x * (y s_x - T s_theta + gamma T s_w) / (gamma T (s_x + T gamma))`
/// with `s_* = x^H *` summed over channels.
pub fn solve_v_subproblem(
    x_hat: &SpectralMap,
    y_hat: &[Complex64],
    theta_hat: &SpectralMap,
    w_hat: &SpectralMap,
    gamma: f64,
) -> SpectralMap {
    solve_v_given_energy(x_hat, &spectral_energy(x_hat), y_hat, theta_hat, w_hat, gamma)
}

/// Per-bin channel sum of spectral energy, `s_x(t) = sum_c |x_c(t)|^2`.
/// Constant across a frame's ADMM iterations.
fn spectral_energy(x_hat: &SpectralMap) -> Vec<f64> {
    let t_bins = x_hat.bins();
    let mut s_x = vec![0.0f64; t_bins];
    for c in 0..x_hat.channels {
        for (s, v) in s_x.iter_mut().zip(x_hat.plane(c)) {
            *s += v.norm_sqr();
        }
    }
    s_x
}

fn solve_v_given_energy(
    x_hat: &SpectralMap,
    s_x: &[f64],
    y_hat: &[Complex64],
    theta_hat: &SpectralMap,
    w_hat: &SpectralMap,
    gamma: f64,
) -> SpectralMap {
    let t_bins = x_hat.bins();
    let t = t_bins as f64;
    let gt = gamma * t;
    let q = correction_coefficients(x_hat, s_x, y_hat, theta_hat, w_hat, gamma);

    let mut out = SpectralMap::zeros(x_hat.width, x_hat.height, x_hat.channels);
    out.data
        .par_chunks_exact_mut(t_bins)
        .zip(x_hat.data.par_chunks_exact(t_bins))
        .zip(theta_hat.data.par_chunks_exact(t_bins))
        .zip(w_hat.data.par_chunks_exact(t_bins))
        .for_each(|(((vc, xc), tc), wc)| {
            for i in 0..t_bins {
                vc[i] = (y_hat[i] * xc[i] - t * tc[i] + gt * wc[i]) / gt - xc[i] * q[i];
            }
        });
    out
}

/// Per-bin rank-one correction coefficients of the auxiliary solve. The
/// channel sums run in two fixed halves combined in order, so the result
/// does not depend on the worker count.
fn correction_coefficients(
    x_hat: &SpectralMap,
    s_x: &[f64],
    y_hat: &[Complex64],
    theta_hat: &SpectralMap,
    w_hat: &SpectralMap,
    gamma: f64,
) -> Vec<Complex64> {
    let t_bins = x_hat.bins();
    let t = t_bins as f64;
    let gt = gamma * t;
    debug_assert!(x_hat.same_shape(theta_hat) && x_hat.same_shape(w_hat));
    debug_assert_eq!(y_hat.len(), t_bins);

    let accumulate = |channels: std::ops::Range<usize>| -> (Vec<Complex64>, Vec<Complex64>) {
        let mut s_theta = vec![Complex64::new(0.0, 0.0); t_bins];
        let mut s_w = vec![Complex64::new(0.0, 0.0); t_bins];
        for c in channels {
            let xc = x_hat.plane(c);
            let tc = theta_hat.plane(c);
            let wc = w_hat.plane(c);
            for i in 0..t_bins {
                let conj = xc[i].conj();
                s_theta[i] += conj * tc[i];
                s_w[i] += conj * wc[i];
            }
        }
        (s_theta, s_w)
    };
    let mid = x_hat.channels / 2;
    let ((mut s_theta, mut s_w), (hi_theta, hi_w)) = rayon::join(
        || accumulate(0..mid),
        || accumulate(mid..x_hat.channels),
    );
    for i in 0..t_bins {
        s_theta[i] += hi_theta[i];
        s_w[i] += hi_w[i];
    }

    (0..t_bins)
        .map(|i| {
            let b = s_x[i] + t * gamma;
            (y_hat[i] * s_x[i] - t * s_theta[i] + gt * s_w[i]) / (gt * b)
        })
        .collect()
}

/// Multiplier ascent on the spatial tensors:
/// `theta <- theta + gamma * (v - embed(w))`. Filters are stored
/// embedded (full grid, zero outside support) so `embed` is the
/// identity here.
pub fn update_multiplier(theta: &mut FeatureMap, v: &FeatureMap, w: &FeatureMap, gamma: f64) {
    for i in 0..theta.data.len() {
        theta.data[i] += gamma * (v.data[i] - w.data[i]);
    }
}

/// Penalty schedule: `gamma <- min(gamma_scale * gamma, gamma_max)`.
pub fn advance_penalty(gamma: f64, cfg: &TrainConfig) -> f64 {
    (cfg.gamma_scale * gamma).min(cfg.gamma_max)
}

/// One filter's ADMM state. The auxiliary variable and multiplier live
/// in the spectral domain (where the data term decomposes per bin); the
/// filter lives spatially (where the support projection acts).
pub struct AdmmSolver<'a> {
    x_hat: &'a SpectralMap,
    s_x: Vec<f64>,
    y_hat: &'a [Complex64],
    crop: &'a CropOperator,
    cfg: &'a TrainConfig,
    fft: &'a Fft2,
    w: FeatureMap,
    w_hat: SpectralMap,
    v_hat: SpectralMap,
    theta_hat: SpectralMap,
    gamma: f64,
    iterations: usize,
}

impl<'a> AdmmSolver<'a> {
    /// Fresh per-frame state: auxiliary and multiplier start at zero,
    /// the penalty at `gamma0`; the filter warm-starts from the previous
    /// frame when available.
    pub fn new(
        x_hat: &'a SpectralMap,
        y_hat: &'a [Complex64],
        crop: &'a CropOperator,
        cfg: &'a TrainConfig,
        fft: &'a Fft2,
        warm: Option<&FeatureMap>,
    ) -> Self {
        let (w, h, d) = (x_hat.width, x_hat.height, x_hat.channels);
        let mut start = match warm {
            Some(prev) => prev.clone(),
            None => FeatureMap::zeros(w, h, d),
        };
        crop.project(&mut start);
        AdmmSolver {
            s_x: spectral_energy(x_hat),
            x_hat,
            y_hat,
            crop,
            cfg,
            fft,
            w: start,
            w_hat: SpectralMap::zeros(w, h, d),
            v_hat: SpectralMap::zeros(w, h, d),
            theta_hat: SpectralMap::zeros(w, h, d),
            gamma: cfg.gamma0,
            iterations: 0,
        }
    }

    pub fn filter(&self) -> &FeatureMap {
        &self.w
    }

    pub fn into_filter(self) -> FeatureMap {
        self.w
    }

    /// Final filter together with its spectrum (valid after at least one
    /// step; detection correlates in the spectral domain).
    pub fn into_parts(self) -> (FeatureMap, SpectralMap) {
        (self.w, self.w_hat)
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// One full ADMM iteration: filter update (against the coupling
    /// target if any), per-bin auxiliary solve, multiplier ascent, and
    /// penalty growth.
    pub fn step(&mut self, coupling: Option<&FeatureMap>) {
        let t_bins = self.x_hat.bins();
        let t = t_bins as f64;
        let gamma = self.gamma;
        let gt = gamma * t;
        let mu = if coupling.is_some() { self.cfg.mu } else { 0.0 };
        let denom = self.cfg.lambda1 + mu + gt;
        let crop = *self.crop;
        let fft = self.fft;
        let (grid_w, grid_h) = (self.w.width, self.w.height);

        // Fused per-channel pass: invert the combined numerator spectrum
        // T theta_hat + gamma T v_hat, apply the filter update with the
        // support projection, and transform the new filter back.
        self.w
            .data
            .par_chunks_exact_mut(t_bins)
            .zip(self.w_hat.data.par_chunks_exact_mut(t_bins))
            .zip(self.theta_hat.data.par_chunks_exact(t_bins))
            .zip(self.v_hat.data.par_chunks_exact(t_bins))
            .enumerate()
            .for_each(|(c, (((w_c, w_hat_c), theta_c), v_c))| {
                let mut buf: Vec<Complex64> =
                    (0..t_bins).map(|i| t * theta_c[i] + gt * v_c[i]).collect();
                fft.inverse_in_place(&mut buf);
                let other = coupling.map(|m| m.plane(c));
                for y in 0..grid_h {
                    for x in 0..grid_w {
                        let i = y * grid_w + x;
                        w_c[i] = if crop.contains(x, y) {
                            let coupled = other.map_or(0.0, |o| mu * o[i]);
                            (coupled + buf[i].re) / denom
                        } else {
                            0.0
                        };
                        buf[i] = Complex64::new(w_c[i], 0.0);
                    }
                }
                fft.forward_in_place(&mut buf);
                w_hat_c.copy_from_slice(&buf);
            });

        // Auxiliary solve fused with the multiplier ascent
        // theta_hat += gamma (v_hat - w_hat).
        let q = correction_coefficients(
            self.x_hat,
            &self.s_x,
            self.y_hat,
            &self.theta_hat,
            &self.w_hat,
            gamma,
        );
        let y_hat = self.y_hat;
        self.v_hat
            .data
            .par_chunks_exact_mut(t_bins)
            .zip(self.theta_hat.data.par_chunks_exact_mut(t_bins))
            .zip(self.x_hat.data.par_chunks_exact(t_bins))
            .zip(self.w_hat.data.par_chunks_exact(t_bins))
            .for_each(|(((vc, tc), xc), wc)| {
                for i in 0..t_bins {
                    let v = (y_hat[i] * xc[i] - t * tc[i] + gt * wc[i]) / gt - xc[i] * q[i];
                    vc[i] = v;
                    tc[i] += gamma * (v - wc[i]);
                }
            });
        self.gamma = advance_penalty(gamma, self.cfg);
        self.iterations += 1;
    }

    /// Spatial-domain norm of the constraint residual `v - embed(w)`.
    pub fn primal_residual(&self) -> f64 {
        let t = self.x_hat.bins() as f64;
        let sq: f64 = self
            .v_hat
            .data
            .iter()
            .zip(&self.w_hat.data)
            .map(|(v, w)| (v - w).norm_sqr())
            .sum();
        (sq / t).sqrt()
    }
}

/// Jointly train the context and target-focused filters.
///
/// Each outer round runs one full ADMM iteration per filter; within a
/// round both filters see the other's value from the start of the round,
/// so identical inputs produce exactly identical filters. Each filter
/// keeps its own auxiliary/multiplier/penalty state.
pub fn train_dual(
    x_g_hat: &SpectralMap,
    x_o_hat: &SpectralMap,
    y_hat: &[Complex64],
    crop: &CropOperator,
    cfg: &TrainConfig,
    fft: &Fft2,
    warm: Option<&DualFilter>,
) -> DualFilter {
    let (filters, _, _) = train_dual_with_spectra(x_g_hat, x_o_hat, y_hat, crop, cfg, fft, warm);
    filters
}

/// [`train_dual`] also handing back the filter spectra (the detection
/// stage correlates spectrally; this avoids re-transforming).
pub fn train_dual_with_spectra(
    x_g_hat: &SpectralMap,
    x_o_hat: &SpectralMap,
    y_hat: &[Complex64],
    crop: &CropOperator,
    cfg: &TrainConfig,
    fft: &Fft2,
    warm: Option<&DualFilter>,
) -> (DualFilter, SpectralMap, SpectralMap) {
    let mut ctx = AdmmSolver::new(x_g_hat, y_hat, crop, cfg, fft, warm.map(|d| &d.w_g));
    let mut obj = AdmmSolver::new(x_o_hat, y_hat, crop, cfg, fft, warm.map(|d| &d.w_o));
    for _ in 0..cfg.admm_iters {
        let ctx_snapshot = ctx.w.clone();
        let obj_snapshot = obj.w.clone();
        ctx.step(Some(&obj_snapshot));
        obj.step(Some(&ctx_snapshot));
    }
    let (w_g, w_g_hat) = ctx.into_parts();
    let (w_o, w_o_hat) = obj.into_parts();
    (DualFilter { w_g, w_o }, w_g_hat, w_o_hat)
}

/// Single-filter training (no coupling term): the reduction used by the
/// baseline pipeline variants.
pub fn train_single(
    x_hat: &SpectralMap,
    y_hat: &[Complex64],
    crop: &CropOperator,
    cfg: &TrainConfig,
    fft: &Fft2,
    warm: Option<&FeatureMap>,
) -> FeatureMap {
    train_single_with_spectrum(x_hat, y_hat, crop, cfg, fft, warm).0
}

/// [`train_single`] also handing back the filter spectrum.
pub fn train_single_with_spectrum(
    x_hat: &SpectralMap,
    y_hat: &[Complex64],
    crop: &CropOperator,
    cfg: &TrainConfig,
    fft: &Fft2,
    warm: Option<&FeatureMap>,
) -> (FeatureMap, SpectralMap) {
    let mut solver = AdmmSolver::new(x_hat, y_hat, crop, cfg, fft, warm);
    for _ in 0..cfg.admm_iters {
        solver.step(None);
    }
    solver.into_parts()
}
