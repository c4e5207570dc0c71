//! 2-D DFT utilities and circular correlation.
//!
//! Convention used everywhere in this crate: the forward transform is
//! unnormalized and the inverse carries the `1/T` factor, so
//! `ifft2(fft2(x)) == x` and Parseval reads
//! `sum |x|^2 == (1/T) sum |x_hat|^2`.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

pub use rustfft::num_complex::Complex64;

use crate::imgproc::Plane;
use crate::{Error, Result};

/// Grid of complex spectra, one plane per channel. Channel-major layout.
#[derive(Debug, Clone)]
pub struct SpectralMap {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<Complex64>,
}

impl SpectralMap {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        SpectralMap {
            width,
            height,
            channels,
            data: vec![Complex64::new(0.0, 0.0); width * height * channels],
        }
    }

    pub fn bins(&self) -> usize {
        self.width * self.height
    }

    pub fn plane(&self, c: usize) -> &[Complex64] {
        let t = self.bins();
        &self.data[c * t..(c + 1) * t]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [Complex64] {
        let t = self.bins();
        &mut self.data[c * t..(c + 1) * t]
    }

    pub fn same_shape(&self, other: &SpectralMap) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }
}

std::thread_local! {
    /// Per-thread transpose/scratch buffer shared by all plan sizes.
    static WORK: std::cell::RefCell<Vec<Complex64>> = const { std::cell::RefCell::new(Vec::new()) };
}

/// Grid sizes whose transform plans measured fast on this FFT backend;
/// radix-5-heavy lengths (25, 50, 100, ...) plan poorly and are skipped.
const FAST_SIZES: [usize; 24] = [
    8, 9, 12, 16, 18, 24, 27, 30, 32, 36, 40, 45, 48, 54, 60, 64, 72, 80, 81, 90, 96, 108, 120,
    128,
];

/// Nearest grid size with a fast transform plan (ties prefer the
/// smaller). Sizes beyond the table are returned unchanged.
pub fn fast_grid_size(target: usize) -> usize {
    if target > *FAST_SIZES.last().unwrap() {
        return target;
    }
    *FAST_SIZES
        .iter()
        .min_by_key(|&&n| (n.abs_diff(target), n))
        .unwrap()
}

/// Cached row/column FFT plans for one grid geometry.
pub struct Fft2 {
    pub width: usize,
    pub height: usize,
    fwd_w: Arc<dyn Fft<f64>>,
    inv_w: Arc<dyn Fft<f64>>,
    fwd_h: Arc<dyn Fft<f64>>,
    inv_h: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2({}x{})", self.width, self.height)
    }
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "empty grid");
        let mut planner = FftPlanner::new();
        Fft2 {
            width,
            height,
            fwd_w: planner.plan_fft_forward(width),
            inv_w: planner.plan_fft_inverse(width),
            fwd_h: planner.plan_fft_forward(height),
            inv_h: planner.plan_fft_inverse(height),
        }
    }

    fn len(&self) -> usize {
        self.width * self.height
    }

    fn transform(&self, buf: &mut [Complex64], forward: bool) {
        debug_assert_eq!(buf.len(), self.len());
        let (row_fft, col_fft) = if forward {
            (&self.fwd_w, &self.fwd_h)
        } else {
            (&self.inv_w, &self.inv_h)
        };
        let scratch_len = row_fft
            .get_inplace_scratch_len()
            .max(col_fft.get_inplace_scratch_len())
            .max(1);
        let need = self.len() + scratch_len;
        WORK.with(|cell| {
            let mut work = cell.borrow_mut();
            if work.len() < need {
                work.resize(need, Complex64::new(0.0, 0.0));
            }
            let (transposed, scratch) = work.split_at_mut(self.len());

            for row in buf.chunks_exact_mut(self.width) {
                row_fft.process_with_scratch(row, scratch);
            }
            // Column pass on contiguous data via transpose.
            for y in 0..self.height {
                for x in 0..self.width {
                    transposed[x * self.height + y] = buf[y * self.width + x];
                }
            }
            for col in transposed.chunks_exact_mut(self.height) {
                col_fft.process_with_scratch(col, scratch);
            }
            for x in 0..self.width {
                for y in 0..self.height {
                    buf[y * self.width + x] = transposed[x * self.height + y];
                }
            }
        });
    }

    /// Unnormalized forward transform, in place.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
    }

    /// Inverse transform with the `1/T` factor, in place.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
        let norm = 1.0 / self.len() as f64;
        for v in buf.iter_mut() {
            *v *= norm;
        }
    }

    /// Forward transform of a real plane.
    pub fn forward_plane(&self, plane: &Plane) -> Vec<Complex64> {
        debug_assert_eq!((plane.width, plane.height), (self.width, self.height));
        let mut buf: Vec<Complex64> = plane.data.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.forward_in_place(&mut buf);
        buf
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse_to_plane(&self, spectrum: &[Complex64]) -> Plane {
        let mut buf = spectrum.to_vec();
        self.inverse_in_place(&mut buf);
        Plane::from_vec(self.width, self.height, buf.iter().map(|c| c.re).collect())
    }
}

/// Forward 2-D DFT of a real map. One-shot convenience; hot paths keep a
/// [`Fft2`] around instead.
pub fn fft2(map: &Plane) -> Vec<Complex64> {
    Fft2::new(map.width, map.height).forward_plane(map)
}

/// Inverse 2-D DFT back to a real map.
pub fn ifft2(spectrum: &[Complex64], width: usize, height: usize) -> Plane {
    Fft2::new(width, height).inverse_to_plane(spectrum)
}

/// Circular correlation of a template with a signal:
/// `ifft2(conj(fft2(w)) .* fft2(x))`.
///
/// Correlating a template with a circularly shifted copy of itself peaks
/// at the shift offset.
pub fn circular_correlate(template: &Plane, signal: &Plane) -> Result<Plane> {
    if (template.width, template.height) != (signal.width, signal.height) {
        return Err(Error::DimensionMismatch {
            context: "circular_correlate",
            expected: format!("{}x{}", template.width, template.height),
            got: format!("{}x{}", signal.width, signal.height),
        });
    }
    let fft = Fft2::new(template.width, template.height);
    let w_hat = fft.forward_plane(template);
    let mut x_hat = fft.forward_plane(signal);
    for (x, w) in x_hat.iter_mut().zip(&w_hat) {
        *x *= w.conj();
    }
    Ok(fft.inverse_to_plane(&x_hat))
}
