//! Correlation-filter visual tracking for low-light sequences.
//!
//! The pipeline has three per-frame stages:
//!
//! 1. **Pretreatment** ([`enhance`]): a global retinex-style tone mapping
//!    brightens the cropped search patch, and the per-pixel illumination
//!    change it induces yields a binary target-aware mask.
//! 2. **Training** ([`filter`]): two ridge-regression filters — a context
//!    filter over the full search region and a target-focused filter over
//!    mask-suppressed features — are trained jointly by ADMM with a
//!    coupling term that binds them together.
//! 3. **Detection** ([`track`]): both filters correlate with the next
//!    frame's features in the spectral domain; their responses are fused
//!    with a small weight and the peak localizes the target.
//!
//! [`features`] supplies the cell-grid representation (gray, 31-channel
//! HOG, color names), [`spectral`] the FFT/circular-correlation algebra,
//! and [`bench`] sequence loading plus precision/success metrics.

pub mod bench;
pub mod enhance;
pub mod error;
pub mod features;
pub mod filter;
pub mod imgproc;
pub mod scale;
pub mod spectral;
pub mod track;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
