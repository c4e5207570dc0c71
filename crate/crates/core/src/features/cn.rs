//! Color-name features: each pixel's RGB is quantized to a 32x32x32 bin
//! and looked up in a table of 11 color-category probabilities, which
//! are then averaged per cell.
//!
//! Table file format: 32768 rows of 11 little-endian f32 values, row
//! index `floor(R/8) + 32*floor(G/8) + 1024*floor(B/8)` over 8-bit RGB.
//! Any standard color-name table can be converted to this layout. When
//! no file is configured, a built-in table assembled from prototype
//! colors is used.

use std::path::Path;
use std::sync::{Arc, OnceLock};

use crate::features::FeatureMap;
use crate::imgproc::ImagePatch;
use crate::{Error, Result};

/// Number of color-name channels.
pub const CN_CHANNELS: usize = 11;
/// Rows in the quantized RGB lookup.
pub const CN_ROWS: usize = 32 * 32 * 32;

/// Lookup from quantized RGB to color-name probabilities.
pub struct CnTable {
    /// `CN_ROWS * CN_CHANNELS`, row-major.
    rows: Vec<f64>,
}

impl std::fmt::Debug for CnTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CnTable({CN_ROWS} rows)")
    }
}

/// Prototype colors, one per name, in the conventional channel order:
/// black, blue, brown, grey, green, orange, pink, purple, red, white,
/// yellow.
const PROTOTYPES: [[f64; 3]; CN_CHANNELS] = [
    [0.00, 0.00, 0.00],
    [0.10, 0.25, 0.85],
    [0.42, 0.26, 0.12],
    [0.50, 0.50, 0.50],
    [0.10, 0.60, 0.20],
    [0.95, 0.55, 0.10],
    [0.95, 0.60, 0.70],
    [0.50, 0.20, 0.60],
    [0.85, 0.08, 0.10],
    [1.00, 1.00, 1.00],
    [0.95, 0.90, 0.10],
];

impl CnTable {
    /// Built-in table: soft assignment of every quantized RGB bin to the
    /// prototype colors with a Gaussian kernel. Rows sum to 1.
    pub fn builtin() -> Arc<CnTable> {
        static TABLE: OnceLock<Arc<CnTable>> = OnceLock::new();
        TABLE
            .get_or_init(|| {
                let tau2 = 2.0 * 0.22f64 * 0.22;
                let mut rows = vec![0.0; CN_ROWS * CN_CHANNELS];
                for bin in 0..CN_ROWS {
                    let r = ((bin & 31) as f64 + 0.5) / 32.0;
                    let g = (((bin >> 5) & 31) as f64 + 0.5) / 32.0;
                    let b = (((bin >> 10) & 31) as f64 + 0.5) / 32.0;
                    let row = &mut rows[bin * CN_CHANNELS..(bin + 1) * CN_CHANNELS];
                    let mut sum = 0.0;
                    for (p, proto) in row.iter_mut().zip(&PROTOTYPES) {
                        let d2 = (r - proto[0]).powi(2)
                            + (g - proto[1]).powi(2)
                            + (b - proto[2]).powi(2);
                        *p = (-d2 / tau2).exp();
                        sum += *p;
                    }
                    for p in row.iter_mut() {
                        *p /= sum;
                    }
                }
                Arc::new(CnTable { rows })
            })
            .clone()
    }

    /// Load a table in the documented binary layout, validating row sums.
    pub fn load(path: &Path) -> Result<Arc<CnTable>> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let expected = CN_ROWS * CN_CHANNELS * 4;
        if bytes.len() != expected {
            return Err(Error::InvalidCnTable(format!(
                "{}: expected {expected} bytes, found {}",
                path.display(),
                bytes.len()
            )));
        }
        let mut rows = Vec::with_capacity(CN_ROWS * CN_CHANNELS);
        for chunk in bytes.chunks_exact(4) {
            let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as f64;
            if !v.is_finite() {
                return Err(Error::InvalidCnTable(format!(
                    "{}: non-finite entry",
                    path.display()
                )));
            }
            rows.push(v);
        }
        let table = CnTable { rows };
        table.validate().map_err(|e| {
            Error::InvalidCnTable(format!("{}: {e}", path.display()))
        })?;
        Ok(Arc::new(table))
    }

    /// Write the table in the documented binary layout.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.rows.len() * 4);
        for v in &self.rows {
            bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    fn validate(&self) -> std::result::Result<(), String> {
        for (i, row) in self.rows.chunks_exact(CN_CHANNELS).enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-3 {
                return Err(format!("row {i} sums to {sum}"));
            }
        }
        Ok(())
    }

    /// Table row for an RGB triple in `[0, 1]`.
    #[inline]
    pub fn row(&self, rgb: [f64; 3]) -> &[f64] {
        let q = |v: f64| ((v * 255.0).round().clamp(0.0, 255.0) as usize) >> 3;
        let idx = q(rgb[0]) + 32 * q(rgb[1]) + 1024 * q(rgb[2]);
        &self.rows[idx * CN_CHANNELS..(idx + 1) * CN_CHANNELS]
    }
}

/// Per-cell mean of per-pixel color-name vectors.
pub fn extract_cn(patch: &ImagePatch, table: &CnTable, cell_size: usize) -> Result<FeatureMap> {
    if patch.width % cell_size != 0 || patch.height % cell_size != 0 || patch.width == 0 {
        return Err(Error::DimensionMismatch {
            context: "extract_cn",
            expected: format!("dims divisible by {cell_size}"),
            got: format!("{}x{}", patch.width, patch.height),
        });
    }
    let grid_w = patch.width / cell_size;
    let grid_h = patch.height / cell_size;
    let mut out = FeatureMap::zeros(grid_w, grid_h, CN_CHANNELS);
    let inv_area = 1.0 / (cell_size * cell_size) as f64;
    for y in 0..patch.height {
        let cy = y / cell_size;
        for x in 0..patch.width {
            let cx = x / cell_size;
            let row = table.row(patch.pixel(x, y));
            for (c, p) in row.iter().enumerate() {
                *out.at_mut(cx, cy, c) += p * inv_area;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgproc::Image;

    #[test]
    fn builtin_rows_are_distributions() {
        let t = CnTable::builtin();
        assert!(t.validate().is_ok());
        // Pure black should be dominated by the black name.
        let black = t.row([0.0, 0.0, 0.0]);
        assert_eq!(
            black.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0,
            0
        );
        let white = t.row([1.0, 1.0, 1.0]);
        assert_eq!(
            white.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0,
            9
        );
    }

    #[test]
    fn uniform_patch_yields_table_row() {
        let t = CnTable::builtin();
        let color = [0.8, 0.1, 0.15];
        let mut patch = Image::new(8, 8);
        for y in 0..8 {
            for x in 0..8 {
                patch.set_pixel(x, y, color);
            }
        }
        let f = extract_cn(&patch, &t, 4).unwrap();
        let row = t.row(color);
        for cy in 0..2 {
            for cx in 0..2 {
                for c in 0..CN_CHANNELS {
                    assert!((f.at(cx, cy, c) - row[c]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn split_cell_averages_rows() {
        let t = CnTable::builtin();
        let red = [1.0, 0.0, 0.0];
        let blue = [0.0, 0.0, 1.0];
        let mut patch = Image::new(4, 4);
        for y in 0..4 {
            for x in 0..4 {
                patch.set_pixel(x, y, if y < 2 { red } else { blue });
            }
        }
        let f = extract_cn(&patch, &t, 4).unwrap();
        let (r, b) = (t.row(red), t.row(blue));
        for c in 0..CN_CHANNELS {
            assert!((f.at(0, 0, c) - 0.5 * (r[c] + b[c])).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_per_pixel_brute_force() {
        let t = CnTable::builtin();
        let mut patch = Image::new(12, 8);
        let mut seed = 41u64;
        for i in 0..patch.data.len() {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            patch.data[i] = (seed >> 33) as f64 / (1u64 << 31) as f64;
        }
        let f = extract_cn(&patch, &t, 4).unwrap();
        for cy in 0..2 {
            for cx in 0..3 {
                let mut acc = [0.0; CN_CHANNELS];
                for py in cy * 4..cy * 4 + 4 {
                    for px in cx * 4..cx * 4 + 4 {
                        for (a, v) in acc.iter_mut().zip(t.row(patch.pixel(px, py))) {
                            *a += v / 16.0;
                        }
                    }
                }
                for c in 0..CN_CHANNELS {
                    assert_eq!(f.at(cx, cy, c), acc[c], "exact per-pixel average");
                }
            }
        }
    }

    #[test]
    fn round_trips_through_file() {
        let t = CnTable::builtin();
        let dir = std::env::temp_dir().join("darktrack-cn-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("table.bin");
        t.save(&path).unwrap();
        let loaded = CnTable::load(&path).unwrap();
        assert!((loaded.row([0.5, 0.2, 0.9])[3] - t.row([0.5, 0.2, 0.9])[3]).abs() < 1e-6);

        std::fs::write(&path, b"short").unwrap();
        assert!(matches!(
            CnTable::load(&path),
            Err(Error::InvalidCnTable(_))
        ));
    }
}
