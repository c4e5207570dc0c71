//! Synthetic sequences and drivers shared by the integration suites.

use darktrack::imgproc::{BBox, Image};
use darktrack::track::{Tracker, TrackerParams};

/// Deterministic uniform noise source.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (self.0 >> 33) as f64 / (1u64 << 31) as f64
    }
}

/// A second square sharing the target's shape but cool-colored, moving
/// on its own path (typically crossing the target's).
#[derive(Clone, Copy)]
pub struct Distractor {
    pub start: (f64, f64),
    pub velocity: (f64, f64),
    pub level: f64,
}

/// Parameters of the moving-square scene.
#[derive(Clone, Copy)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub start: (f64, f64),
    pub velocity: (f64, f64),
    pub target_size: f64,
    /// Warm-colored target brightness before dimming.
    pub target_level: f64,
    pub background: f64,
    /// Scene noise added before dimming.
    pub noise_sigma: f64,
    /// Brightness multiplier applied after composing the scene.
    pub dim: f64,
    /// Sensor noise added after dimming (night footage keeps its read
    /// noise even when the signal is crushed).
    pub post_dim_noise: f64,
    pub distractor: Option<Distractor>,
    /// Static squares with the target's own appearance at a different
    /// brightness: `(x, y, level)`. They sit off the target's path and
    /// compete for the context response as the target passes.
    pub lookalikes: &'static [(f64, f64, f64)],
    pub seed: u64,
}

impl SceneConfig {
    pub fn bright() -> SceneConfig {
        SceneConfig {
            width: 320,
            height: 240,
            frames: 100,
            start: (60.0, 120.0),
            velocity: (2.0, 0.0),
            target_size: 20.0,
            target_level: 0.6,
            background: 0.05,
            noise_sigma: 0.02,
            dim: 1.0,
            post_dim_noise: 0.0,
            distractor: None,
            lookalikes: &[],
            seed: 0xD1CE,
        }
    }

    pub fn center_at(&self, frame: usize) -> (f64, f64) {
        (
            self.start.0 + self.velocity.0 * frame as f64,
            self.start.1 + self.velocity.1 * frame as f64,
        )
    }
}

/// Approximate Box-Muller normal from two uniforms.
fn gaussian(rng: &mut Lcg, sigma: f64) -> f64 {
    let u1 = rng.next_f64().max(1e-12);
    let u2 = rng.next_f64();
    sigma * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Render one frame of the scene: textured warm square on a dark noisy
/// background, optional cool distractor, then dimming, sensor noise, and
/// 8-bit quantization (as a decoded file would look).
pub fn render_frame(cfg: &SceneConfig, frame: usize) -> Image {
    let (cx, cy) = cfg.center_at(frame);
    let mut rng = Lcg(cfg.seed.wrapping_add(frame as u64).wrapping_mul(0x9E3779B97F4A7C15));
    let mut img = Image::new(cfg.width, cfg.height);
    let half = cfg.target_size / 2.0;
    let distractor = cfg.distractor.map(|d| {
        (
            (
                d.start.0 + d.velocity.0 * frame as f64,
                d.start.1 + d.velocity.1 * frame as f64,
            ),
            d.level,
        )
    });
    for y in 0..cfg.height {
        for x in 0..cfg.width {
            let (fx, fy) = (x as f64, y as f64);
            let warm_square = |sx: f64, sy: f64, level: f64| -> Option<[f64; 3]> {
                if (fx - sx).abs() < half && (fy - sy).abs() < half {
                    let texture = ((fx - sx) / cfg.target_size * 7.0).sin() * 0.12
                        + ((fy - sy) / cfg.target_size * 5.0).cos() * 0.08;
                    let v = level + texture;
                    Some([v, v * 0.8, v * 0.55])
                } else {
                    None
                }
            };
            let mut rgb = [cfg.background; 3];
            let mut covered = false;
            if let Some(px) = warm_square(cx, cy, cfg.target_level) {
                rgb = px;
                covered = true;
            }
            if !covered {
                for &(lx, ly, level) in cfg.lookalikes {
                    if let Some(px) = warm_square(lx, ly, level) {
                        rgb = px;
                        covered = true;
                        break;
                    }
                }
            }
            if !covered {
                if let Some(((dx_c, dy_c), level)) = distractor {
                    if (fx - dx_c).abs() < half && (fy - dy_c).abs() < half {
                        let texture = ((fx - dx_c) / cfg.target_size * 7.0).sin() * 0.12
                            + ((fy - dy_c) / cfg.target_size * 5.0).cos() * 0.08;
                        let v = level + texture;
                        rgb = [v * 0.55, v * 0.8, v]; // cool
                    }
                }
            }
            let noise = gaussian(&mut rng, cfg.noise_sigma);
            let sensor = gaussian(&mut rng, cfg.post_dim_noise);
            for c in rgb.iter_mut() {
                let dimmed = (*c + noise).clamp(0.0, 1.0) * cfg.dim + sensor;
                *c = (dimmed.clamp(0.0, 1.0) * 255.0).round() / 255.0;
            }
            img.set_pixel(x, y, rgb);
        }
    }
    img
}

pub fn gt_box(cfg: &SceneConfig, frame: usize) -> BBox {
    let (cx, cy) = cfg.center_at(frame);
    BBox::new(cx, cy, cfg.target_size, cfg.target_size).unwrap()
}

/// Track the synthetic scene in memory; returns per-frame center errors
/// (excluding the init frame) and the flat-response count.
pub fn track_scene(cfg: &SceneConfig, params: TrackerParams) -> (Vec<f64>, usize) {
    let first = render_frame(cfg, 0);
    let mut tracker = Tracker::init(&first, &gt_box(cfg, 0), params).expect("init");
    let mut errors = Vec::with_capacity(cfg.frames - 1);
    let mut flat = 0usize;
    for k in 1..cfg.frames {
        let frame = render_frame(cfg, k);
        let out = tracker.step(&frame).expect("step");
        let (cx, cy) = cfg.center_at(k);
        errors.push(((out.bbox.cx - cx).powi(2) + (out.bbox.cy - cy).powi(2)).sqrt());
        flat += out.flat_response as usize;
    }
    (errors, flat)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
