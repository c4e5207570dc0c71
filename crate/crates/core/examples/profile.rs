//! Rough per-stage timing of the tracking loop on synthetic frames.

use std::time::Instant;

use darktrack::enhance::pretreat;
use darktrack::features::compose_features;
use darktrack::imgproc::{crop_patch, BBox, Image, PatchSpec};
use darktrack::track::{Tracker, TrackerParams};

fn frame(w: usize, h: usize, cx: f64, k: u64) -> Image {
    let mut img = Image::new(w, h);
    let mut seed = k.wrapping_mul(0x9E3779B97F4A7C15) + 1;
    for y in 0..h {
        for x in 0..w {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let n = (seed >> 33) as f64 / (1u64 << 31) as f64;
            let inside = (x as f64 - cx).abs() < 20.0 && (y as f64 - 180.0).abs() < 20.0;
            let v = if inside { 0.6 } else { 0.05 } + (n - 0.5) * 0.04;
            let q = (v.clamp(0.0, 1.0) * 255.0).round() / 255.0;
            img.set_pixel(x, y, [q, q * 0.9, q * 0.8]);
        }
    }
    img
}

fn main() {
    let frames: Vec<Image> = (0..30).map(|k| frame(640, 360, 120.0 + 2.0 * k as f64, k)).collect();
    let gt = BBox::new(120.0, 180.0, 40.0, 40.0).unwrap();
    let params = TrackerParams::default();

    // Stage timings outside the tracker.
    let spec = PatchSpec {
        center: (120.0, 180.0),
        extent: (200.0, 200.0),
        output: (200, 200),
    };
    let t = Instant::now();
    let mut patch = None;
    for _ in 0..20 {
        patch = Some(crop_patch(&frames[0], &spec).unwrap());
    }
    println!("crop_patch x20: {:?}", t.elapsed());
    let patch = patch.unwrap();

    let t = Instant::now();
    let mut pre = None;
    for _ in 0..20 {
        pre = Some(pretreat(&patch, &params.enhancer).unwrap());
    }
    println!("pretreat   x20: {:?}", t.elapsed());
    let pre = pre.unwrap();

    let t = Instant::now();
    let mut feats = None;
    for _ in 0..20 {
        feats = Some(compose_features(&pre.enhanced, &params.features).unwrap());
    }
    println!("features   x20: {:?}", t.elapsed());
    let feats = feats.unwrap();

    let fft = darktrack::spectral::Fft2::new(feats.width, feats.height);
    let t = Instant::now();
    for _ in 0..20 {
        let _ = feats.to_spectrum(&fft);
    }
    println!("fft 43ch   x20: {:?}", t.elapsed());

    // Training phase in isolation.
    use darktrack::filter::{make_label, train_dual_with_spectra, CropOperator};
    let (gw, gh) = (feats.width, feats.height);
    let crop = CropOperator::new(gw, gh, 10, 10).unwrap();
    let label = make_label(gw, gh, 10.0, 10.0, &params.train);
    let y_hat = fft.forward_plane(&label);
    let x_hat = feats.to_spectrum(&fft);
    let t = Instant::now();
    for _ in 0..10 {
        let _ = train_dual_with_spectra(&x_hat, &x_hat, &y_hat, &crop, &params.train, &fft, None);
    }
    println!("train_dual x10: {:?}", t.elapsed());

    use darktrack::scale::ScaleFilter;
    let mut sf = ScaleFilter::new(&frames[0], (120.0, 180.0), (40.0, 40.0), 1.0, params.detect.scale)
        .unwrap();
    let t = Instant::now();
    for _ in 0..10 {
        let _ = sf.estimate(&frames[0], (120.0, 180.0), 1.0).unwrap();
    }
    println!("scale est  x10: {:?}", t.elapsed());

    let t = Instant::now();
    let mut tracker = Tracker::init(&frames[0], &gt, params).unwrap();
    println!("init: {:?}", t.elapsed());
    let t = Instant::now();
    for f in &frames[1..] {
        tracker.step(f).unwrap();
    }
    let secs = t.elapsed().as_secs_f64();
    println!(
        "steps: {:.1} ms/frame ({:.1} FPS)",
        1000.0 * secs / (frames.len() - 1) as f64,
        (frames.len() - 1) as f64 / secs
    );
}
