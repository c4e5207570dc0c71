//! Sequence loading, per-frame error computation, and the evaluation
//! metrics: precision curve / DP@20, success curve / AUC, and FPS.
//!
//! Curve conventions: precision at threshold `t` counts frames with
//! center error `<= t` over `t = 0..=50` px; success at overlap
//! threshold `theta` counts frames with IoU `>= theta` over 51 evenly
//! spaced thresholds, except at `theta = 0` where strictly positive
//! overlap is required (so perfect tracking scores AUC 1 and fully
//! disjoint tracking scores 0). Reports average per-sequence curves with
//! equal weight.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::imgproc::{BBox, Image};
use crate::track::{Tracker, TrackerParams};
use crate::{Error, Result};

/// Number of points on both metric curves.
pub const CURVE_POINTS: usize = 51;
/// Headline precision threshold in pixels.
pub const DP_THRESHOLD_PX: usize = 20;

/// The recognized per-sequence attribute tags.
pub const ATTRIBUTES: [&str; 5] = ["IV", "OCC", "LR", "FM", "VC"];

/// A benchmark sequence: ordered frames, per-frame ground truth
/// (`None` marks absent annotations), and optional attribute tags.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub name: String,
    pub frames: Vec<PathBuf>,
    pub ground_truth: Vec<Option<BBox>>,
    pub attributes: Vec<String>,
}

/// Tracker output over one sequence.
#[derive(Debug, Clone)]
pub struct TrackResult {
    /// Predicted box per frame (frame 0 echoes the init box).
    pub boxes: Vec<BBox>,
    /// Per-frame tracking seconds, decode time excluded.
    pub secs: Vec<f64>,
    /// Frames whose response was flat (position held).
    pub flat_frames: usize,
}

/// Aggregated metrics.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MetricReport {
    pub precision: Vec<f64>,
    pub success: Vec<f64>,
    pub dp20: f64,
    pub auc: f64,
    pub fps: f64,
    pub frames: usize,
    pub sequences: usize,
}

/// Per-sequence curves, the unit the report averages over.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SequenceMetrics {
    pub name: String,
    pub attributes: Vec<String>,
    pub precision: Vec<f64>,
    pub success: Vec<f64>,
    pub dp20: f64,
    pub auc: f64,
    pub fps: f64,
    pub frames: usize,
    /// Per-frame center errors (absent ground truth skipped).
    #[serde(skip)]
    pub cle: Vec<Option<f64>>,
    #[serde(skip)]
    pub iou: Vec<Option<f64>>,
}

/// Euclidean distance between box centers.
pub fn cle(a: &BBox, b: &BBox) -> f64 {
    ((a.cx - b.cx).powi(2) + (a.cy - b.cy).powi(2)).sqrt()
}

/// Intersection over union; disjoint boxes score 0.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let (ax0, ay0) = a.top_left();
    let (bx0, by0) = b.top_left();
    let ix = (ax0 + a.w).min(bx0 + b.w) - ax0.max(bx0);
    let iy = (ay0 + a.h).min(by0 + b.h) - ay0.max(by0);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    inter / (a.area() + b.area() - inter)
}

fn natural_key(name: &str) -> Vec<(u8, u128, String)> {
    let mut key = Vec::new();
    let mut chars = name.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_ascii_digit() {
            let mut n: u128 = 0;
            while let Some(&d) = chars.peek() {
                if let Some(v) = d.to_digit(10) {
                    n = n.saturating_mul(10).saturating_add(v as u128);
                    chars.next();
                } else {
                    break;
                }
            }
            key.push((0, n, String::new()));
        } else {
            let mut s = String::new();
            while let Some(&d) = chars.peek() {
                if d.is_ascii_digit() {
                    break;
                }
                s.push(d);
                chars.next();
            }
            key.push((1, 0, s));
        }
    }
    key
}

fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let img_dir = dir.join("img");
    let scan = if img_dir.is_dir() { img_dir } else { dir.to_path_buf() };
    let mut frames: Vec<PathBuf> = std::fs::read_dir(&scan)
        .map_err(|e| Error::io(&scan, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()),
                Some(ref e) if e == "png" || e == "jpg" || e == "jpeg"
            )
        })
        .collect();
    frames.sort_by_key(|p| {
        natural_key(p.file_name().and_then(|n| n.to_str()).unwrap_or_default())
    });
    if frames.is_empty() {
        return Err(Error::EmptySequence(dir.to_path_buf()));
    }
    Ok(frames)
}

/// Parse one ground-truth line: `x,y,w,h` in top-left convention, comma,
/// tab, or whitespace separated; `NaN` entries or an empty line mark an
/// absent annotation.
fn parse_gt_line(line: &str, line_no: usize) -> Result<Option<BBox>> {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return Ok(None);
    }
    let fields: Vec<&str> = trimmed
        .split(|c: char| c == ',' || c == '\t' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    if fields.len() != 4 {
        return Err(Error::GroundTruthParse {
            line: line_no,
            message: format!("expected 4 fields, found {}", fields.len()),
        });
    }
    let mut vals = [0.0f64; 4];
    for (v, f) in vals.iter_mut().zip(&fields) {
        *v = f.parse().map_err(|_| Error::GroundTruthParse {
            line: line_no,
            message: format!("unparseable value {f:?}"),
        })?;
    }
    if vals.iter().any(|v| v.is_nan()) {
        return Ok(None);
    }
    let b = BBox::from_top_left(vals[0], vals[1], vals[2], vals[3]).map_err(|e| {
        Error::GroundTruthParse {
            line: line_no,
            message: e.to_string(),
        }
    })?;
    Ok(Some(b))
}

/// Load a sequence directory (frames either flat or under `img/`) with
/// its ground-truth file; an optional `attributes.txt` next to the
/// frames carries the attribute tags.
pub fn load_sequence(dir: &Path, gt_path: &Path) -> Result<Sequence> {
    let frames = list_frames(dir)?;
    let text = std::fs::read_to_string(gt_path).map_err(|e| Error::io(gt_path, e))?;
    let mut ground_truth = Vec::new();
    for (i, line) in text.lines().enumerate() {
        ground_truth.push(parse_gt_line(line, i + 1)?);
    }
    // A trailing newline is common; ignore a single trailing empty entry.
    while ground_truth.len() > frames.len() && ground_truth.last() == Some(&None) {
        ground_truth.pop();
    }
    if ground_truth.len() != frames.len() {
        return Err(Error::GroundTruthCount {
            frames: frames.len(),
            entries: ground_truth.len(),
        });
    }
    let attributes = std::fs::read_to_string(dir.join("attributes.txt"))
        .map(|s| {
            s.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.trim().to_ascii_uppercase())
                .collect()
        })
        .unwrap_or_default();
    let name = dir
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("sequence")
        .to_string();
    Ok(Sequence {
        name,
        frames,
        ground_truth,
        attributes,
    })
}

/// Run a tracker over a sequence. Frame decoding is excluded from the
/// per-frame timings.
pub fn track_sequence(seq: &Sequence, params: TrackerParams) -> Result<TrackResult> {
    let init_box = seq.ground_truth.first().cloned().flatten().ok_or_else(|| {
        Error::GroundTruthParse {
            line: 1,
            message: "first frame needs a ground-truth box".into(),
        }
    })?;
    let mut boxes = Vec::with_capacity(seq.frames.len());
    let mut secs = Vec::with_capacity(seq.frames.len());
    let mut flat_frames = 0usize;

    let first = Image::load(&seq.frames[0])?;
    let start = Instant::now();
    let mut tracker = Tracker::init(&first, &init_box, params)?;
    secs.push(start.elapsed().as_secs_f64());
    boxes.push(tracker.bbox());

    for path in &seq.frames[1..] {
        let frame = Image::load(path)?;
        let start = Instant::now();
        let out = tracker.step(&frame)?;
        secs.push(start.elapsed().as_secs_f64());
        boxes.push(out.bbox);
        flat_frames += out.flat_response as usize;
    }
    Ok(TrackResult {
        boxes,
        secs,
        flat_frames,
    })
}

/// Per-sequence curves from predictions and ground truth.
pub fn sequence_metrics(seq: &Sequence, result: &TrackResult) -> Result<SequenceMetrics> {
    if result.boxes.len() != seq.frames.len() {
        return Err(Error::DimensionMismatch {
            context: "sequence_metrics",
            expected: format!("{} predictions", seq.frames.len()),
            got: format!("{}", result.boxes.len()),
        });
    }
    let mut cles = Vec::with_capacity(seq.frames.len());
    let mut ious = Vec::with_capacity(seq.frames.len());
    for (pred, gt) in result.boxes.iter().zip(&seq.ground_truth) {
        match gt {
            Some(gt) => {
                cles.push(Some(cle(pred, gt)));
                ious.push(Some(iou(pred, gt)));
            }
            None => {
                cles.push(None);
                ious.push(None);
            }
        }
    }
    let scored: Vec<(f64, f64)> = cles
        .iter()
        .zip(&ious)
        .filter_map(|(c, i)| c.zip(*i))
        .collect();
    if scored.is_empty() {
        return Err(Error::EmptyInput("sequence without ground truth"));
    }
    let n = scored.len() as f64;
    let precision: Vec<f64> = (0..CURVE_POINTS)
        .map(|t| scored.iter().filter(|(c, _)| *c <= t as f64).count() as f64 / n)
        .collect();
    let success: Vec<f64> = (0..CURVE_POINTS)
        .map(|j| {
            let theta = j as f64 * 0.02;
            let hit = |o: f64| if j == 0 { o > 0.0 } else { o >= theta };
            scored.iter().filter(|(_, o)| hit(*o)).count() as f64 / n
        })
        .collect();
    let total_secs: f64 = result.secs.iter().sum();
    let fps = if total_secs > 0.0 {
        result.secs.len() as f64 / total_secs
    } else {
        0.0
    };
    Ok(SequenceMetrics {
        name: seq.name.clone(),
        attributes: seq.attributes.clone(),
        dp20: precision[DP_THRESHOLD_PX],
        auc: success.iter().sum::<f64>() / CURVE_POINTS as f64,
        precision,
        success,
        fps,
        frames: result.secs.len(),
        cle: cles,
        iou: ious,
    })
}

/// Average per-sequence curves with equal weight; FPS is total frames
/// over total tracking time.
pub fn report(items: &[SequenceMetrics]) -> Result<MetricReport> {
    if items.is_empty() {
        return Err(Error::EmptyInput("no sequences to report"));
    }
    let n = items.len() as f64;
    let mut precision = vec![0.0; CURVE_POINTS];
    let mut success = vec![0.0; CURVE_POINTS];
    let mut frames = 0usize;
    let mut total_secs = 0.0;
    for m in items {
        for (acc, v) in precision.iter_mut().zip(&m.precision) {
            *acc += v / n;
        }
        for (acc, v) in success.iter_mut().zip(&m.success) {
            *acc += v / n;
        }
        frames += m.frames;
        if m.fps > 0.0 {
            total_secs += m.frames as f64 / m.fps;
        }
    }
    Ok(MetricReport {
        dp20: precision[DP_THRESHOLD_PX],
        auc: success.iter().sum::<f64>() / CURVE_POINTS as f64,
        precision,
        success,
        fps: if total_secs > 0.0 {
            frames as f64 / total_secs
        } else {
            0.0
        },
        frames,
        sequences: items.len(),
    })
}

/// Reports per attribute tag (sequences carrying that tag only).
pub fn report_by_attribute(items: &[SequenceMetrics]) -> BTreeMap<String, MetricReport> {
    let mut out = BTreeMap::new();
    for attr in ATTRIBUTES {
        let subset: Vec<SequenceMetrics> = items
            .iter()
            .filter(|m| m.attributes.iter().any(|a| a == attr))
            .cloned()
            .collect();
        if let Ok(r) = report(&subset) {
            out.insert(attr.to_string(), r);
        }
    }
    out
}

/// Write the per-frame result CSV: frame index, top-left box, tracking
/// seconds, and per-frame errors where ground truth exists.
pub fn write_result_csv(path: &Path, result: &TrackResult, metrics: &SequenceMetrics) -> Result<()> {
    let mut out = String::from("frame,x,y,w,h,secs,cle,iou\n");
    for (i, b) in result.boxes.iter().enumerate() {
        let (x, y) = b.top_left();
        let cle = metrics.cle[i].map(|v| format!("{v:.4}")).unwrap_or_default();
        let iou = metrics.iou[i].map(|v| format!("{v:.6}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{:.3},{:.3},{:.3},{:.3},{:.6},{},{}\n",
            i + 1,
            x,
            y,
            b.w,
            b.h,
            result.secs[i],
            cle,
            iou
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read a result CSV back (own output or an external tracker's results
/// in the same schema). Only the box columns are required; a `secs`
/// column is used for FPS when present.
pub fn read_result_csv(path: &Path) -> Result<TrackResult> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut boxes = Vec::new();
    let mut secs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || (i == 0 && trimmed.starts_with("frame")) {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() < 5 {
            return Err(Error::GroundTruthParse {
                line: i + 1,
                message: format!("expected at least 5 columns, found {}", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim().parse().map_err(|_| Error::GroundTruthParse {
                line: i + 1,
                message: format!("unparseable value {s:?}"),
            })
        };
        let (x, y, w, h) = (
            parse(fields[1])?,
            parse(fields[2])?,
            parse(fields[3])?,
            parse(fields[4])?,
        );
        boxes.push(BBox::from_top_left(x, y, w, h).map_err(|e| Error::GroundTruthParse {
            line: i + 1,
            message: e.to_string(),
        })?);
        secs.push(if fields.len() > 5 { parse(fields[5]).unwrap_or(0.0) } else { 0.0 });
    }
    if boxes.is_empty() {
        return Err(Error::EmptyInput("result csv has no rows"));
    }
    Ok(TrackResult {
        boxes,
        secs,
        flat_frames: 0,
    })
}

/// Write both metric curves as CSV for external plotting.
pub fn write_curves_csv(path: &Path, report: &MetricReport) -> Result<()> {
    let mut out = String::from("cle_threshold_px,precision,iou_threshold,success\n");
    for j in 0..CURVE_POINTS {
        out.push_str(&format!(
            "{},{:.6},{:.2},{:.6}\n",
            j,
            report.precision[j],
            j as f64 * 0.02,
            report.success[j]
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
