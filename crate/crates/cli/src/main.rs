//! Command-line front end: enhance single images, track sequences, run
//! the benchmark harness, and re-score existing result files.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 data error (missing or
//! malformed inputs), 3 numeric failure.

mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use darktrack::bench::{
    self, load_sequence, report, report_by_attribute, track_sequence, MetricReport,
    SequenceMetrics,
};
use darktrack::enhance::{build_mask, pretreat};
use darktrack::imgproc::{save_plane_png, BBox, Image};
use darktrack::track::{Tracker, TrackerParams, Variant};

use config::Config;

#[derive(Parser)]
#[command(name = "darktrack", version, about = "Correlation-filter tracking for low-light sequences")]
struct Cli {
    /// Flat key=value config file; defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one config key (repeatable), e.g. --set mu=0.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enhance one image and write the enhanced image, the target mask,
    /// and an illumination statistics JSON.
    Enhance {
        /// Input PNG/JPEG image.
        input: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "enhance-out")]
        out: PathBuf,
        /// Mask statistics box as "cx,cy,w,h" (default: centered box of
        /// half the image dimensions).
        #[arg(long = "box")]
        target_box: Option<String>,
    },
    /// Track one sequence directory and write the per-frame result CSV
    /// plus a summary JSON.
    Track {
        /// Sequence directory (frames flat or under img/).
        sequence: PathBuf,
        /// Ground-truth file (default: groundtruth*.txt inside the
        /// sequence directory).
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long, default_value = "track-out")]
        out: PathBuf,
        /// Pipeline variant: full | ew | e | bacf_e | bacf.
        #[arg(long, default_value = "full")]
        variant: String,
        /// Ablation switch; "no-enhance" disables the pretreatment.
        #[arg(long)]
        ablate: Option<String>,
        /// Dump per-frame response maps and masks under out/debug/.
        #[arg(long)]
        debug_dumps: bool,
    },
    /// Track every sequence of a dataset directory and write metric
    /// reports.
    Bench {
        /// Dataset directory: one subdirectory per sequence.
        dataset: PathBuf,
        #[arg(long, default_value = "bench-out")]
        out: PathBuf,
        /// Worker threads for sequence-level parallelism.
        #[arg(long)]
        jobs: Option<usize>,
        /// Score only sequences tagged with this attribute (IV, OCC, LR,
        /// FM, VC).
        #[arg(long)]
        attr: Option<String>,
        /// Pipeline variant: full | ew | e | bacf_e | bacf.
        #[arg(long, default_value = "full")]
        variant: String,
        /// Ablation switch; "no-enhance" disables the pretreatment.
        #[arg(long)]
        ablate: Option<String>,
    },
    /// Re-score existing result CSVs (ours or an external tracker's in
    /// the same schema) against a dataset's ground truth.
    Score {
        /// Dataset directory: one subdirectory per sequence.
        dataset: PathBuf,
        /// Directory of <sequence>.csv result files.
        results: PathBuf,
        #[arg(long, default_value = "score-out")]
        out: PathBuf,
        #[arg(long)]
        attr: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version print to stdout and exit cleanly.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// Map error causes onto the documented exit codes.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    use darktrack::Error as E;
    if let Some(core) = err.downcast_ref::<E>() {
        return match core {
            E::InvalidConfig(_) => 1,
            E::DimensionMismatch { .. } | E::NonFinite(_) => 3,
            _ => 2,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return 2;
    }
    // Config/flag problems surface as plain anyhow messages.
    1
}

fn run(cli: Cli) -> Result<()> {
    let cfg = Config::load(cli.config.as_deref(), &cli.set)?;
    match cli.cmd {
        Cmd::Enhance {
            input,
            out,
            target_box,
        } => cmd_enhance(&cfg, &input, &out, target_box.as_deref()),
        Cmd::Track {
            sequence,
            gt,
            out,
            variant,
            ablate,
            debug_dumps,
        } => {
            let params = build_params(&cfg, &variant, ablate.as_deref(), debug_dumps)?;
            cmd_track(&cfg, params, &variant, &sequence, gt.as_deref(), &out, debug_dumps)
        }
        Cmd::Bench {
            dataset,
            out,
            jobs,
            attr,
            variant,
            ablate,
        } => {
            let params = build_params(&cfg, &variant, ablate.as_deref(), false)?;
            cmd_bench(&cfg, params, &variant, &dataset, &out, jobs, attr.as_deref())
        }
        Cmd::Score {
            dataset,
            results,
            out,
            attr,
        } => cmd_score(&cfg, &dataset, &results, &out, attr.as_deref()),
    }
}

fn build_params(
    cfg: &Config,
    variant: &str,
    ablate: Option<&str>,
    debug: bool,
) -> Result<TrackerParams> {
    let variant = Variant::parse(variant)
        .ok_or_else(|| anyhow::anyhow!("unknown variant {variant:?} (full|ew|e|bacf_e|bacf)"))?;
    let mut params = cfg.tracker_params()?;
    variant.apply(&mut params);
    match ablate {
        None => {}
        Some("no-enhance") => params.enhance_enabled = false,
        Some("no-mask") => params.mask_enabled = false,
        Some("no-dual") => params.dual_enabled = false,
        Some(other) => bail!("unknown ablation {other:?} (no-enhance|no-mask|no-dual)"),
    }
    params.keep_debug = debug;
    Ok(params)
}

fn parse_box(s: &str) -> Result<BBox> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("invalid --box {s:?}, expected cx,cy,w,h"))?;
    if vals.len() != 4 {
        bail!("invalid --box {s:?}, expected 4 values");
    }
    Ok(BBox::new(vals[0], vals[1], vals[2], vals[3])?)
}

fn cmd_enhance(cfg: &Config, input: &Path, out: &Path, target_box: Option<&str>) -> Result<()> {
    let image = Image::load(input)?;
    let enhancer = darktrack::enhance::EnhancerConfig {
        alpha: [cfg.alpha_r, cfg.alpha_g, cfg.alpha_b],
        delta: cfg.delta,
    };
    let pre = pretreat(&image, &enhancer)?;
    let bbox = match target_box {
        Some(s) => parse_box(s)?,
        None => BBox::new(
            image.width as f64 / 2.0,
            image.height as f64 / 2.0,
            (image.width as f64 / 2.0).max(1.0),
            (image.height as f64 / 2.0).max(1.0),
        )?,
    };
    let mask = build_mask(&pre.theta, &bbox)?;

    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    pre.enhanced.save_png(&out.join("enhanced.png"))?;
    save_plane_png(&mask.mask, &out.join("mask.png"))?;
    let stats = json!({
        "log_average_luminance": pre.stats.log_avg,
        "max_illumination": pre.stats.l_max,
        "mask_mu": mask.mu,
        "mask_sigma": mask.sigma,
        "config": cfg.echo(),
    });
    std::fs::write(out.join("stats.json"), serde_json::to_string_pretty(&stats)?)?;
    println!(
        "enhanced {} -> {} (log-avg {:.6}, max {:.6})",
        input.display(),
        out.display(),
        pre.stats.log_avg,
        pre.stats.l_max
    );
    Ok(())
}

/// Locate the ground-truth file of a sequence directory.
fn find_gt(dir: &Path) -> Result<PathBuf> {
    let mut candidates = vec![
        dir.join("groundtruth_rect.txt"),
        dir.join("groundtruth.txt"),
        dir.join("gt.txt"),
    ];
    if let Some(name) = dir.file_name().and_then(|n| n.to_str()) {
        candidates.push(dir.join(format!("{name}.txt")));
    }
    candidates.into_iter().find(|p| p.is_file()).ok_or_else(|| {
        anyhow::Error::new(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no ground-truth file found in {}", dir.display()),
        ))
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_track(
    cfg: &Config,
    params: TrackerParams,
    variant: &str,
    sequence: &Path,
    gt: Option<&Path>,
    out: &Path,
    debug_dumps: bool,
) -> Result<()> {
    let gt_path = match gt {
        Some(p) => p.to_path_buf(),
        None => find_gt(sequence)?,
    };
    let seq = load_sequence(sequence, &gt_path)?;
    std::fs::create_dir_all(out)?;

    let result = if debug_dumps {
        track_with_dumps(&seq, params, &out.join("debug"))?
    } else {
        track_sequence(&seq, params)?
    };
    let metrics = bench::sequence_metrics(&seq, &result)?;
    bench::write_result_csv(&out.join(format!("{}.csv", seq.name)), &result, &metrics)?;
    let summary = json!({
        "sequence": seq.name,
        "variant": variant,
        "frames": metrics.frames,
        "dp20": metrics.dp20,
        "auc": metrics.auc,
        "fps": metrics.fps,
        "flat_frames": result.flat_frames,
        "config": cfg.echo(),
    });
    std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    println!(
        "{}: {} frames, DP@20 {:.3}, AUC {:.3}, {:.1} FPS",
        seq.name, metrics.frames, metrics.dp20, metrics.auc, metrics.fps
    );
    Ok(())
}

/// Tracking loop that mirrors `track_sequence` but dumps the response
/// map and mask of every frame.
fn track_with_dumps(
    seq: &bench::Sequence,
    params: TrackerParams,
    debug_dir: &Path,
) -> Result<bench::TrackResult> {
    std::fs::create_dir_all(debug_dir)?;
    let init_box = seq.ground_truth[0]
        .ok_or_else(|| anyhow::anyhow!("first frame needs a ground-truth box"))?;
    let first = Image::load(&seq.frames[0])?;
    let start = std::time::Instant::now();
    let mut tracker = Tracker::init(&first, &init_box, params)?;
    let mut secs = vec![start.elapsed().as_secs_f64()];
    let mut boxes = vec![tracker.bbox()];
    let mut flat_frames = 0;
    dump_debug(&tracker, debug_dir, 1)?;
    for (i, path) in seq.frames.iter().enumerate().skip(1) {
        let frame = Image::load(path)?;
        let start = std::time::Instant::now();
        let outcome = tracker.step(&frame)?;
        secs.push(start.elapsed().as_secs_f64());
        boxes.push(outcome.bbox);
        flat_frames += outcome.flat_response as usize;
        dump_debug(&tracker, debug_dir, i + 1)?;
    }
    Ok(bench::TrackResult {
        boxes,
        secs,
        flat_frames,
    })
}

fn dump_debug(tracker: &Tracker, dir: &Path, frame: usize) -> Result<()> {
    if let Some(resp) = tracker.last_response() {
        let (lo, hi) = (resp.min_value(), resp.max_value());
        let mut normalized = resp.clone();
        if hi > lo {
            for v in normalized.data.iter_mut() {
                *v = (*v - lo) / (hi - lo);
            }
        }
        save_plane_png(&normalized, &dir.join(format!("response_{frame:05}.png")))?;
    }
    if let Some(mask) = tracker.last_mask() {
        save_plane_png(mask, &dir.join(format!("mask_{frame:05}.png")))?;
    }
    Ok(())
}

/// Dataset scan: every subdirectory with frames and a ground-truth file.
fn dataset_sequences(dataset: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(dataset)
        .with_context(|| format!("reading dataset {}", dataset.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    let mut out = Vec::new();
    for dir in dirs {
        if let Ok(gt) = find_gt(&dir) {
            out.push((dir, gt));
        }
    }
    if out.is_empty() {
        bail!(
            "no sequences found under {} (need subdirectories with frames and groundtruth)",
            dataset.display()
        );
    }
    Ok(out)
}

fn write_reports(
    out: &Path,
    cfg: &Config,
    variant: Option<&str>,
    all: &[SequenceMetrics],
    overall: &MetricReport,
) -> Result<()> {
    let by_attr: BTreeMap<String, serde_json::Value> = report_by_attribute(all)
        .into_iter()
        .map(|(k, r)| {
            (
                k,
                json!({"dp20": r.dp20, "auc": r.auc, "sequences": r.sequences}),
            )
        })
        .collect();
    let summary = json!({
        "variant": variant,
        "sequences": all
            .iter()
            .map(|m| {
                json!({
                    "name": m.name,
                    "frames": m.frames,
                    "dp20": m.dp20,
                    "auc": m.auc,
                    "fps": m.fps,
                    "attributes": m.attributes,
                })
            })
            .collect::<Vec<_>>(),
        "dp20": overall.dp20,
        "auc": overall.auc,
        "fps": overall.fps,
        "frames": overall.frames,
        "per_attribute": by_attr,
        "config": cfg.echo(),
    });
    std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    bench::write_curves_csv(&out.join("curves.csv"), overall)?;
    Ok(())
}

fn cmd_bench(
    cfg: &Config,
    params: TrackerParams,
    variant: &str,
    dataset: &Path,
    out: &Path,
    jobs: Option<usize>,
    attr: Option<&str>,
) -> Result<()> {
    let entries = dataset_sequences(dataset)?;
    std::fs::create_dir_all(out)?;
    let results_dir = out.join("results");
    std::fs::create_dir_all(&results_dir)?;

    let run = || -> Result<Vec<SequenceMetrics>> {
        entries
            .par_iter()
            .map(|(dir, gt)| -> Result<Option<SequenceMetrics>> {
                let seq = load_sequence(dir, gt)?;
                if let Some(attr) = attr {
                    let attr = attr.to_ascii_uppercase();
                    if !seq.attributes.iter().any(|a| *a == attr) {
                        return Ok(None);
                    }
                }
                let result = track_sequence(&seq, params.clone())?;
                let metrics = bench::sequence_metrics(&seq, &result)?;
                bench::write_result_csv(
                    &results_dir.join(format!("{}.csv", seq.name)),
                    &result,
                    &metrics,
                )?;
                println!(
                    "{}: DP@20 {:.3}, AUC {:.3}, {:.1} FPS",
                    seq.name, metrics.dp20, metrics.auc, metrics.fps
                );
                Ok(Some(metrics))
            })
            .collect::<Result<Vec<_>>>()
            .map(|v| v.into_iter().flatten().collect())
    };
    let all = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .context("building worker pool")?
            .install(run),
        None => run(),
    }?;
    if all.is_empty() {
        bail!("no sequences matched the requested filter");
    }
    let overall = report(&all)?;
    write_reports(out, cfg, Some(variant), &all, &overall)?;
    println!(
        "overall: {} sequences, DP@20 {:.3}, AUC {:.3}, {:.1} FPS",
        overall.sequences, overall.dp20, overall.auc, overall.fps
    );
    Ok(())
}

fn cmd_score(
    cfg: &Config,
    dataset: &Path,
    results: &Path,
    out: &Path,
    attr: Option<&str>,
) -> Result<()> {
    let entries = dataset_sequences(dataset)?;
    std::fs::create_dir_all(out)?;
    let mut all = Vec::new();
    for (dir, gt) in entries {
        let seq = load_sequence(&dir, &gt)?;
        if let Some(attr) = attr {
            let attr = attr.to_ascii_uppercase();
            if !seq.attributes.iter().any(|a| *a == attr) {
                continue;
            }
        }
        let csv = results.join(format!("{}.csv", seq.name));
        if !csv.is_file() {
            eprintln!("skipping {}: no {}", seq.name, csv.display());
            continue;
        }
        let result = bench::read_result_csv(&csv)?;
        if result.boxes.len() != seq.frames.len() {
            bail!(
                "{}: result has {} rows but sequence has {} frames",
                seq.name,
                result.boxes.len(),
                seq.frames.len()
            );
        }
        let metrics = bench::sequence_metrics(&seq, &result)?;
        println!("{}: DP@20 {:.3}, AUC {:.3}", metrics.name, metrics.dp20, metrics.auc);
        all.push(metrics);
    }
    if all.is_empty() {
        bail!("no result files matched the dataset");
    }
    let overall = report(&all)?;
    write_reports(out, cfg, None, &all, &overall)?;
    println!(
        "overall: {} sequences, DP@20 {:.3}, AUC {:.3}",
        overall.sequences, overall.dp20, overall.auc
    );
    Ok(())
}
