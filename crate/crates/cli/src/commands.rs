use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use echobeat_core::beats::{detect_beats, MeasurementSeries};
use echobeat_core::decode::decode_video_from;
use echobeat_core::eval::{bootstrap_ci, precision_recall, r_squared, roc_auc, RSquaredMode, Statistic};
use echobeat_core::formats::{
    frames_from_jsonl, frames_to_jsonl, AnnotationDoc, BeatsDoc, EvalReport, GradCheckReport, LossReport,
    RocReport, StudyReport, SCHEMA_VERSION,
};
use echobeat_core::geometry::{Calibration, Channel, Point2};
use echobeat_core::heatmap::{Extent, FrameView, HeatmapStack, NUM_CHANNELS};
use echobeat_core::labels::{augmented_loss, grad_check, rasterize, rasterize_stream, weighted_mse, JitterConfig};
use echobeat_core::phantom::{generate_trajectory, render_heatmaps};
use echobeat_core::study::{beat_spread, summarize};
use echobeat_core::tensor_file;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::io::{self, CalibrationDoc, IdValue};

pub fn parse_extent(s: &str) -> Result<Extent, String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HxW, got {s:?}"))?;
    let h: usize = h.trim().parse().map_err(|e| format!("height: {e}"))?;
    let w: usize = w.trim().parse().map_err(|e| format!("width: {e}"))?;
    Extent::new(h, w).map_err(|e| e.to_string())
}

fn id_rows(video_id: &str, values: [f64; 4]) -> Vec<(String, f64)> {
    ["ivsd", "lvidd", "lvpwd", "lvids"]
        .iter()
        .zip(values)
        .map(|(name, v)| (format!("{video_id}:{name}"), v))
        .collect()
}

fn csv_bytes(header: &str, rows: &[(String, f64)]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(["id", header])?;
    for (id, v) in rows {
        w.serialize(IdValue { id, pred: *v })?;
    }
    w.into_inner()
        .map_err(|e| CliError::data("IO", e.to_string(), json!({})))
}

pub fn synth(cfg: &PipelineConfig, video_id: &str, out: Option<&Path>) -> Result<(), CliError> {
    let traj = generate_trajectory(&cfg.phantom)?;
    let stack = render_heatmaps(&traj, &cfg.mock, cfg.extent)?;
    log::info!("synth: {} frames of {:?}", stack.frames(), cfg.extent);
    let tensor = tensor_file::encode(&stack.dims(), stack.data())?;
    let Some(dir) = out else {
        return io::write_output(None, &tensor);
    };
    let dir = io::output_dir(Some(dir), "synth")?;
    io::write_output(Some(&dir.join("heatmaps.eht")), &tensor)?;
    io::write_json(
        Some(&dir.join("annotations.json")),
        &AnnotationDoc::from_trajectory(video_id, &traj),
    )?;
    io::write_json(
        Some(&dir.join("calibration.json")),
        &CalibrationDoc::from(traj.calibration),
    )?;
    let d = cfg.phantom.truth_at_phase(0.0);
    let s = cfg.phantom.truth_at_phase(0.5);
    let truth = csv_bytes("ref", &id_rows(video_id, [d.ivs, d.lvid, d.lvpw, s.lvid]))?;
    io::write_output(Some(&dir.join("truth.csv")), &truth)
}

pub fn rasterize_annotations(cfg: &PipelineConfig, doc: &AnnotationDoc) -> Result<Vec<f32>, CliError> {
    let mut data = Vec::with_capacity(doc.frames.len() * NUM_CHANNELS * cfg.extent.pixels());
    for f in &doc.frames {
        let points = f.ordered_points()?;
        let label = rasterize_stream(&points, cfg.extent, &cfg.jitter, f.frame_index as u64)?;
        data.extend_from_slice(label.data());
    }
    Ok(data)
}

pub fn rasterize_cmd(cfg: &PipelineConfig, annotations: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let doc: AnnotationDoc = io::read_json(annotations)?;
    doc.validate()?;
    let data = rasterize_annotations(cfg, &doc)?;
    let dims = [doc.frames.len(), NUM_CHANNELS, cfg.extent.height, cfg.extent.width];
    io::write_output(out, &tensor_file::encode(&dims, &data)?)
}

fn decode_one(cfg: &PipelineConfig, path: &Path, cal: &Calibration, first_index: usize) -> Result<String, CliError> {
    let stack = io::read_tensor(path)?
        .into_heatmaps()
        .map_err(|e| CliError::from(e).with_context("path", path.display().to_string()))?;
    let records = decode_video_from(&stack, first_index, &cfg.decode, cal)?;
    let kept = records.iter().filter(|r| r.quality.kept).count();
    log::info!("decode {}: {kept}/{} frames kept", path.display(), records.len());
    Ok(frames_to_jsonl(&records))
}

pub fn decode(
    cfg: &PipelineConfig,
    inputs: &[PathBuf],
    cal: &Calibration,
    first_index: usize,
    out: Option<&Path>,
) -> Result<(), CliError> {
    cfg.decode.validate()?;
    if let [single] = inputs {
        let text = decode_one(cfg, single, cal, first_index)?;
        return io::write_output(out, text.as_bytes());
    }

    let dir = io::output_dir(out, "decoding several inputs")?;
    let mut stems = BTreeSet::new();
    let mut targets = Vec::with_capacity(inputs.len());
    for path in inputs {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .filter(|_| path != Path::new("-"))
            .ok_or_else(|| CliError::usage(format!("cannot name output for {}", path.display())))?;
        if !stems.insert(stem.to_string()) {
            return Err(CliError::usage(format!("two inputs share the name {stem:?}")));
        }
        targets.push(dir.join(format!("{stem}.frames.jsonl")));
    }
    inputs
        .par_iter()
        .zip(&targets)
        .map(|(path, target)| {
            let text = decode_one(cfg, path, cal, first_index)?;
            io::write_output(Some(target), text.as_bytes())
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

pub fn beats(cfg: &PipelineConfig, frames: &Path, fps: f64, out: Option<&Path>) -> Result<(), CliError> {
    let records = frames_from_jsonl(&io::read_text(frames)?)
        .map_err(|e| CliError::from(e).with_context("path", frames.display().to_string()))?;
    let series = MeasurementSeries::from_records(&records, fps)?;
    let beats = detect_beats(&series, &cfg.beats)?;
    log::info!("beats: {} found in {} frames", beats.len(), records.len());
    let doc = BeatsDoc {
        schema_version: SCHEMA_VERSION,
        fps,
        n_frames: records.len(),
        n_kept: records.iter().filter(|r| r.quality.kept).count(),
        beats,
    };
    io::write_json(out, &doc)
}

pub fn report(
    cfg: &PipelineConfig,
    beats: &Path,
    video_id: &str,
    csv: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let doc: BeatsDoc = io::read_json(beats)?;
    doc.validate()?;
    let summary = summarize(&doc.beats, &cfg.study)?;
    let spread = (doc.beats.len() >= 2)
        .then(|| beat_spread(&doc.beats))
        .transpose()?;
    if let Some(path) = csv {
        let agg = cfg.study.aggregate;
        let values = [&summary.ivsd, &summary.lvidd, &summary.lvpwd, &summary.lvids].map(|s| s.center(agg));
        io::write_output(Some(path), &csv_bytes("pred", &id_rows(video_id, values))?)?;
    }
    let report = StudyReport {
        schema_version: SCHEMA_VERSION,
        video_id: Some(video_id.to_string()),
        summary,
        spread,
    };
    io::write_json(out, &report)
}

pub fn evaluate(
    cfg: &PipelineConfig,
    pred: &Path,
    reference: Option<&Path>,
    statistic: Statistic,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let sample = io::paired_sample(pred, reference)?;
    let ci = bootstrap_ci(&sample, statistic, &cfg.bootstrap)?;
    let r2_cod = match statistic {
        Statistic::R2 => Some(r_squared(&sample, RSquaredMode::Cod)?),
        _ => None,
    };
    let report = EvalReport {
        schema_version: SCHEMA_VERSION,
        statistic,
        point: ci.point,
        ci_lo: ci.lo,
        ci_hi: ci.hi,
        n: sample.len(),
        skipped_resamples: ci.skipped,
        r2_cod,
        config: cfg.bootstrap,
    };
    io::write_json(out, &report)
}

pub fn roc(scores: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let data = io::scored_labels(scores)?;
    let roc = roc_auc(&data);
    let pr = precision_recall(&data);
    let report = RocReport {
        schema_version: SCHEMA_VERSION,
        n: data.scores().len(),
        positives: data.positives(),
        auc: roc.auc,
        roc: roc.points,
        average_precision: pr.average_precision,
        pr: pr.points,
    };
    io::write_json(out, &report)
}

pub struct LossCheckOptions {
    pub cm_per_pixel: f64,
    pub grad_check: bool,
    pub step: f64,
    pub tolerance: f64,
    pub extent: Extent,
    pub seed: u64,
}

fn loss_tensor(path: &Path) -> Result<HeatmapStack, CliError> {
    let t = io::read_tensor(path)?;
    let mut dims = t.dims.clone();
    if dims.len() == 3 {
        dims.insert(0, 1);
    }
    HeatmapStack::from_dims(&dims, t.data)
        .map_err(|e| CliError::from(e).with_context("path", path.display().to_string()))
}

/// Uniform predictions and one-hot labels at uniformly drawn points.
fn random_pair(extent: Extent, seed: u64) -> Result<(HeatmapStack, HeatmapStack), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pred: Vec<f32> = (0..NUM_CHANNELS * extent.pixels()).map(|_| rng.random()).collect();
    let points: [Point2; 4] = std::array::from_fn(|_| {
        Point2::new(
            rng.random_range(0.0..(extent.width - 1) as f64),
            rng.random_range(0.0..(extent.height - 1) as f64),
        )
    });
    let label = rasterize(&points, extent, &JitterConfig::none())?;
    Ok((
        HeatmapStack::new(1, extent, pred)?,
        HeatmapStack::new(1, extent, label.into_data())?,
    ))
}

/// Brightest pixel of each label channel.
fn label_points(label: FrameView<'_>) -> Result<[Point2; 4], CliError> {
    let mut out = [Point2::default(); 4];
    for (slot, channel) in out.iter_mut().zip(Channel::ALL) {
        let plane = label.channel(channel.index());
        let (i, &v) = plane
            .iter()
            .enumerate()
            .fold((0, &f32::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        if v <= 0.0 {
            return Err(echobeat_core::Error::EmptyChannel(channel).into());
        }
        *slot = Point2::new((i % label.width) as f64, (i / label.width) as f64);
    }
    Ok(out)
}

pub fn losscheck(
    cfg: &PipelineConfig,
    inputs: Option<(PathBuf, PathBuf)>,
    opts: &LossCheckOptions,
    out: Option<&Path>,
) -> Result<(), CliError> {
    cfg.loss.validate()?;
    let (pred, label) = match inputs {
        Some((p, l)) => (loss_tensor(&p)?, loss_tensor(&l)?),
        None => random_pair(opts.extent, opts.seed)?,
    };
    if pred.dims() != label.dims() {
        return Err(echobeat_core::Error::ShapeMismatch {
            expected: pred.dims().to_vec(),
            actual: label.dims().to_vec(),
        }
        .into());
    }
    if pred.frames() == 0 {
        return Err(CliError::data("SHAPE_MISMATCH", "tensors have no frames", json!({})));
    }
    let cal = Calibration::new(opts.cm_per_pixel, 1.0)?;

    let n = pred.frames() as f64;
    let (mut wmse, mut total) = (0.0, 0.0);
    let mut check: Option<echobeat_core::labels::GradCheck> = None;
    for f in 0..pred.frames() {
        let (p, y) = (pred.frame(f), label.frame(f));
        wmse += weighted_mse(p, y, cfg.loss.alpha)? / n;
        let truth = label_points(y)?;
        total += augmented_loss(p, y, &truth, &cal, &cfg.loss)?.total / n;
        if opts.grad_check {
            let p64: Vec<f64> = p.data.iter().map(|&v| v as f64).collect();
            let y64: Vec<f64> = y.data.iter().map(|&v| v as f64).collect();
            let [c, h, w] = p.shape();
            let g = grad_check(
                FrameView::new(c, h, w, &p64)?,
                FrameView::new(c, h, w, &y64)?,
                cfg.loss.alpha,
                opts.step,
            )?;
            check = Some(match check {
                None => g,
                Some(prev) => echobeat_core::labels::GradCheck {
                    max_rel_error: prev.max_rel_error.max(g.max_rel_error),
                    n_checked: prev.n_checked + g.n_checked,
                    step: g.step,
                },
            });
        }
    }

    let grad_check = check.map(|c| GradCheckReport {
        check: c,
        tolerance: opts.tolerance,
        passed: c.max_rel_error < opts.tolerance,
    });
    let report = LossReport {
        schema_version: SCHEMA_VERSION,
        alpha: cfg.loss.alpha,
        lambda_aux: cfg.loss.lambda_aux,
        frames: pred.frames(),
        weighted_mse: wmse,
        augmented: Some(total),
        grad_check,
    };
    io::write_json(out, &report)?;
    match grad_check {
        Some(g) if !g.passed => Err(CliError::data(
            "GRAD_CHECK_FAILED",
            format!(
                "max relative error {:e} exceeds {:e}",
                g.check.max_rel_error, g.tolerance
            ),
            json!({ "n_checked": g.check.n_checked }),
        )),
        _ => Ok(()),
    }
}
