//! `echobeat`: heatmaps in, wall measurements and agreement statistics out.
//!
//! ```text
//! echobeat synth --out run/
//! echobeat decode --heatmaps run/heatmaps.eht --calibration run/calibration.json --out run/frames.jsonl
//! echobeat beats --frames run/frames.jsonl --calibration run/calibration.json --out run/beats.json
//! echobeat report --beats run/beats.json --csv run/pred.csv --out run/study.json
//! echobeat evaluate --pred run/pred.csv --ref run/truth.csv --statistic mae --bootstrap 10000
//! ```
//!
//! Errors are printed to stderr as one JSON object `{code, message, context}`;
//! usage errors exit with 2, data errors with 1. `ECHOBEAT_LOG` sets the log
//! level (`error`, `info`, `debug`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod error;
mod io;

use config::PipelineConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "echobeat", version, about = "PLAX wall measurement from keypoint heatmaps")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Pipeline configuration, JSON or TOML (by extension).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed for every random component; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (or directory where noted); stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StatisticArg {
    Mae,
    R2,
    Bias,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AggregateArg {
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CombinatorArg {
    Any,
    All,
}

#[derive(Debug, Args)]
struct CalibrationArgs {
    /// Calibration JSON with `cm_per_pixel` and `fps`.
    #[arg(long, value_name = "FILE")]
    calibration: Option<PathBuf>,
    #[arg(long)]
    cm_per_pixel: Option<f64>,
    #[arg(long)]
    fps: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a phantom video through the mock model. With --out DIR writes
    /// heatmaps.eht, annotations.json, truth.csv and calibration.json;
    /// otherwise the heatmap tensor goes to stdout.
    Synth {
        #[arg(long, default_value = "phantom")]
        video_id: String,
        /// Keypoint position noise of the mock model, px.
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Rasterize annotations into one-hot training labels.
    Rasterize {
        #[arg(long, value_name = "FILE")]
        annotations: PathBuf,
        /// Label size as HxW.
        #[arg(long, value_parser = commands::parse_extent)]
        extent: Option<echobeat_core::heatmap::Extent>,
        /// Label jitter standard deviation, px.
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Decode heatmap tensors into per-frame keypoints and measurements (JSONL).
    Decode {
        /// Heatmap tensor files; `-` reads stdin. Several need --out DIR.
        #[arg(long, required = true, num_args = 1..)]
        heatmaps: Vec<PathBuf>,
        #[command(flatten)]
        calibration: CalibrationArgs,
        #[arg(long)]
        threshold: Option<f32>,
        /// Maximum segment angle spread, degrees.
        #[arg(long)]
        max_angle: Option<f64>,
        /// Use the unweighted centroid of supra-threshold pixels.
        #[arg(long)]
        unweighted: bool,
        /// Index assigned to the first frame of the tensor.
        #[arg(long, default_value_t = 0)]
        first_index: usize,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Find diastole and systole per beat in a frame stream.
    Beats {
        #[arg(long, value_name = "FILE")]
        frames: PathBuf,
        #[command(flatten)]
        calibration: CalibrationArgs,
    },
    /// Aggregate beats into a study report.
    Report {
        #[arg(long, value_name = "FILE")]
        beats: PathBuf,
        #[arg(long, default_value = "phantom")]
        video_id: String,
        #[arg(long, value_enum)]
        aggregate: Option<AggregateArg>,
        /// IVSd threshold for the LVH flag, cm.
        #[arg(long, requires = "lvh_lvpw")]
        lvh_ivs: Option<f64>,
        /// LVPWd threshold for the LVH flag, cm.
        #[arg(long, requires = "lvh_ivs")]
        lvh_lvpw: Option<f64>,
        #[arg(long, value_enum, default_value = "any")]
        lvh_combinator: CombinatorArg,
        /// Also write `id,pred` rows for evaluate.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Agreement statistic with a bootstrap confidence interval.
    Evaluate {
        /// CSV `id,pred` or `id,pred,ref`.
        #[arg(long, value_name = "FILE")]
        pred: PathBuf,
        /// CSV `id,ref`.
        #[arg(long = "ref", value_name = "FILE")]
        reference: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "mae")]
        statistic: StatisticArg,
        /// Number of bootstrap resamples.
        #[arg(long)]
        bootstrap: Option<usize>,
        #[arg(long)]
        level: Option<f64>,
    },
    /// ROC and precision-recall curves from CSV `id,score,label`.
    Roc {
        #[arg(long, value_name = "FILE")]
        scores: PathBuf,
    },
    /// Evaluate the training loss, optionally checking its gradient.
    Losscheck {
        /// Prediction tensor [F,4,H,W] or [4,H,W]; random when omitted.
        #[arg(long, value_name = "FILE", requires = "labels")]
        pred: Option<PathBuf>,
        #[arg(long, value_name = "FILE", requires = "pred")]
        labels: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        lambda_aux: Option<f64>,
        #[arg(long)]
        cm_per_pixel: Option<f64>,
        #[arg(long)]
        grad_check: bool,
        /// Finite-difference step.
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 1e-5)]
        tolerance: f64,
        /// Size of the random tensors, HxW.
        #[arg(long, value_parser = commands::parse_extent)]
        extent: Option<echobeat_core::heatmap::Extent>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = PipelineConfig::load(cli.common.config.as_deref())?;
    cfg.apply_seed(cli.common.seed);
    let out = cli.common.out.as_deref();
    log::debug!("config: {cfg:?}");
    match cli.command {
        Command::Synth {
            video_id,
            noise,
            duration,
        } => {
            if let Some(n) = noise {
                cfg.mock.noise_sigma_px = n;
            }
            if let Some(d) = duration {
                cfg.phantom.duration_s = d;
            }
            commands::synth(&cfg, &video_id, out)
        }
        Command::Rasterize {
            annotations,
            extent,
            sigma,
        } => {
            if let Some(e) = extent {
                cfg.extent = e;
            }
            if let Some(s) = sigma {
                cfg.jitter.sigma = s;
            }
            commands::rasterize_cmd(&cfg, &annotations, out)
        }
        Command::Decode {
            heatmaps,
            calibration,
            threshold,
            max_angle,
            unweighted,
            first_index,
            jobs,
        } => {
            if let Some(t) = threshold {
                cfg.decode.confidence_threshold = t;
            }
            if let Some(a) = max_angle {
                cfg.decode.max_angle_spread = a;
            }
            if unweighted {
                cfg.decode.weighted_centroid = false;
            }
            let cal = io::calibration(
                calibration.calibration.as_deref(),
                calibration.cm_per_pixel,
                calibration.fps,
            )?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()
                .map_err(|e| CliError::usage(e.to_string()))?;
            pool.install(|| commands::decode(&cfg, &heatmaps, &cal, first_index, out))
        }
        Command::Beats {
            frames,
            calibration,
        } => {
            let cal = io::calibration(
                calibration.calibration.as_deref(),
                calibration.cm_per_pixel,
                calibration.fps,
            )?;
            commands::beats(&cfg, &frames, cal.fps, out)
        }
        Command::Report {
            beats,
            video_id,
            aggregate,
            lvh_ivs,
            lvh_lvpw,
            lvh_combinator,
            csv,
        } => {
            use echobeat_core::study::{Aggregate, Combinator, LvhRule};
            if let Some(a) = aggregate {
                cfg.study.aggregate = match a {
                    AggregateArg::Mean => Aggregate::Mean,
                    AggregateArg::Median => Aggregate::Median,
                };
            }
            if let (Some(ivs), Some(lvpw)) = (lvh_ivs, lvh_lvpw) {
                cfg.study.lvh_rule = Some(LvhRule {
                    ivs_threshold_cm: ivs,
                    lvpw_threshold_cm: lvpw,
                    combinator: match lvh_combinator {
                        CombinatorArg::Any => Combinator::Any,
                        CombinatorArg::All => Combinator::All,
                    },
                });
            }
            commands::report(&cfg, &beats, &video_id, csv.as_deref(), out)
        }
        Command::Evaluate {
            pred,
            reference,
            statistic,
            bootstrap,
            level,
        } => {
            use echobeat_core::eval::Statistic;
            if let Some(n) = bootstrap {
                cfg.bootstrap.n_resamples = n;
            }
            if let Some(l) = level {
                cfg.bootstrap.level = l;
            }
            let statistic = match statistic {
                StatisticArg::Mae => Statistic::Mae,
                StatisticArg::R2 => Statistic::R2,
                StatisticArg::Bias => Statistic::Bias,
            };
            commands::evaluate(&cfg, &pred, reference.as_deref(), statistic, out)
        }
        Command::Roc { scores } => commands::roc(&scores, out),
        Command::Losscheck {
            pred,
            labels,
            alpha,
            lambda_aux,
            cm_per_pixel,
            grad_check,
            step,
            tolerance,
            extent,
        } => {
            if let Some(a) = alpha {
                cfg.loss.alpha = a;
            }
            if let Some(l) = lambda_aux {
                cfg.loss.lambda_aux = l;
            }
            let inputs = pred.zip(labels);
            let opts = commands::LossCheckOptions {
                cm_per_pixel: cm_per_pixel.unwrap_or(1.0),
                grad_check,
                step,
                tolerance,
                extent: extent.unwrap_or(echobeat_core::heatmap::Extent {
                    height: 16,
                    width: 16,
                }),
                seed: cli.common.seed.unwrap_or(0),
            };
            commands::losscheck(&cfg, inputs, &opts, out)
        }
    }
}

fn fail(err: &CliError) -> ExitCode {
    let line = serde_json::to_string(&err.report()).expect("error serializes");
    eprintln!("{line}");
    ExitCode::from(err.exit_code as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ECHOBEAT_LOG", "warn"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            return fail(&CliError::usage(e.render().to_string().trim_end()));
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::info!("failed: {e}");
            fail(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_exit_code() {
        assert_eq!(error::EXIT_USAGE, 2);
        assert!(Cli::try_parse_from(["echobeat", "evaluate"]).is_err());
        assert!(Cli::try_parse_from(["echobeat", "losscheck", "--pred", "p.eht"]).is_err());
        let ok = Cli::try_parse_from(["echobeat", "--seed", "3", "roc", "--scores", "s.csv"]).unwrap();
        assert_eq!(ok.common.seed, Some(3));
    }
}
