//! Command-line front end. `run` executes the pipeline and writes its
//! artifacts, `metrics` compares two images, `gen-synthetic` writes the
//! three-strip test image.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cluster::Distance;
use crate::color::FeatureMode;
use crate::error::{Error, Result};
use crate::gradient::Magnitude;
use crate::io::{read_rgb, write_outputs, write_rgb_png};
use crate::metrics::{MetricsReport, DEFAULT_MAX_I};
use crate::pipeline::{run_pipeline, MetricsTarget, PipelineConfig};
use crate::raster::Connectivity;
use crate::synthetic::three_region;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_PROCESSING: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "labseg", version, about = "Lab K-means + marker-controlled watershed segmentation")]
struct Cli {
    /// Worker threads for data-parallel stages (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment an image and write intermediate and final outputs
    Run(RunArgs),
    /// Print per-channel MSE/PSNR between two images as JSON
    Metrics {
        a: PathBuf,
        b: PathBuf,
        #[arg(long = "max-i", default_value_t = DEFAULT_MAX_I)]
        max_i: f64,
    },
    /// Write the three-strip synthetic test image
    GenSynthetic {
        output: PathBuf,
        #[arg(long, default_value_t = 120)]
        size: usize,
        /// Per-channel Gaussian noise sigma
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DistanceArg {
    Cosine,
    Sqeuclidean,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FeaturesArg {
    Ab,
    Lab,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MagnitudeArg {
    Exact,
    Manhattan,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TargetArg {
    FinalRender,
    RidgeOverlay,
}

#[derive(Debug, Args)]
struct RunArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, value_enum, default_value = "cosine")]
    distance: DistanceArg,
    #[arg(long, value_enum, default_value = "ab")]
    features: FeaturesArg,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long = "max-iter", default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 8, value_parser = parse_connectivity)]
    connectivity: u32,
    #[arg(long, value_enum, default_value = "exact")]
    magnitude: MagnitudeArg,
    #[arg(long = "fg-se-radius", default_value_t = 5)]
    fg_se_radius: usize,
    #[arg(long = "min-marker-area", default_value_t = 20)]
    min_marker_area: usize,
    #[arg(long = "max-i", default_value_t = DEFAULT_MAX_I)]
    max_i: f64,
    #[arg(long = "metrics-target", value_enum, default_value = "final-render")]
    metrics_target: TargetArg,
    #[arg(long = "out-dir", default_value = "out")]
    out_dir: PathBuf,
}

fn parse_connectivity(s: &str) -> std::result::Result<u32, String> {
    match s {
        "4" => Ok(4),
        "8" => Ok(8),
        _ => Err(format!("expected 4 or 8, got {s:?}")),
    }
}

impl RunArgs {
    fn config(&self) -> Result<PipelineConfig> {
        Ok(PipelineConfig {
            k: self.k,
            distance: match self.distance {
                DistanceArg::Cosine => Distance::Cosine,
                DistanceArg::Sqeuclidean => Distance::SqEuclidean,
            },
            features: match self.features {
                FeaturesArg::Ab => FeatureMode::Ab,
                FeaturesArg::Lab => FeatureMode::Lab,
            },
            seed: self.seed,
            max_iter: self.max_iter,
            tol: self.tol,
            connectivity: Connectivity::from_count(self.connectivity)?,
            magnitude: match self.magnitude {
                MagnitudeArg::Exact => Magnitude::Exact,
                MagnitudeArg::Manhattan => Magnitude::Manhattan,
            },
            fg_se_radius: self.fg_se_radius,
            min_marker_area: self.min_marker_area,
            max_i: self.max_i,
            metrics_target: match self.metrics_target {
                TargetArg::FinalRender => MetricsTarget::FinalRender,
                TargetArg::RidgeOverlay => MetricsTarget::RidgeOverlay,
            },
            out_dir: self.out_dir.clone(),
        })
    }
}

enum Failure {
    Usage(String),
    Failed(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Failed(e)
    }
}

fn execute(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.config().map_err(|e| Failure::Usage(e.to_string()))?;
            cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let img = read_rgb(&args.input)?;
            let result = run_pipeline(&img, &cfg)?;
            write_outputs(&cfg.out_dir, &result)?;
            if cfg.metrics_target == MetricsTarget::RidgeOverlay {
                write_rgb_png(&cfg.out_dir.join("overlay.png"), &result.metrics_image)?;
            }
        }
        Command::Metrics { a, b, max_i } => {
            if !(max_i > 0.0) {
                return Err(Failure::Usage(format!("--max-i must be positive, got {max_i}")));
            }
            let a = read_rgb(&a)?;
            let b = read_rgb(&b)?;
            let report = MetricsReport::compute(&a, &b, max_i)?;
            println!("{}", report.to_json()?);
        }
        Command::GenSynthetic { output, size, noise, seed } => {
            if size == 0 {
                return Err(Failure::Usage("--size must be at least 1".into()));
            }
            let (img, _) = three_region(size, noise, seed).map_err(|e| Failure::Usage(e.to_string()))?;
            write_rgb_png(&output, &img)?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };

    let outcome = match cli.threads {
        Some(0) => Err(Failure::Usage("--threads must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(cli)),
            Err(e) => Err(Failure::Usage(format!("thread pool: {e}"))),
        },
        None => execute(cli),
    };

    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Failed(e)) => {
            eprintln!("error: {e}");
            if e.is_io() {
                EXIT_IO
            } else {
                EXIT_PROCESSING
            }
        }
    }
}
