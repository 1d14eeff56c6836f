//! `mug` command-line front end.
//!
//! Exit codes: 0 success, 2 I/O or decode failure, 3 invalid input,
//! 4 numeric failure (fit divergence, undefined correlation).

pub mod bench;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use mug_core::eval::{
    self, evaluate, jpeg_ladder, load_manifest, misalignment_experiment, read_score_table,
    score_dataset, write_score_table, EvalError, FailureKind, ScoreOptions,
};
use mug_core::image_io::{read_image, ImageIoError};
use mug_core::metric::MetricError;
use mug_core::{score_image, Metric};

pub const EXIT_IO: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "mug",
    version,
    about = "No-reference JPEG quality from unique gradient magnitudes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Nug,
    Mug,
    #[value(name = "mug+", alias = "mug_plus")]
    MugPlus,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Nug => Metric::Nug,
            MetricArg::Mug => Metric::Mug,
            MetricArg::MugPlus => Metric::MugPlus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoreSelection {
    Nug,
    Mug,
    #[value(name = "mug+", alias = "mug_plus")]
    MugPlus,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a single image.
    Score {
        image: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        metric: ScoreSelection,
        /// Print `{nug, mug, mug_plus, n_available}` as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Score every image of a manifest into a CSV table.
    Batch {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "MUG_JOBS", default_value_t = 1)]
        jobs: usize,
        /// Leave unreadable images out instead of failing.
        #[arg(long)]
        skip_errors: bool,
    },
    /// Fit the logistic mapping and report SRCC/PLCC for a score table.
    Eval {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, value_enum)]
        metric: MetricArg,
        #[arg(long)]
        out: PathBuf,
        /// Optional `score,mos,fitted` CSV for plotting.
        #[arg(long)]
        scatter: Option<PathBuf>,
    },
    /// Compare correlations before and after cropping every border.
    Misalign {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "MUG_JOBS", default_value_t = 1)]
        jobs: usize,
    },
    /// Re-encode an image at decreasing JPEG qualities and check monotonicity.
    Ladder {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "90,70,50,30,10")]
        qualities: Vec<u8>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time the metric on seeded uniform noise.
    Bench {
        #[arg(long, default_value_t = 1920)]
        width: usize,
        #[arg(long, default_value_t = 1080)]
        height: usize,
        #[arg(long, default_value_t = 50)]
        iters: usize,
        #[arg(long, value_enum, default_value = "mug+")]
        metric: MetricArg,
        #[arg(long, default_value_t = 0x4d55_47)]
        seed: u64,
    },
}

/// A failed command: message for stderr and the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new(EXIT_IO, format!("{}: {e}", path.display()))
    }
}

fn image_error_code(e: &ImageIoError) -> i32 {
    match e {
        ImageIoError::QualityOutOfRange(_)
        | ImageIoError::CropTooLarge { .. }
        | ImageIoError::InvalidGeometry { .. } => EXIT_INVALID,
        _ => EXIT_IO,
    }
}

impl From<ImageIoError> for CliError {
    fn from(e: ImageIoError) -> Self {
        Self::new(image_error_code(&e), e.to_string())
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        Self::new(EXIT_INVALID, e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let code = match &e {
            EvalError::Io { .. } => EXIT_IO,
            EvalError::Image(inner) => image_error_code(inner),
            EvalError::ImageFailures(failures) => {
                if failures.iter().any(|f| f.kind == FailureKind::Io) {
                    EXIT_IO
                } else {
                    EXIT_INVALID
                }
            }
            EvalError::FitDivergence | EvalError::DegenerateInput(_) => EXIT_NUMERIC,
            _ => EXIT_INVALID,
        };
        let message = match &e {
            EvalError::ImageFailures(failures) => {
                let mut m = e.to_string();
                for f in failures {
                    m.push_str(&format!("\n  {}: {}", f.path, f.reason));
                }
                m
            }
            _ => e.to_string(),
        };
        Self::new(code, message)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| CliError::new(EXIT_IO, e.to_string()))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn cmd_score(image: &Path, selection: ScoreSelection, json: bool) -> Result<String, CliError> {
    let img = read_image(image)?;
    let r = score_image(&img)?;
    if json {
        return Ok(serde_json::to_string(&r).expect("metric result serialises"));
    }
    let mut lines = Vec::new();
    if matches!(selection, ScoreSelection::Nug | ScoreSelection::All) {
        lines.push(format!("nug {}", r.nug));
    }
    if matches!(selection, ScoreSelection::Mug | ScoreSelection::All) {
        lines.push(format!("mug {}", r.mug));
    }
    if matches!(selection, ScoreSelection::MugPlus | ScoreSelection::All) {
        lines.push(format!("mug_plus {}", r.mug_plus));
    }
    if selection == ScoreSelection::All {
        lines.push(format!("n_available {}", r.n_available));
    }
    Ok(lines.join("\n"))
}

pub fn cmd_batch(
    manifest: &Path,
    out: &Path,
    jobs: usize,
    skip_errors: bool,
) -> Result<(), CliError> {
    if jobs == 0 {
        return Err(CliError::new(EXIT_INVALID, "--jobs must be at least 1"));
    }
    let m = load_manifest(manifest)?;
    let table = score_dataset(
        &m,
        &ScoreOptions {
            parallelism: jobs,
            skip_errors,
            crop: 0,
        },
    )?;
    for f in &table.skipped {
        eprintln!("skipped {}: {}", f.path, f.reason);
    }
    let mut w = create(out)?;
    write_score_table(&table, &mut w).map_err(|e| CliError::io(out, e))?;
    w.flush().map_err(|e| CliError::io(out, e))
}

pub fn cmd_eval(
    scores: &Path,
    metric: Metric,
    out: &Path,
    scatter: Option<&Path>,
) -> Result<(), CliError> {
    let file = File::open(scores).map_err(|e| CliError::io(scores, e))?;
    let table = read_score_table(file, &scores.display().to_string())?;
    let report = evaluate(&table, metric)?;
    write_json(out, &report)?;
    if let Some(path) = scatter {
        let xs = table.scores(metric);
        let fitted = report.fitted(&xs);
        let mut w = create(path)?;
        let body = std::iter::once("score,mos,fitted".to_string())
            .chain(
                xs.iter()
                    .zip(table.mos())
                    .zip(fitted)
                    .map(|((x, y), f)| format!("{x},{y},{f}")),
            )
            .collect::<Vec<_>>()
            .join("\n");
        writeln!(w, "{body}")
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

pub fn cmd_misalign(manifest: &Path, k: usize, out: &Path, jobs: usize) -> Result<(), CliError> {
    if jobs == 0 {
        return Err(CliError::new(EXIT_INVALID, "--jobs must be at least 1"));
    }
    let m = load_manifest(manifest)?;
    let report = misalignment_experiment(
        &m,
        k,
        &ScoreOptions {
            parallelism: jobs,
            skip_errors: false,
            crop: 0,
        },
    )?;
    write_json(out, &report)
}

pub fn cmd_ladder(
    input: &Path,
    qualities: &[u8],
    out: &Path,
) -> Result<eval::LadderReport, CliError> {
    let img = read_image(input)?;
    let report = jpeg_ladder(&img, qualities)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    for step in &report.steps {
        let path = out.join(format!("q{:03}.jpg", step.quality));
        std::fs::write(&path, &step.encoded.bytes).map_err(|e| CliError::io(&path, e))?;
    }
    write_json(&out.join("monotonicity.json"), &report)?;
    Ok(report)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Score {
            image,
            metric,
            json,
        } => {
            println!("{}", cmd_score(&image, metric, json)?);
        }
        Command::Batch {
            manifest,
            out,
            jobs,
            skip_errors,
        } => cmd_batch(&manifest, &out, jobs, skip_errors)?,
        Command::Eval {
            scores,
            metric,
            out,
            scatter,
        } => cmd_eval(&scores, metric.into(), &out, scatter.as_deref())?,
        Command::Misalign {
            manifest,
            k,
            out,
            jobs,
        } => cmd_misalign(&manifest, k, &out, jobs)?,
        Command::Ladder {
            input,
            qualities,
            out,
        } => {
            let report = cmd_ladder(&input, &qualities, &out)?;
            if report.degenerate {
                eprintln!("scores are constant along the ladder; monotonicity is undefined");
            }
        }
        Command::Bench {
            width,
            height,
            iters,
            metric,
            seed,
        } => {
            if width < 3 || height < 3 {
                return Err(CliError::new(
                    EXIT_INVALID,
                    "bench image must be at least 3x3",
                ));
            }
            let report = bench::run_bench(width, height, iters, metric.into(), seed);
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serialises")
            );
        }
    }
    Ok(())
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
