use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use dropmeter::batch::run_batch;
use dropmeter::dpi::{render_table, TABLE_DIAMETERS_UM, TABLE_DPIS};
use dropmeter::pipeline::{DEFAULT_CARD_HEIGHT_MM, DEFAULT_CARD_WIDTH_MM};
use dropmeter::server::{serve, ServerConfig, DEFAULT_MAX_BODY_BYTES};
use dropmeter::{analyze_image, timestamp_now, CardOptions};
use dropmeter_core::{
    binarize, decode_image, export_report, fractal_dimension, generate_card, render_overlay,
    to_grayscale, write_png, AnalysisParams, CorrectionParams, ExportFormat, SyntheticCardSpec,
    DEFAULT_BIN_THRESHOLD, DEFAULT_MARKER_THRESHOLD,
};

#[derive(Parser)]
#[command(
    name = "dropmeter",
    version,
    about = "Droplet analysis for water-sensitive spray cards"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a single card image.
    Analyze {
        image: PathBuf,
        #[command(flatten)]
        card: CardArgs,
        /// Report destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a PNG with each segmented drop colored.
        #[arg(long, value_name = "PNG")]
        overlay: Option<PathBuf>,
        /// `json` or `csv`.
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Analyze every PNG/PPM/PGM image in a directory.
    Batch {
        dir: PathBuf,
        #[command(flatten)]
        card: CardArgs,
        /// Output directory for `<stem>.json` reports and `summary.csv`.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 uses every core, 1 runs serially.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Render a synthetic card from a TOML spec.
    Synth {
        spec: PathBuf,
        #[arg(long, value_name = "PNG")]
        out: PathBuf,
        /// Also write the ground truth as JSON.
        #[arg(long, value_name = "JSON")]
        truth: Option<PathBuf>,
    },
    /// Box-counting dimension of the binarized card.
    Fractal {
        image: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BIN_THRESHOLD)]
        bin_threshold: f64,
    },
    /// Pixels needed to represent a length at a scan resolution.
    Dpi {
        #[arg(long, value_delimiter = ',', value_name = "UM,...")]
        diameters: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', value_name = "DPI,...")]
        dpis: Option<Vec<f64>>,
    },
    /// Start the HTTP endpoint.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, default_value_t = DEFAULT_MAX_BODY_BYTES / (1024 * 1024))]
        max_body_mb: usize,
        /// Static UI assets to serve at `/`.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CardArgs {
    #[arg(long, default_value_t = DEFAULT_CARD_WIDTH_MM)]
    card_width_mm: f64,
    #[arg(long, default_value_t = DEFAULT_CARD_HEIGHT_MM)]
    card_height_mm: f64,
    #[arg(long, default_value_t = DEFAULT_BIN_THRESHOLD)]
    bin_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_MARKER_THRESHOLD)]
    marker_threshold: f64,
    /// Diameter correction `a*d^b`, given as `a,b`.
    #[arg(long, value_name = "A,B")]
    correct: Option<String>,
}

impl CardArgs {
    fn options(&self) -> anyhow::Result<CardOptions> {
        let correction = match &self.correct {
            Some(text) => text.parse::<CorrectionParams>()?,
            None => CorrectionParams::default(),
        };
        let params = AnalysisParams {
            bin_threshold: self.bin_threshold,
            marker_threshold: self.marker_threshold,
            correction,
        };
        params.validate()?;
        Ok(CardOptions {
            card_width_mm: self.card_width_mm,
            card_height_mm: self.card_height_mm,
            params,
            fractal: true,
        })
    }
}

/// Marks errors that should exit with the parameter-error code.
#[derive(Debug)]
struct ParameterError(String);

impl std::fmt::Display for ParameterError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ParameterError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ParameterError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<dropmeter_core::Error>() {
            return if e.is_parameter_error() { 2 } else { 1 };
        }
    }
    1
}

fn file_name(path: &Path) -> Option<String> {
    path.file_name().map(|n| n.to_string_lossy().into_owned())
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Analyze {
            image,
            card,
            out,
            overlay,
            format,
        } => {
            let format: ExportFormat = format
                .parse()
                .map_err(|e: dropmeter_core::Error| ParameterError(e.to_string()))?;
            let opts = card.options()?;
            let raster = decode_image(&image)?;
            let name = file_name(&image);
            let analysis = analyze_image(&raster, &opts, name.as_deref(), Some(timestamp_now()))?;
            if let Some(path) = overlay {
                write_png(&render_overlay(&raster, &analysis.segmentation)?, &path)?;
            }
            write_output(out.as_deref(), &export_report(&analysis.report, format)?)
        }
        Command::Batch {
            dir,
            card,
            out,
            jobs,
        } => {
            let opts = card.options()?;
            let summary = run_batch(&dir, &out, &opts, jobs, Some(timestamp_now()))?;
            let failed: Vec<_> = summary.failures().collect();
            for item in &failed {
                if let Err(msg) = &item.outcome {
                    eprintln!("{}: {msg}", item.file);
                }
            }
            eprintln!(
                "analyzed {} of {} images into {}",
                summary.items.len() - failed.len(),
                summary.items.len(),
                out.display()
            );
            if !failed.is_empty() {
                bail!("{} image(s) could not be analyzed", failed.len());
            }
            Ok(())
        }
        Command::Synth { spec, out, truth } => {
            let spec = SyntheticCardSpec::load(&spec)?;
            let (raster, ground_truth) = generate_card(&spec)?;
            write_png(&raster, &out)?;
            if let Some(path) = truth {
                let json = serde_json::to_string_pretty(&ground_truth)?;
                std::fs::write(&path, json)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
        Command::Fractal {
            image,
            bin_threshold,
        } => {
            let raster = decode_image(&image)?;
            let mask = binarize(&to_grayscale(&raster), bin_threshold)?;
            let estimate = fractal_dimension(&mask)?;
            println!("{}", serde_json::to_string_pretty(&estimate)?);
            Ok(())
        }
        Command::Dpi { diameters, dpis } => {
            let diameters = diameters.unwrap_or_else(|| TABLE_DIAMETERS_UM.to_vec());
            let dpis = dpis.unwrap_or_else(|| TABLE_DPIS.to_vec());
            if let Some(bad) = diameters
                .iter()
                .chain(&dpis)
                .find(|v| !(v.is_finite() && **v > 0.0))
            {
                return Err(
                    ParameterError(format!("lengths and dpi must be positive, got {bad}")).into(),
                );
            }
            print!("{}", render_table(&diameters, &dpis));
            Ok(())
        }
        Command::Serve {
            addr,
            max_body_mb,
            ui_dir,
        } => {
            let config = ServerConfig {
                max_body_bytes: max_body_mb.saturating_mul(1024 * 1024),
                ui_dir,
            };
            tokio::runtime::Runtime::new()?.block_on(serve(addr, config))
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
