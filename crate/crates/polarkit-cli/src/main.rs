//! `polarkit` — command-line front end for the polarimetric imaging
//! toolkit.
//!
//! Subcommands mirror the processing pipeline: `decode` a raw sensor
//! readout, `simulate` a labeled mixed scene, `separate` reflection from
//! transmission, `align` captures, compute `metrics`, demo the `diffuse`
//! scheduler, and run the whole `pipeline`. Exit codes are stable:
//! 0 success, 2 usage/format error, 3 I/O error, 4 numerical-domain
//! error.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::PipelineConfig;
use polarkit::error::{Error, Result};

#[derive(Parser)]
#[command(name = "polarkit", version, about = "Polarimetric imaging toolkit")]
struct Cli {
    /// Path to a key=value config file (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config's RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Suppress progress lines on stdout (results are still written).
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SeparationMethod {
    /// Stokes-domain separation assuming polarized reflection.
    Brewster,
    /// Edge-space blending-coefficient search against a reference.
    EdgeSearch,
}

#[derive(Subcommand)]
enum Command {
    /// Decode a PRAW mosaic into per-angle images and polarization maps.
    Decode {
        /// Input PRAW file.
        #[arg(long)]
        raw: PathBuf,
        /// Override the layout tag stored in the PRAW header.
        #[arg(long)]
        layout: Option<u8>,
    },
    /// Render a labeled synthetic mixture from two radiance images.
    Simulate {
        /// Transmission radiance image (PFM/PPM/PGM, RGB).
        #[arg(long)]
        transmission: PathBuf,
        /// Reflection radiance image; omit together with
        /// `--no-reflection` for a reflection-free fixture.
        #[arg(long)]
        reflection: Option<PathBuf>,
        /// Use a zero reflection layer.
        #[arg(long)]
        no_reflection: bool,
    },
    /// Separate reflection from transmission.
    Separate {
        #[arg(long, value_enum)]
        method: SeparationMethod,
        /// Directory holding i0/i45/i90/i135.pfm (brewster method).
        #[arg(long)]
        frame_dir: Option<PathBuf>,
        /// Mixed image (edge-search method).
        #[arg(long)]
        mixed: Option<PathBuf>,
        /// Aligned transmission reference (edge-search method).
        #[arg(long)]
        transmission: Option<PathBuf>,
    },
    /// Estimate and apply a per-channel alignment.
    Align {
        /// Reference image.
        #[arg(long)]
        reference: PathBuf,
        /// Image to align onto the reference.
        #[arg(long)]
        moving: PathBuf,
        /// Correspondence file (reference -> moving points); phase
        /// correlation is used when omitted.
        #[arg(long)]
        correspondences: Option<PathBuf>,
    },
    /// Print the metric suite for an image pair.
    Metrics {
        /// Reference image.
        #[arg(long)]
        reference: PathBuf,
        /// Image under test.
        #[arg(long)]
        test: PathBuf,
    },
    /// Diffusion scheduler demo: emit schedule and trajectory statistics.
    Diffuse,
    /// Full pipeline: align, decode, Stokes, unpolarized reconstruction,
    /// reflection estimation, metrics. Inputs come from the config.
    Pipeline,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("polarkit: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.out_dir = out;
    }
    std::fs::create_dir_all(&config.out_dir)?;
    let quiet = cli.quiet;

    match cli.command {
        Command::Decode { raw, layout } => commands::decode::run(&config, &raw, layout, quiet),
        Command::Simulate { transmission, reflection, no_reflection } => {
            commands::simulate::run(&config, &transmission, reflection.as_deref(), no_reflection, quiet)
        }
        Command::Separate { method, frame_dir, mixed, transmission } => match method {
            SeparationMethod::Brewster => {
                let dir = frame_dir.ok_or_else(|| {
                    Error::Usage("--frame-dir is required for the brewster method".into())
                })?;
                commands::separate::run_brewster(&config, &dir, quiet)
            }
            SeparationMethod::EdgeSearch => {
                let mixed = mixed.ok_or_else(|| {
                    Error::Usage("--mixed is required for the edge-search method".into())
                })?;
                let transmission = transmission.ok_or_else(|| {
                    Error::Usage("--transmission is required for the edge-search method".into())
                })?;
                commands::separate::run_edge_search(&config, &mixed, &transmission, quiet)
            }
        },
        Command::Align { reference, moving, correspondences } => {
            commands::align::run(&config, &reference, &moving, correspondences.as_deref(), quiet)
        }
        Command::Metrics { reference, test } => commands::metrics::run(&reference, &test),
        Command::Diffuse => commands::diffuse::run(&config, quiet),
        Command::Pipeline => commands::pipeline::run(&config, quiet),
    }
}
