//! `sdi`: simulation, imaging and soil-moisture estimation from SFCW B-scans.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{expand_dotted_flags, AlgorithmChoice, Config};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "sdi", version, about = "Subsurface imaging and soil-moisture estimation for SFCW GPR scans")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by the processing commands. Any configuration field can also be
/// given as `--section.field value`.
#[derive(Args, Debug)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration field, e.g. `grid.nx=40`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmChoice>,
    /// Number of dominant SVD components removed as clutter.
    #[arg(long, value_parser = clap::value_parser!(u64).range(0..=2))]
    clutter_k: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo model draws per estimate.
    #[arg(long)]
    draws: Option<usize>,
    /// Band plan (`default`, `full`, `count:start_hz:width_hz:spacing_hz`, or `a-b,c-d`).
    #[arg(long)]
    bands: Option<String>,
    /// Region of interest `x0,x1,z0,z1` in metres.
    #[arg(long)]
    roi: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<Config, CliError> {
        let mut overrides = self.set.clone();
        if let Some(a) = self.algorithm {
            overrides.push(format!("algorithm=\"{}\"", a.to_possible_value().expect("named").get_name()));
        }
        if let Some(k) = self.clutter_k {
            overrides.push(format!("clutter_k={k}"));
        }
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        if let Some(d) = self.draws {
            overrides.push(format!("draws={d}"));
        }
        if let Some(b) = &self.bands {
            overrides.push(format!("bands={}", serde_json::Value::String(b.clone())));
        }
        if let Some(r) = &self.roi {
            let roi = sdi_core::moisture::RegionOfInterest::parse(r)?;
            overrides.push(format!("roi={}", serde_json::to_string(&roi).expect("roi serializes")));
        }
        Config::assemble(self.config.as_deref(), &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the scenes of a scenario file into B-scan files and a manifest.
    Simulate {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replaces the scenario's noise seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Zero timing and clutter removal of one B-scan.
    Preprocess {
        input: PathBuf,
        /// Output B-scan file; a JSON report is written alongside.
        #[arg(long)]
        out: PathBuf,
        /// Reference scan from which the system delay is estimated.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Image one B-scan with the selected algorithm(s).
    Image {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Band of the band plan to image; the whole sweep when absent.
        #[arg(long)]
        band: Option<usize>,
        /// Also write PGM previews.
        #[arg(long)]
        pgm: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Build moisture models from the scans with known SM listed in a manifest.
    Fit {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate SM for B-scans, or for every scan of a manifest.
    Estimate {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Scan times in minutes, comma separated, one per input.
        #[arg(long)]
        times: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Held-out-band SMEE of a model on the scans of a manifest.
    Evaluate {
        manifest: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate, train, evaluate and estimate end to end.
    Pipeline {
        /// Scenario file; the reference eight-level moisture sweep when absent.
        scenario: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { scenario, out, seed } => commands::simulate(&scenario, &out, seed),
        Command::Preprocess { input, out, reference, common } => {
            commands::preprocess(&input, &out, reference.as_deref(), &common.resolve()?)
        }
        Command::Image { input, out, band, pgm, common } => {
            let mut config = common.resolve()?;
            config.pgm |= pgm;
            commands::image(&input, &out, band, &config)
        }
        Command::Fit { manifest, out, common } => commands::fit(&manifest, &out, &common.resolve()?),
        Command::Estimate { inputs, manifest, model, out, times, common } => {
            commands::estimate(&inputs, manifest.as_deref(), &model, &out, times.as_deref(), &common.resolve()?)
        }
        Command::Evaluate { manifest, model, out, common } => {
            commands::evaluate(&manifest, &model, &out, &common.resolve()?)
        }
        Command::Pipeline { scenario, out, common } => {
            commands::pipeline(scenario.as_deref(), &out, &common.resolve()?)
        }
    }
}

fn main() -> ExitCode {
    let args = expand_dotted_flags(std::env::args().collect());
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(4) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sdi: {e}");
            e.exit_code()
        }
    }
}
