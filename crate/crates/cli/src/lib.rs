//! `dsas` command-line front end.
//!
//! Exit codes are a stable contract: 0 ok, 1 usage or I/O error,
//! 2 synthesis infeasible, 3 state constraint violated in a simulation,
//! 4 verification failure.

mod commands;
pub mod suites;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use dsas_core::{Config, CoreError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_CONSTRAINT: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "dsas", version, about = "Shared lateral control: synthesis, simulation and verification")]
pub struct Cli {
    /// Configuration files, applied in order on top of the built-in defaults.
    /// Also read from DSAS_CONFIG (comma separated).
    #[arg(long = "config", global = true, env = "DSAS_CONFIG", value_delimiter = ',')]
    pub config: Vec<PathBuf>,

    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize the saturated PDC controller and write a gains file.
    Synth {
        /// Gains file to write.
        #[arg(long, default_value = "gains.txt")]
        out: PathBuf,
        /// Also write the synthesis report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Simulate the closed loop over a preset or a scenario file.
    Simulate {
        /// Gains file written by `synth`.
        #[arg(long)]
        gains: PathBuf,
        /// One of test1, test2, test3.
        #[arg(long, conflicts_with_all = ["scenario", "all_presets"])]
        preset: Option<String>,
        /// Scenario file (TOML).
        #[arg(long, conflicts_with = "all_presets")]
        scenario: Option<PathBuf>,
        /// Run every preset, in parallel, one output directory each.
        #[arg(long)]
        all_presets: bool,
        /// Output root; each run writes `<out-dir>/<scenario>/trace.csv`.
        #[arg(long, default_value = "sim_out")]
        out_dir: PathBuf,
        /// Also render `plot.svg` next to each trace.
        #[arg(long)]
        plot: bool,
    },
    /// Re-check a gains file and run the invariant suites.
    Verify {
        /// Gains file written by `synth`.
        #[arg(long)]
        gains: PathBuf,
        /// Skip the closed-loop simulation checks.
        #[arg(long)]
        quick: bool,
    },
    /// Export the synthesis problem in SDPA sparse format.
    ExportSdpa {
        /// SDPA file to write.
        #[arg(long)]
        out: PathBuf,
        /// Decay rate to assemble at (defaults to the configured tau_1).
        #[arg(long)]
        tau1: Option<f64>,
    },
}

/// Errors carry the exit code they map to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        let code = match e {
            CoreError::Infeasible(_) => EXIT_INFEASIBLE,
            _ => EXIT_ERROR,
        };
        Failure::new(code, e.to_string())
    }
}

pub fn load_config(paths: &[PathBuf]) -> Result<Config, Failure> {
    Ok(Config::load(paths)?)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    run(&cli, out, err)
}

pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = load_config(&cli.config).and_then(|cfg| match &cli.command {
        Command::Synth { out: path, report } => commands::synth(&cfg, path, report.as_deref(), out),
        Command::Simulate {
            gains,
            preset,
            scenario,
            all_presets,
            out_dir,
            plot,
        } => commands::simulate(
            &cfg,
            gains,
            commands::ScenarioChoice::from_flags(preset.as_deref(), scenario.as_deref(), *all_presets)?,
            out_dir,
            *plot,
            out,
        ),
        Command::Verify { gains, quick } => commands::verify(&cfg, gains, *quick, out),
        Command::ExportSdpa { out: path, tau1 } => commands::export_sdpa(&cfg, path, *tau1, out),
    });
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
