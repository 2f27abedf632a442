//! `isacperf` command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use isacperf_core::comm::ClosedForm;
use isacperf_core::figures::{self, Figure};
use isacperf_core::montecarlo::{McError, McOptions};
use isacperf_core::run_config::RunConfig;
use isacperf_core::table::{write_atomic, Format, Table};
use isacperf_core::validate::validate;
use isacperf_core::Error;

const EXIT_TOLERANCE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "isacperf", version, about = "Uplink ISAC performance analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Outage probabilities over the p_c grid
    Outage(Common),
    /// Ergodic communication rates over the p_c grid
    Ecr(Common),
    /// Sensing rates over the p_s grid
    Sensing(Common),
    /// ISAC and FDSAC rate-region corners
    Region(Common),
    /// Write every figure table into the --out directory
    Figures(Common),
    /// Compare closed forms against Monte Carlo; exit 1 on any violation
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file (defaults to the reference scenario)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Monte Carlo trials; for outage/ecr/figures this also enables simulated columns
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (directory for `figures`); stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restrict to these slots (repeatable)
    #[arg(long)]
    slot: Vec<usize>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Worker threads for the simulation
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Csv => Format::Csv,
            OutputFormat::Json => Format::Json,
        }
    }
}

impl OutputFormat {
    fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Outage(c)
            | Command::Ecr(c)
            | Command::Sensing(c)
            | Command::Region(c)
            | Command::Figures(c)
            | Command::Validate(c) => c,
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::ConfigFile { .. } => EXIT_CONFIG,
        Error::MonteCarlo(McError::Config(_)) | Error::MonteCarlo(McError::NoTrials) => EXIT_CONFIG,
        _ => EXIT_IO,
    }
}

fn load(common: &Common) -> Result<RunConfig, Error> {
    let mut run = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(t) = common.trials {
        run.trials = t;
    }
    if let Some(s) = common.seed {
        run.seed = s;
    }
    if !common.slot.is_empty() {
        run.slots = common.slot.clone();
    }
    if let Some(out) = &common.out {
        run.output = Some(out.clone());
    }
    run.validate()?;
    Ok(run)
}

fn mc_options(run: &RunConfig, workers: Option<usize>) -> McOptions {
    McOptions {
        trials: run.trials,
        seed: run.seed,
        workers,
    }
}

fn emit(table: &Table, format: OutputFormat, out: Option<&Path>) -> Result<(), Error> {
    let bytes = table.render(format.into())?;
    match out {
        Some(p) => write_atomic(p, &bytes),
        None => std::io::stdout().write_all(&bytes).map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    let common = cli.command.common();
    let run = load(common)?;
    let opts = mc_options(&run, common.workers);
    let simulated = common.trials.is_some().then_some(&opts);
    let out = run.output.as_deref();
    match &cli.command {
        Command::Outage(_) => emit(&figures::outage_table(&run, simulated)?, common.format, out)?,
        Command::Ecr(_) => emit(&figures::ecr_table(&run, simulated)?, common.format, out)?,
        Command::Sensing(_) => emit(&figures::sensing_table(&run)?, common.format, out)?,
        Command::Region(_) => emit(&figures::region_table(&run)?, common.format, out)?,
        Command::Figures(_) => {
            let dir = out.unwrap_or(Path::new("."));
            std::fs::create_dir_all(dir).map_err(|source| Error::Io {
                path: dir.to_path_buf(),
                source,
            })?;
            for fig in Figure::ALL {
                let path = dir.join(format!("{}.{}", fig.name(), common.format.extension()));
                let table = figures::emit_figure_data(fig, &run, simulated)?;
                emit(&table, common.format, Some(&path))?;
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Validate(_) => {
            let report = validate(&run, &ClosedForm, &opts)?;
            emit(&report.to_table(), common.format, out)?;
            let failed = report.failures().count();
            eprintln!(
                "{} checks, {} failed, {} trials, {} singular draws",
                report.checks.len(),
                failed,
                report.trials,
                report.resamples
            );
            if failed > 0 {
                return Ok(EXIT_TOLERANCE);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
