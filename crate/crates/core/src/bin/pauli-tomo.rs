use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pauli_tomography::config::{parse_config, ExperimentConfig};
use pauli_tomography::measurement::CountsTable;
use pauli_tomography::pipeline::{
    reconstruct_report, run_pipeline_with_data, simulate, PipelineError, ReconstructionOptions, RunSeeds,
    SimulatedData,
};
use pauli_tomography::report::{emit_report, ReportFormat};
use pauli_tomography::selftest;
use pauli_tomography::tomography::{ReferenceChoice, DEFAULT_RESAMPLES};

const EXIT_IO: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RECONSTRUCTION: u8 = 3;
const EXIT_SELFTEST: u8 = 4;

#[derive(Parser)]
#[command(name = "pauli-tomo", version, about = "Simulate and reconstruct entanglement-assisted tomography of a single-qubit device")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Structured,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => ReportFormat::Text,
            Format::Structured => ReportFormat::Structured,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Stage {
    /// Entangled source measured without the device.
    Input,
    /// Device inserted on beam 1.
    Output,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Experiment configuration (JSON).
    #[arg(long, env = "PAULI_TOMO_CONFIG")]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured shots per setting.
    #[arg(long)]
    shots: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one dataset and write its counts as CSV.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum, default_value_t = Stage::Output)]
        stage: Stage,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct the device from two counts files.
    Reconstruct {
        /// Counts of the source measured without the device.
        #[arg(long)]
        input_counts: PathBuf,
        /// Counts with the device on beam 1.
        #[arg(long)]
        output_counts: PathBuf,
        /// Optional configuration supplying the reference vector, bootstrap
        /// settings and the theoretical device.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Bootstrap seed (overrides the configured one).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Simulate both datasets, reconstruct and report.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Directory receiving input_counts.csv and output_counts.csv.
        #[arg(long)]
        dump_counts: Option<PathBuf>,
    },
    /// Run the built-in consistency checks.
    Selftest,
}

enum Failure {
    Io(String),
    Config(String),
    Reconstruction(String),
}

impl Failure {
    fn exit(self) -> ExitCode {
        let (code, msg) = match self {
            Failure::Io(m) => (EXIT_IO, m),
            Failure::Config(m) => (EXIT_CONFIG, format!("configuration error: {m}")),
            Failure::Reconstruction(m) => (EXIT_RECONSTRUCTION, format!("reconstruction failed: {m}")),
        };
        eprintln!("pauli-tomo: {msg}");
        ExitCode::from(code)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::Reconstruction(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    parse_config(&read(path)?).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn load_with_overrides(args: &ConfigArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(shots) = args.shots {
        cfg.shots_per_setting = shots;
    }
    Ok(cfg)
}

fn load_counts(path: &Path) -> Result<CountsTable, Failure> {
    CountsTable::read_csv(read(path)?.as_bytes()).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { config, stage, out } => {
            let cfg = load_with_overrides(&config)?;
            let data = simulate(&cfg)?;
            let table = match stage {
                Stage::Input => data.input,
                Stage::Output => data.output,
            };
            let csv = table.to_csv_string();
            match out {
                Some(path) => write(&path, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Reconstruct {
            input_counts,
            output_counts,
            config,
            seed,
            format,
        } => {
            let cfg = config.as_deref().map(load_config).transpose()?;
            let data = SimulatedData {
                input: load_counts(&input_counts)?,
                output: load_counts(&output_counts)?,
            };
            let master_seed = seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(0);
            let options = ReconstructionOptions {
                reference: cfg.as_ref().map_or(ReferenceChoice::Auto, |c| c.reference),
                bootstrap_resamples: cfg.as_ref().map_or(DEFAULT_RESAMPLES, |c| c.bootstrap_resamples),
                bootstrap_seed: RunSeeds::derive(master_seed).bootstrap,
                detector_efficiency: None,
                seed: Some(master_seed),
            };
            let theory = cfg.as_ref().map(ExperimentConfig::device_matrix);
            let report = reconstruct_report(&data, theory.as_ref(), &options)?;
            print!("{}", emit_report(&report, format.into()));
        }
        Command::Run {
            config,
            format,
            dump_counts,
        } => {
            let cfg = load_with_overrides(&config)?;
            let (report, data) = run_pipeline_with_data(&cfg)?;
            if let Some(dir) = dump_counts {
                fs::create_dir_all(&dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
                write(&dir.join("input_counts.csv"), &data.input.to_csv_string())?;
                write(&dir.join("output_counts.csv"), &data.output.to_csv_string())?;
            }
            print!("{}", emit_report(&report, format.into()));
        }
        Command::Selftest => unreachable!("handled in main"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Selftest = cli.command {
        let report = selftest::run();
        print!("{}", report.render());
        return if report.passed() {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(EXIT_SELFTEST)
        };
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.exit(),
    }
}
