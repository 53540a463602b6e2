use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ntkcorr::commands::{corr_sweep, init_audit, ntk_deviation, report, selftest, suite};
use ntkcorr::error::{EXIT_INVARIANT, EXIT_OK};
use ntkcorr::{CliError, CliResult, Command, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "ntkcorr",
    version,
    about = "Derivative-correlation scaling experiments for wide networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
}

#[derive(Subcommand)]
enum Sub {
    /// Run the tensor-norm invariant battery.
    NormSelftest {
        #[arg(long, default_value_t = selftest::CASES)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        master_seed: u64,
        /// Corrupt the product law to check that failures are reported.
        #[arg(long)]
        inject_fault: bool,
        /// Write every case tensor as CSV into this directory.
        #[arg(long)]
        dump_tensors: Option<PathBuf>,
    },
    /// Layer norms and normalization statistics at initialization.
    InitAudit(RunArgs),
    /// Correlation-function magnitudes across widths.
    CorrSweep(RunArgs),
    /// Deviation of SGD from the linearized model.
    NtkDeviation(RunArgs),
    /// Aggregate the fits below a directory into report.json and index.svg.
    Report {
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Statistics that must be present.
        #[arg(long = "require")]
        require: Vec<String>,
    },
    /// Every acceptance experiment, one pass/fail line per criterion.
    Suite {
        #[arg(long, default_value = "results/suite")]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = 0)]
        master_seed: u64,
        /// Smaller grids for a fast check.
        #[arg(long)]
        quick: bool,
    },
}

fn load(command: Command, args: &RunArgs) -> CliResult<(ExperimentConfig, PathBuf)> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default_for(command),
    };
    if let Some(j) = args.jobs {
        config.jobs = j;
    }
    if let Some(s) = args.master_seed {
        config.master_seed = s;
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| Path::new("results").join(command.name()));
    Ok((config, out))
}

fn print_fits(fits: &std::collections::BTreeMap<String, ntkcorr_core::asymptotics::FitReport>, warnings: &[String]) {
    for (name, f) in fits {
        println!(
            "{name:<32} exponent {:+.3} +/- {:.3}  r^2 {:.3}",
            f.exponent, f.exponent_stderr, f.r_squared
        );
    }
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Sub::NormSelftest {
            cases,
            master_seed,
            inject_fault,
            dump_tensors,
        } => {
            let (outcomes, table) = selftest::run(cases, master_seed, inject_fault, dump_tensors.as_deref())?;
            print!("{table}");
            if let Some(bad) = outcomes.iter().find(|o| !o.passed()) {
                return Err(CliError::Invariant(bad.name.to_string()));
            }
        }
        Sub::InitAudit(args) => {
            let (config, out) = load(Command::InitAudit, &args)?;
            let r = init_audit::run(&config, &out)?;
            print_fits(&r.fits, &r.warnings);
        }
        Sub::CorrSweep(args) => {
            let (config, out) = load(Command::CorrSweep, &args)?;
            let r = corr_sweep::run(&config, &out)?;
            print_fits(&r.fits, &r.warnings);
        }
        Sub::NtkDeviation(args) => {
            let (config, out) = load(Command::NtkDeviation, &args)?;
            let r = ntk_deviation::run(&config, &out)?;
            print_fits(&r.sweep.fits, &r.sweep.warnings);
            println!(
                "runs: {} ok, {} diverged, {} failed",
                r.summary.ok, r.summary.diverged, r.summary.failed
            );
        }
        Sub::Report { dir, out, require } => {
            let fits = report::run(&dir, out.as_deref().unwrap_or(&dir), &require)?;
            println!("{} fits aggregated", fits.len());
        }
        Sub::Suite {
            out,
            jobs,
            master_seed,
            quick,
        } => {
            let scale = if quick { suite::Scale::Quick } else { suite::Scale::Full };
            let configs = suite::SuiteConfigs::new(scale, jobs, master_seed);
            let results = suite::run(&configs, &out, |c| println!("{}", c.line()))?;
            if results.iter().any(|c| !c.passed) {
                return Ok(EXIT_INVARIANT);
            }
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
