use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use fovpart::Strategy;
use fovpart_cli::{cmd_emulate, cmd_partition, cmd_report, load_config, parse_slot_range, RunOptions};

/// Controller domain partitioning experiments for LEO/MEO satellite networks.
#[derive(Debug, Parser)]
#[command(name = "fovpart", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Partition every slot and check the domain constraints; exits with
    /// status 2 when any assignment violates them.
    Partition(RunArgs),
    /// Partition, score and emulate every slot.
    Emulate(RunArgs),
    /// Aggregate stats files across seeds.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment config (TOML). Without one the built-in desk scenario runs.
    #[arg(long, env = "FOVPART_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Replaces the configured seeds; repeatable.
    #[arg(long)]
    seed: Vec<u64>,
    /// Comma-separated subset of eunomia, odc, greedy.
    #[arg(long, value_delimiter = ',')]
    strategies: Vec<Strategy>,
    /// Comma-separated traffic scales in [0, 1].
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<f64>,
    /// Slot range such as `0..20`, `5..` or `7`.
    #[arg(long, value_parser = parse_slot_range)]
    slots: Option<std::ops::Range<usize>>,
    /// Worker threads for independent runs; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            seeds: (!self.seed.is_empty()).then(|| self.seed.clone()),
            strategies: (!self.strategies.is_empty()).then(|| self.strategies.clone()),
            gammas: (!self.gamma.is_empty()).then(|| self.gamma.clone()),
            slots: self.slots.clone(),
            threads: self.threads,
        }
    }
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// `stats.csv` files written by `emulate`.
    #[arg(required = true)]
    stats: Vec<PathBuf>,
    #[arg(long, default_value = "report")]
    out_dir: PathBuf,
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Partition(args) => {
            let opts = args.options();
            let cfg = load_config(args.config.as_deref(), &opts)?;
            let summary = cmd_partition(&cfg, &opts, &args.out_dir)?;
            println!("wrote {} files to {}", summary.files.len(), args.out_dir.display());
            if summary.violations > 0 {
                eprintln!("{} constraint violation(s); see constraints.json", summary.violations);
                return Ok(ExitCode::from(2));
            }
        }
        Command::Emulate(args) => {
            let opts = args.options();
            let cfg = load_config(args.config.as_deref(), &opts)?;
            let files = cmd_emulate(&cfg, &opts, &args.out_dir)?;
            println!("wrote {} files to {}", files.len(), args.out_dir.display());
        }
        Command::Report(args) => {
            let files = cmd_report(&args.stats, &args.out_dir, &mut std::io::stdout())?;
            println!("wrote {} files to {}", files.len(), args.out_dir.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
