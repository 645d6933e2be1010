use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use combeo_cli::{bench_list, parse_config_file, render_plot, run_config, HarnessError, Metric, RunOptions};

#[derive(Parser)]
#[command(name = "combeo", version, about = "Run change-of-measure optimizers and baselines on benchmark suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every case of an experiment config and write the results.
    Run {
        config: PathBuf,
        /// Run only this seed for every case.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, overriding the config's.
        #[arg(long)]
        outdir: Option<PathBuf>,
        /// Concurrent runs (0 = one per core).
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Check a config and print how many runs it expands to.
    Validate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Draw trace CSVs as an SVG line chart.
    Plot {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Logarithmic y axis.
        #[arg(long)]
        log: bool,
        #[arg(long, value_enum, default_value_t = MetricArg::BestCost)]
        metric: MetricArg,
    },
    /// Benchmark functions.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// List benchmark ids and optimizer ids.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    BestCost,
    MeanError,
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run {
            config,
            seed,
            outdir,
            jobs,
        } => {
            let manifest = run_config(&config, &RunOptions { seed, outdir, jobs })?;
            println!("{} run(s), {} file(s) in {}", manifest.runs.len(), manifest.files.len(), manifest.config.outdir.display());
        }
        Command::Validate { config, seed } => {
            let mut parsed = parse_config_file(&config)?;
            if let Some(seed) = seed {
                parsed.override_seed(seed);
            }
            println!("ok: {} run(s)", parsed.runs().len());
        }
        Command::Plot {
            traces,
            output,
            log,
            metric,
        } => {
            let metric = match metric {
                MetricArg::BestCost => Metric::BestCost,
                MetricArg::MeanError => Metric::MeanError,
            };
            if render_plot(&traces, &output, log, metric)? {
                println!("wrote {}", output.display());
            }
        }
        Command::Bench {
            command: BenchCommand::List,
        } => print!("{}", bench_list()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
