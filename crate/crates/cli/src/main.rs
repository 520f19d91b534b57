use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wmterrain::exec::with_workers;
use wmterrain::experiment::{self, ExperimentConfig};
use wmterrain::stats::Metric;
use wmterrain::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_MISSING_INPUT: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

/// Multifractal terrain generation and traversability experiments.
#[derive(Parser, Debug)]
#[command(name = "wmterrain", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize the multifractal DEMs (16-bit PNG plus JSON sidecar).
    Generate(Common),
    /// Classify roughness and write composition.csv.
    Analyze(Common),
    /// Sample start/goal missions on each closed roughness map.
    Sample(Common),
    /// Drive every sampled mission; resumes from an existing results.csv.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Run at most this many new trials.
        #[arg(long)]
        limit: Option<usize>,
        /// Also write per-trial CSV logs and outcome JSON.
        #[arg(long)]
        logs: bool,
    },
    /// Aggregate by fractal dimension into summary.csv and plots/*.csv.
    Report(Common),
    /// All stages in order.
    Run(Common),
    /// Print the effective configuration as TOML.
    Config(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration; every key is optional.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Map size in pixels; also the number of frequency terms.
    #[arg(long)]
    size: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_toml_file(path)?,
            None => ExperimentConfig::default(),
        };
        let e = &mut cfg.experiment;
        if let Some(seed) = self.seed {
            e.seed = seed;
        }
        if let Some(out) = &self.out {
            e.out_dir = out.clone();
        }
        if let Some(w) = self.workers {
            e.workers = Some(w);
        }
        if let Some(size) = self.size {
            e.size_px = size;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(command: Command) -> Result<(), Error> {
    let (common, limit, logs) = match &command {
        Command::Simulate {
            common,
            limit,
            logs,
        } => (common, *limit, *logs),
        Command::Generate(c)
        | Command::Analyze(c)
        | Command::Sample(c)
        | Command::Report(c)
        | Command::Run(c)
        | Command::Config(c) => (c, None, false),
    };
    let mut cfg = common.load()?;
    cfg.experiment.write_logs |= logs;
    if matches!(command, Command::Config(_)) {
        print!("{}", cfg.to_toml_string());
        return Ok(());
    }
    if cfg.experiment.workers == Some(0) {
        return Err(Error::Config("workers must be >= 1".into()));
    }
    let workers = cfg.experiment.workers;
    with_workers(workers, || match command {
        Command::Generate(_) => {
            let written = experiment::generate(&cfg)?;
            println!("wrote {} maps to {}", written.len(), cfg.out_dir().join("maps").display());
            Ok(())
        }
        Command::Analyze(_) => {
            let rows = experiment::analyze(&cfg)?;
            println!("analyzed {} maps -> {}", rows.len(), cfg.composition_csv().display());
            Ok(())
        }
        Command::Sample(_) => {
            let report = experiment::sample(&cfg)?;
            println!("sampled {} missions", report.missions);
            for id in &report.untraversable {
                eprintln!("warning: {id}: no valid mission within the retry cap");
            }
            Ok(())
        }
        Command::Simulate { .. } => {
            let added = experiment::simulate(&cfg, limit)?;
            println!("simulated {added} new trials -> {}", cfg.results_csv().display());
            Ok(())
        }
        Command::Report(_) | Command::Run(_) => {
            let summaries = if matches!(command, Command::Run(_)) {
                experiment::run_all(&cfg)?
            } else {
                experiment::report(&cfg)?
            };
            println!("{:>6} {:>22} {:>5} {:>10} {:>10} {:>10}", "D", "metric", "n", "median", "q1", "q3");
            for g in &summaries {
                for metric in Metric::ALL {
                    if let Some(s) = g.get(metric) {
                        println!(
                            "{:>6} {:>22} {:>5} {:>10.4} {:>10.4} {:>10.4}",
                            g.dimension,
                            metric.name(),
                            s.count,
                            s.median,
                            s.q1,
                            s.q3
                        );
                    }
                }
            }
            Ok(())
        }
        Command::Config(_) => unreachable!(),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::MissingInput(_) => EXIT_MISSING_INPUT,
                Error::Config(_) | Error::InvalidParameter(_) => EXIT_USAGE,
                _ => EXIT_INTERNAL,
            })
        }
    }
}
