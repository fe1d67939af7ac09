use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mmtc_qra::config::{parse_config, ParsedConfig};
use mmtc_qra::experiments::{markov_oracle, preset, run_sweep, Axis, SweepSpec};
use mmtc_qra::report::{emit_csv, write_csv, RunManifest};
use mmtc_qra::{Error, RewardScheme, Scheme};

#[derive(Parser, Debug)]
#[command(name = "mmtc-qra", version, about = "Q-learning random access simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Output {
    /// Master seed (overrides the config file)
    #[arg(long)]
    seed: Option<u64>,
    /// Episodes per grid point (overrides the config file)
    #[arg(long)]
    reps: Option<u64>,
    /// CSV destination; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; all cores when absent
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario `reps` times
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Run a figure preset or a sweep config
    Sweep {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Exact expected latency for a tiny single-packet scenario
    Oracle {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        scheme: Scheme,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// Collaborative quantizer width
        #[arg(long, default_value_t = 4)]
        bits: u32,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn execute(command: Command) -> Result<ExitCode, Error> {
    let source = std::env::args().collect::<Vec<_>>().join(" ");
    match command {
        Command::Run { config, output } => {
            let spec = match parse_config(&config)? {
                ParsedConfig::Single { config, reps } => SweepSpec {
                    axis: Axis::LoadingFactor,
                    grid: vec![config.loading_factor()],
                    schemes: vec![config.reward_scheme()],
                    reps,
                    loads: vec![],
                    base: config,
                },
                ParsedConfig::Sweep(_) => {
                    return Err(Error::invalid(
                        "sweep_axis",
                        format!("{} describes a sweep; use `sweep --config`", config.display()),
                    ))
                }
            };
            simulate(spec, output, source)
        }
        Command::Sweep {
            preset: name,
            config,
            output,
        } => {
            let spec = match (name, config) {
                (Some(name), _) => preset(&name)?,
                (None, Some(path)) => match parse_config(&path)? {
                    ParsedConfig::Sweep(spec) => spec,
                    ParsedConfig::Single { config, reps } => SweepSpec {
                        axis: Axis::LoadingFactor,
                        grid: vec![config.loading_factor()],
                        schemes: vec![config.reward_scheme()],
                        reps,
                        loads: vec![],
                        base: config,
                    },
                },
                (None, None) => unreachable!("clap requires --preset or --config"),
            };
            simulate(spec, output, source)
        }
        Command::Oracle {
            n,
            k,
            scheme,
            alpha,
            bits,
        } => {
            let scheme = match scheme {
                Scheme::Independent => RewardScheme::Independent,
                Scheme::Collaborative => RewardScheme::Collaborative { quant_bits: bits },
                Scheme::PacketBased => RewardScheme::PacketBased,
            };
            let r = markov_oracle(n, k, scheme, alpha)?;
            println!("{:?}", r.expected_slots);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn simulate(mut spec: SweepSpec, output: Output, source: String) -> Result<ExitCode, Error> {
    if let Some(seed) = output.seed {
        spec.base.seed = seed;
    }
    if let Some(reps) = output.reps {
        spec.reps = reps;
    }
    spec.validate()?;
    let result = run_sweep(&spec, output.workers)?;
    let manifest = RunManifest::new(source, &spec);
    match &output.out {
        Some(path) => emit_csv(&result, &manifest, path)?,
        None => write_csv(&result, &manifest, io::stdout().lock())?,
    }
    let stalled = result.nonconverged();
    if stalled > 0 {
        eprintln!("warning: {stalled} episode(s) hit max_frames without converging");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}
