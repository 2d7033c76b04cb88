use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use abcs_harness::config::{require, resolve, RunConfig};
use abcs_harness::runner::{self, Family, Mode};
use abcs_harness::{HarnessError, Outcome, Result};

/// Streaming, communication, and concentration experiments for bilinear
/// forms a^T B c with orthogonal B on the unit sphere.
#[derive(Parser)]
#[command(name = "abcs", version, about)]
struct Cli {
    /// TOML config file supplying values for flags left unset.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a promise instance and write it as a binary stream file.
    GenInstance(GenInstanceArgs),
    /// Convert a text file with one value per line into a stream file.
    ImportText(ImportTextArgs),
    /// Run the one-pass decider over a stream file.
    RunStreaming(RunStreamingArgs),
    /// Run the three-player one-way protocol on a fresh random instance.
    RunProtocol(RunProtocolArgs),
    /// Sweep the net parameter and record the bits/error tradeoff as CSV.
    SweepTradeoff(SweepTradeoffArgs),
    /// Monte Carlo divergence from uniform against the exact value.
    Divergence(DivergenceArgs),
    /// Slice a density by random equators and record per-trial CSV rows.
    Equator(EquatorArgs),
    /// Exhaustively verify a k-wise sign family and reject a broken control.
    VerifyHash(VerifyHashArgs),
    /// Check conditional and classical divergence inequalities on random tables.
    VerifyBipartite(VerifyBipartiteArgs),
}

#[derive(Args, Default)]
struct GenInstanceArgs {
    /// Dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Promised sign, +1 or -1 [default: +1].
    #[arg(long, allow_hyphen_values = true)]
    label: Option<String>,
    /// RNG seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Output stream file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct ImportTextArgs {
    /// Dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Input text file, one value per line in stream order.
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Output stream file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct RunStreamingArgs {
    /// Input stream file.
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Multiplier on sqrt(n) for the retained-coordinate budget [default: 1].
    #[arg(long)]
    capacity_factor: Option<f64>,
    /// RNG seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Default)]
struct RunProtocolArgs {
    /// Dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Net growth parameter [default: 3].
    #[arg(long)]
    k: Option<u32>,
    /// Target accuracy for approx mode [default: 0.25].
    #[arg(long)]
    eps: Option<f64>,
    /// RNG seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// decide or approx [default: decide].
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Args, Default)]
struct SweepTradeoffArgs {
    /// Dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated net parameters [default: 1,2,3,4].
    #[arg(long)]
    k_list: Option<String>,
    /// Trials per net parameter [default: 25].
    #[arg(long)]
    seeds: Option<usize>,
    /// Master RNG seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct DivergenceArgs {
    /// Density family.
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Ambient dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Divergence order [default: 2].
    #[arg(long)]
    alpha: Option<f64>,
    /// Monte Carlo sample count [default: 10000].
    #[arg(long)]
    samples: Option<usize>,
    /// Cap mass for the cap family [default: 0.25].
    #[arg(long)]
    cap_measure: Option<f64>,
    /// Concentration for the vmf family [default: 2].
    #[arg(long)]
    kappa: Option<f64>,
    /// RNG seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Default)]
struct EquatorArgs {
    /// Density family.
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Ambient dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Divergence order, at least 1 [default: 2].
    #[arg(long)]
    alpha: Option<f64>,
    /// Deviation threshold; relative at order 1, absolute above [default: 0.3].
    #[arg(long)]
    t: Option<f64>,
    /// Number of random equators [default: 200].
    #[arg(long)]
    trials: Option<usize>,
    /// Monte Carlo samples per trial [default: 2000].
    #[arg(long)]
    samples: Option<usize>,
    /// Cap mass for the cap family [default: 0.25].
    #[arg(long)]
    cap_measure: Option<f64>,
    /// Concentration for the vmf family [default: 2].
    #[arg(long)]
    kappa: Option<f64>,
    /// RNG seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Default)]
struct VerifyHashArgs {
    /// Independence parameter, at least 2 [default: 4].
    #[arg(long)]
    k: Option<u32>,
    /// Field size exponent [default: 3].
    #[arg(long)]
    m: Option<u32>,
}

#[derive(Args, Default)]
struct VerifyBipartiteArgs {
    /// Side length of the square joint tables [default: 4].
    #[arg(long)]
    size: Option<usize>,
    /// Number of random table pairs [default: 100].
    #[arg(long)]
    campaigns: Option<usize>,
    /// RNG seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(outcome) => outcome.exit_code(),
        Err(err) => {
            eprintln!("abcs: {err}");
            err.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let cmd = match cli.command {
        Some(cmd) => cmd,
        None => command_from_config(&cfg)?,
    };
    match cmd {
        Cmd::GenInstance(args) => {
            let n = require(args.n, cfg.n, "n")?;
            let label = runner::label_from_str(args.label.as_deref().unwrap_or("+1"))?;
            let seed = resolve(args.seed, cfg.seed, 0);
            let out = require(args.out, cfg.out.clone(), "out")?;
            runner::gen_instance(n, label, seed, &out)
        }
        Cmd::ImportText(args) => {
            let n = require(args.n, cfg.n, "n")?;
            let input = args.input.ok_or_else(|| {
                HarnessError::Usage("--in is required".into())
            })?;
            let out = require(args.out, cfg.out.clone(), "out")?;
            runner::import_text(n, &input, &out)
        }
        Cmd::RunStreaming(args) => {
            let input = args.input.ok_or_else(|| {
                HarnessError::Usage("--in is required".into())
            })?;
            let capacity_factor = resolve(args.capacity_factor, cfg.capacity_factor, 1.0);
            let seed = resolve(args.seed, cfg.seed, 0);
            runner::run_streaming(&input, capacity_factor, seed)
        }
        Cmd::RunProtocol(args) => {
            let n = require(args.n, cfg.n, "n")?;
            let k = resolve(args.k, cfg.k, 3);
            let eps = resolve(args.eps, cfg.eps, 0.25);
            let seed = resolve(args.seed, cfg.seed, 0);
            let mode = args.mode.unwrap_or_default();
            runner::run_protocol(n, k, eps, seed, mode)
        }
        Cmd::SweepTradeoff(args) => {
            let n = require(args.n, cfg.n, "n")?;
            let ks = runner::parse_k_list(args.k_list.as_deref().unwrap_or("1,2,3,4"))?;
            let trials = resolve(args.seeds, cfg.trials, 25);
            let seed = resolve(args.seed, cfg.seed, 0);
            let out = require(args.out, cfg.out.clone(), "out")?;
            runner::sweep_tradeoff(n, &ks, trials, seed, &out)
        }
        Cmd::Divergence(args) => {
            let family = args.family.ok_or_else(|| {
                HarnessError::Usage("--family is required (cap or vmf)".into())
            })?;
            let n = require(args.n, cfg.n, "n")?;
            let alpha = resolve(args.alpha, cfg.alpha, 2.0);
            let samples = args.samples.unwrap_or(10_000);
            let cap_measure = args.cap_measure.unwrap_or(0.25);
            let kappa = resolve(args.kappa, cfg.kappa, 2.0);
            let seed = resolve(args.seed, cfg.seed, 0);
            runner::divergence(family, n, alpha, samples, cap_measure, kappa, seed)
        }
        Cmd::Equator(args) => {
            let family = args.family.ok_or_else(|| {
                HarnessError::Usage("--family is required (cap or vmf)".into())
            })?;
            let n = require(args.n, cfg.n, "n")?;
            let alpha = resolve(args.alpha, cfg.alpha, 2.0);
            let threshold = args.t.unwrap_or(0.3);
            let trials = resolve(args.trials, cfg.trials, 200);
            let samples = args.samples.unwrap_or(2000);
            let cap_measure = args.cap_measure.unwrap_or(0.25);
            let kappa = resolve(args.kappa, cfg.kappa, 2.0);
            let seed = resolve(args.seed, cfg.seed, 0);
            let out = require(args.out, cfg.out.clone(), "out")?;
            runner::equator(
                family, n, alpha, threshold, trials, samples, cap_measure, kappa, seed, &out,
            )
        }
        Cmd::VerifyHash(args) => {
            let k = resolve(args.k, cfg.k, 4);
            let m = args.m.unwrap_or(3);
            runner::verify_hash(k, m)
        }
        Cmd::VerifyBipartite(args) => {
            let size = args.size.unwrap_or(4);
            let campaigns = resolve(args.campaigns, cfg.trials, 100);
            let seed = resolve(args.seed, cfg.seed, 0);
            runner::verify_bipartite(size, campaigns, seed)
        }
    }
}

fn command_from_config(cfg: &RunConfig) -> Result<Cmd> {
    let name = cfg.command.as_deref().ok_or_else(|| {
        HarnessError::Usage("no subcommand given and the config file names none".into())
    })?;
    Ok(match name {
        "gen-instance" => Cmd::GenInstance(GenInstanceArgs::default()),
        "import-text" => Cmd::ImportText(ImportTextArgs::default()),
        "run-streaming" => Cmd::RunStreaming(RunStreamingArgs::default()),
        "run-protocol" => Cmd::RunProtocol(RunProtocolArgs::default()),
        "sweep-tradeoff" => Cmd::SweepTradeoff(SweepTradeoffArgs::default()),
        "divergence" => Cmd::Divergence(DivergenceArgs::default()),
        "equator" => Cmd::Equator(EquatorArgs::default()),
        "verify-hash" => Cmd::VerifyHash(VerifyHashArgs::default()),
        "verify-bipartite" => Cmd::VerifyBipartite(VerifyBipartiteArgs::default()),
        other => {
            return Err(HarnessError::Usage(format!(
                "unknown command {other:?} in config file"
            )))
        }
    })
}
