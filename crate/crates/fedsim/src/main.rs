//! `fedsim`: deterministic federated optimization experiments.
//!
//! Subcommands: `run` executes a config-driven grid of simulations and writes
//! one metrics file; `theory` prints prescribed step sizes and round bounds;
//! `summarize` turns metrics files into a comparison table with an ordering
//! verdict.

mod config;
mod experiment;
mod metrics;
mod summarize;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ExperimentConfig, Overrides};
use experiment::GridOutcome;
use fedsim_core::theory::{
    convex_local_stepsize, convex_round_bound, expected_clients_per_round,
    grad_complexity_per_client, nonconvex_round_bound, nonconvex_stepsizes,
    scaffold_nonconvex_round_bound, AlgorithmKind, TheoryParams,
};
use fedsim_core::ExecMode;

const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "fedsim",
    version,
    about = "Deterministic federated optimization simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid from a config file.
    Run(RunArgs),
    /// Print prescribed step sizes, minibatch sizes and round bounds.
    Theory(TheoryArgs),
    /// Summarize metrics files into a comparison table.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Dataset path override (.gz accepted).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Objective override: robust | logistic.
    #[arg(long)]
    objective: Option<String>,
    /// Regularizer weight override (logistic only).
    #[arg(long)]
    alpha: Option<f64>,
    /// Samples per client M.
    #[arg(long)]
    samples_per_client: Option<usize>,
    /// Explicit client count N (defaults to floor(count / M)).
    #[arg(long)]
    num_clients: Option<usize>,
    /// Pin the feature dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Shuffle samples with this seed before partitioning.
    #[arg(long)]
    shuffle_partition: Option<u64>,
    /// Rounds per run.
    #[arg(long)]
    rounds: Option<u64>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Comma-separated effective step sizes.
    #[arg(long = "eta", value_delimiter = ',')]
    effective_stepsizes: Option<Vec<f64>>,
    /// Output file path.
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv | jsonl.
    #[arg(long)]
    format: Option<String>,
    /// Record metrics every k rounds (final round always recorded).
    #[arg(long)]
    metrics_every: Option<u64>,
    /// Local step size for every algorithm entry.
    #[arg(long)]
    eta_l: Option<f64>,
    /// Evaluate clients and grid cells sequentially.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct TheoryArgs {
    /// Total clients.
    #[arg(long = "N")]
    n: u64,
    /// Sampled clients per round.
    #[arg(long = "S")]
    s: u64,
    /// Local steps.
    #[arg(long = "K", default_value_t = 1)]
    k: u64,
    /// Smoothness constant; estimated from --sigma-from data when omitted.
    #[arg(long = "L")]
    l: Option<f64>,
    /// Within-client gradient standard deviation bound.
    #[arg(long, required_unless_present = "sigma_from")]
    sigma: Option<f64>,
    /// Estimate sigma (and L when not given) from this LIBSVM file instead;
    /// needs --M for the partition.
    #[arg(long = "sigma-from", requires = "m")]
    sigma_from: Option<PathBuf>,
    /// Objective used by --sigma-from: robust | logistic.
    #[arg(long, default_value = "robust")]
    objective: String,
    /// Target accuracy.
    #[arg(long)]
    eps: f64,
    /// Samples per client; bounds the prescribed minibatch sizes.
    #[arg(long = "M")]
    m: Option<u64>,
    /// Round budget used by the (unverified) convex local step size.
    #[arg(long, default_value_t = 1000)]
    rounds: u64,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Metrics files produced by `fedsim run` (csv or jsonl).
    files: Vec<PathBuf>,
    /// Comma-separated gradient-norm thresholds.
    #[arg(long, value_delimiter = ',', default_values_t = summarize::DEFAULT_THRESHOLDS)]
    thresholds: Vec<f64>,
    /// Threshold used for the ordering verdict.
    #[arg(long, default_value_t = 1e-3)]
    verdict_threshold: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run_command(args),
        Command::Theory(args) => theory_command(args),
        Command::Summarize(args) => summarize_command(args),
    }
}

fn setup_threads() {
    #[cfg(feature = "parallel")]
    if let Ok(v) = std::env::var("FEDSIM_THREADS") {
        match v.parse::<usize>() {
            Ok(t) if t >= 1 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global()
                {
                    log::warn!("FEDSIM_THREADS ignored: {e}");
                }
            }
            _ => log::warn!("FEDSIM_THREADS must be a positive integer, got `{v}`"),
        }
    }
}

fn run_command(args: RunArgs) -> ExitCode {
    setup_threads();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: reading {}: {e}", args.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let mut cfg = match ExperimentConfig::from_toml(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    cfg.apply(&Overrides {
        dataset: args.dataset,
        objective: args.objective,
        alpha: args.alpha,
        samples_per_client: args.samples_per_client,
        num_clients: args.num_clients,
        dim: args.dim,
        shuffle_partition: args.shuffle_partition,
        rounds: args.rounds,
        seeds: args.seeds,
        effective_stepsizes: args.effective_stepsizes,
        output: args.output,
        format: args.format,
        metrics_every: args.metrics_every,
        eta_l: args.eta_l,
    });
    let exec = if args.sequential {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    };
    match experiment::run_experiment(&cfg, exec, !args.sequential) {
        Ok(GridOutcome::Complete) => {
            println!("wrote {}", cfg.output.display());
            ExitCode::SUCCESS
        }
        Ok(GridOutcome::PartialDivergence) => {
            println!(
                "wrote {} (some runs diverged; partial traces kept)",
                cfg.output.display()
            );
            ExitCode::SUCCESS
        }
        Ok(GridOutcome::TotalDivergence) => {
            eprintln!("error: every run diverged; see {}", cfg.output.display());
            ExitCode::from(EXIT_DIVERGED)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn theory_command(args: TheoryArgs) -> ExitCode {
    let mut l = args.l;
    let mut sigma = args.sigma;
    if let Some(path) = &args.sigma_from {
        let spec = match args.objective.as_str() {
            "robust" => fedsim_core::ObjectiveSpec::RobustLinearRegression,
            "logistic" => fedsim_core::ObjectiveSpec::logistic_default(),
            other => {
                eprintln!("error: unknown objective `{other}`");
                return ExitCode::from(EXIT_CONFIG);
            }
        };
        let m = args.m.expect("clap enforces --M with --sigma-from") as usize;
        let estimate = (|| -> Result<(f64, f64), String> {
            let ds =
                fedsim_core::dataset::parse_libsvm_path(path, None).map_err(|e| e.to_string())?;
            let part =
                fedsim_core::dataset::partition_clients(&ds, m).map_err(|e| e.to_string())?;
            let sig_sq = fedsim_core::objective::sigma_sq_estimate(spec, &ds, &part);
            let smooth = fedsim_core::objective::smoothness_estimate(spec, &ds);
            Ok((sig_sq.sqrt(), smooth))
        })();
        match estimate {
            Ok((sig, smooth)) => {
                println!(
                    "estimated from {}: sigma={sig:.6e} L={smooth:.6e}",
                    path.display()
                );
                sigma = Some(sigma.unwrap_or(sig));
                l = Some(l.unwrap_or(smooth));
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    }
    let (Some(l), Some(sigma)) = (l, sigma) else {
        eprintln!("error: give --L and --sigma, or --sigma-from with --M");
        return ExitCode::from(EXIT_CONFIG);
    };
    if args.s == 0 || args.s > args.n || l <= 0.0 || args.eps <= 0.0 || sigma < 0.0 {
        eprintln!("error: need 1 <= S <= N, L > 0, eps > 0, sigma >= 0");
        return ExitCode::from(EXIT_CONFIG);
    }
    let params = TheoryParams {
        smoothness: l,
        sigma,
        num_clients: args.n,
        sampled_clients: args.s,
        samples_per_client: args.m,
        local_steps: args.k,
        epsilon: args.eps,
    };
    let rx = nonconvex_stepsizes(&params);
    println!(
        "inputs: N={} S={} K={} L={} sigma={} eps={} M={}",
        args.n,
        args.s,
        args.k,
        l,
        sigma,
        args.eps,
        args.m.map_or("-".into(), |m| m.to_string())
    );
    println!("p (full-sync probability)      {:.6e}", rx.p);
    println!("eta_g (nonconvex)              {:.6e}", rx.eta_g);
    println!("eta_l (nonconvex)              {:.6e}", rx.eta_l);
    println!("b1, b2                         {}, {}", rx.b1, rx.b2);
    println!(
        "rounds, nonconvex              {:.6e}  [theory units, constant 1]",
        nonconvex_round_bound(&params)
    );
    println!(
        "rounds, nonconvex (scaffold)   {:.6e}  [theory units, constant 1]",
        scaffold_nonconvex_round_bound(&params)
    );
    println!(
        "rounds, convex                 {:.6e}  [theory units, constant 1]",
        convex_round_bound(&params)
    );
    println!(
        "eta_l (convex)                 {:.6e}  [unverified: assumes L_c=L, T=rounds={}]",
        convex_local_stepsize(&params, args.rounds as f64),
        args.rounds
    );
    println!(
        "expected clients per round     {:.6e}  (< 2S = {})",
        expected_clients_per_round(args.n, args.s, rx.p),
        2 * args.s
    );
    let r = nonconvex_round_bound(&params);
    println!(
        "grad evals per client          fedpage {:.6e}, scaffold/fedavg {:.6e}  [over the nonconvex round bound]",
        grad_complexity_per_client(&params, AlgorithmKind::FedPage, r),
        grad_complexity_per_client(&params, AlgorithmKind::Scaffold, r)
    );
    ExitCode::SUCCESS
}

fn summarize_command(args: SummarizeArgs) -> ExitCode {
    if args.files.is_empty() {
        eprintln!("error: no metrics files given");
        return ExitCode::from(EXIT_CONFIG);
    }
    let mut records = Vec::new();
    for path in &args.files {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: reading {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG);
            }
        };
        match metrics::read_metrics(&text) {
            Ok(mut r) => records.append(&mut r),
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG);
            }
        }
    }
    if records.is_empty() {
        eprintln!("error: metrics files contain no records");
        return ExitCode::from(EXIT_CONFIG);
    }
    let cells = summarize::summarize(&records, &args.thresholds);
    print!(
        "{}",
        summarize::render(&cells, &args.thresholds, args.verdict_threshold)
    );
    ExitCode::SUCCESS
}
