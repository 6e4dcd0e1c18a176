//! `weakint` — batch experiment runner.
//!
//! ```text
//! weakint <mode> --config cfg.json [overrides]
//! weakint variance_ci --stat mean --dist bernoulli:0.5 --n 100 --reps 2000
//! ```
//!
//! Modes: `variance_ci`, `empirical_bernstein`, `normality`,
//! `oracle_verify`, `seminorms`. Flag overrides beat the config file; the
//! mode always comes from the subcommand. `WEAKINT_BUDGET` overrides the
//! enumeration budget. Exit codes: 0 success, 2 config error, 3
//! resource/budget error, 4 numerical failure.

use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use weakint::harness::{render_csv, render_json, ExperimentConfig, Mode, OutputFormat};
use weakint::Error;

#[derive(Parser)]
#[command(name = "weakint", version, about = "Variance estimation and concentration-bound experiments for weakly interacting statistics")]
struct Cli {
    #[command(subcommand)]
    mode: ModeCommand,
}

#[derive(Subcommand)]
enum ModeCommand {
    /// Confidence-interval coverage for sigma(f) from the variance estimator
    #[command(name = "variance_ci")]
    VarianceCi(CommonArgs),
    /// One-sided empirical Bernstein bound coverage
    #[command(name = "empirical_bernstein")]
    EmpiricalBernstein(CommonArgs),
    /// Empirical normality test and Wasserstein-1 diagnostics
    #[command(name = "normality")]
    Normality(CommonArgs),
    /// Exact-enumeration verification of the estimator identities
    #[command(name = "oracle_verify")]
    OracleVerify(CommonArgs),
    /// Exact or probed seminorms against the declared parameters
    #[command(name = "seminorms")]
    Seminorms(CommonArgs),
}

impl ModeCommand {
    fn mode(&self) -> Mode {
        match self {
            ModeCommand::VarianceCi(_) => Mode::VarianceCi,
            ModeCommand::EmpiricalBernstein(_) => Mode::EmpiricalBernstein,
            ModeCommand::Normality(_) => Mode::Normality,
            ModeCommand::OracleVerify(_) => Mode::OracleVerify,
            ModeCommand::Seminorms(_) => Mode::Seminorms,
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            ModeCommand::VarianceCi(a)
            | ModeCommand::EmpiricalBernstein(a)
            | ModeCommand::Normality(a)
            | ModeCommand::OracleVerify(a)
            | ModeCommand::Seminorms(a) => a,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; flags override its fields
    #[arg(long)]
    config: Option<String>,
    /// Statistic spec, e.g. mean, ustat:m=2:kernel=var, gibbs:fe:beta=1
    #[arg(long)]
    stat: Option<String>,
    /// Distribution spec: uniform01, bernoulli:p, finite:v1=p1,...
    #[arg(long)]
    dist: Option<String>,
    /// Sample size n (the estimator draws n+1 observations)
    #[arg(long)]
    n: Option<usize>,
    /// Confidence parameter in (0, 1)
    #[arg(long)]
    delta: Option<f64>,
    /// Number of replications
    #[arg(long)]
    reps: Option<u64>,
    /// Master seed; replication r uses substream(seed, r)
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (stdout when absent)
    #[arg(long)]
    out: Option<String>,
    /// Output format: csv or json
    #[arg(long)]
    format: Option<String>,
    /// Worker threads (does not change results)
    #[arg(long)]
    threads: Option<usize>,
}

/// Config-file shape: every field optional so flags can fill the gaps.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    stat: Option<String>,
    dist: Option<String>,
    n: Option<usize>,
    delta: Option<f64>,
    replications: Option<u64>,
    master_seed: Option<u64>,
    mode: Option<Mode>,
    format: Option<OutputFormat>,
    out: Option<String>,
    budget: Option<u64>,
    reference_replications: Option<u64>,
}

fn build_config(mode: Mode, args: &CommonArgs) -> Result<ExperimentConfig, Error> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::config(format!("could not read config '{path}': {e}")))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::config(format!("could not parse config '{path}': {e}")))?
        }
        None => FileConfig::default(),
    };

    if let Some(file_mode) = file.mode {
        if file_mode != mode {
            return Err(Error::config(format!(
                "config file mode {file_mode:?} conflicts with the {mode:?} subcommand"
            )));
        }
    }

    let format = match args.format.as_deref() {
        None => file.format.unwrap_or(OutputFormat::Json),
        Some("csv") => OutputFormat::Csv,
        Some("json") => OutputFormat::Json,
        Some(other) => {
            return Err(Error::config(format!(
                "unknown output format '{other}' (expected csv or json)"
            )))
        }
    };

    let budget = match std::env::var("WEAKINT_BUDGET") {
        Ok(raw) => Some(raw.parse::<u64>().map_err(|_| {
            Error::config(format!("WEAKINT_BUDGET must be an integer, got '{raw}'"))
        })?),
        Err(_) => file.budget,
    };

    Ok(ExperimentConfig {
        stat: args
            .stat
            .clone()
            .or(file.stat)
            .ok_or_else(|| Error::config("missing statistic spec (--stat or config 'stat')"))?,
        dist: args
            .dist
            .clone()
            .or(file.dist)
            .ok_or_else(|| Error::config("missing distribution spec (--dist or config 'dist')"))?,
        n: args
            .n
            .or(file.n)
            .ok_or_else(|| Error::config("missing sample size (--n or config 'n')"))?,
        delta: args.delta.or(file.delta).unwrap_or(0.05),
        replications: args.reps.or(file.replications).unwrap_or(1000),
        master_seed: args.seed.or(file.master_seed).unwrap_or(0),
        mode,
        format,
        out: args.out.clone().or(file.out),
        budget,
        reference_replications: file.reference_replications,
    })
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) => 2,
        Error::BudgetExceeded { .. } => 3,
        Error::Numerical(_) => 4,
    }
}

fn run() -> Result<(), (u8, String)> {
    let cli = Cli::parse();
    let mode = cli.mode.mode();
    let args = cli.mode.args();

    let config = build_config(mode, args).map_err(|e| (exit_code_for(&e), e.to_string()))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| (1u8, format!("could not build thread pool: {e}")))?;
    let result = pool
        .install(|| weakint::harness::run_experiment(&config))
        .map_err(|e| (exit_code_for(&e), e.to_string()))?;

    let rendered = match config.format {
        OutputFormat::Csv => render_csv(&result),
        OutputFormat::Json => {
            render_json(&result).map_err(|e| (exit_code_for(&e), e.to_string()))?
        }
    };
    match &config.out {
        Some(path) => fs::write(path, rendered)
            .map_err(|e| (1u8, format!("could not write output '{path}': {e}")))?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
