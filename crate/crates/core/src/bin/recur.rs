//! `recur` — simulate, estimate, and run experiment campaigns for the
//! two-type recurrence model.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use recur_core::estimate::{estimate, estimate_from_observables, surviving_clone_count};
use recur_core::harness::{
    ingest_observation, run_experiment, write_artifacts, ExperimentConfig, ExperimentKind,
    ResolvedConfig,
};
use recur_core::model::ModelParams;
use recur_core::oracle::{verify_suite, VerifyConfig};
use recur_core::sim::{simulate, simulate_capacity, SimOpts, SimOutcome};

#[derive(Parser)]
#[command(name = "recur", version, about = "Two-type branching-process recurrence toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one exact trajectory and print (or write) the outcome.
    Simulate(SimulateArgs),
    /// Estimate model parameters from an observation JSON.
    Estimate(EstimateArgs),
    /// Run an experiment campaign and write rows/summary CSVs.
    Experiment(ExperimentArgs),
    /// Run the verification battery against the analytic oracles.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Simulation config JSON: {"params": {...}, "record_times": [...],
    /// "max_events": ..., "capacity": ...}.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stdout representation: the full outcome as JSON or the snapshot
    /// table as CSV.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Report progress to stderr every N events.
    #[arg(long)]
    progress: Option<u64>,
}

#[derive(Args)]
struct EstimateArgs {
    /// Observation JSON (sizes or fractions form).
    #[arg(long)]
    config: PathBuf,
    /// Drop clones below this fraction of total tumor before estimating.
    #[arg(long)]
    threshold_frac: Option<f64>,
    /// Refine the Simpson's Index by bootstrap before estimating.
    #[arg(long, default_value_t = false)]
    bootstrap: bool,
    #[arg(long, default_value_t = 0.2)]
    bootstrap_keep: f64,
    #[arg(long, default_value_t = 0.625)]
    bootstrap_resample: f64,
    #[arg(long, default_value_t = 1000)]
    bootstrap_b: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// One of: convergence, threshold, stability, capacity, bootstrap, verify.
    name: String,
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's output_path).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's base_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's replicate count.
    #[arg(long)]
    replicates: Option<u32>,
    /// Worker count (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(serde::Deserialize)]
struct SimulateConfig {
    params: ModelParams,
    #[serde(default)]
    record_times: Vec<f64>,
    #[serde(default)]
    max_events: Option<u64>,
    #[serde(default)]
    capacity: Option<u64>,
    #[serde(default)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // Machine-readable error envelope on stderr.
            let payload = json!({"error": format!("{err:#}")});
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let cfg: SimulateConfig = serde_json::from_str(&text).context("parsing simulate config")?;
    let params = cfg.params.validated().context("invalid params")?;
    if params.consistency_warning() {
        eprintln!(
            "warning: alpha = {} >= min(1, lambda1/|lambda0|); estimator \
             consistency is not guaranteed in this regime",
            params.alpha
        );
    }
    let seed = cfg.seed.unwrap_or(args.seed);
    let opts = SimOpts {
        max_events: cfg.max_events.unwrap_or(recur_core::sim::DEFAULT_MAX_EVENTS),
        record_times: cfg.record_times.clone(),
        progress_every: args.progress,
    };
    let outcome = match cfg.capacity {
        Some(c) => simulate_capacity(&params, c, seed, &opts)?,
        None => simulate(&params, seed, &opts),
    };

    match args.out {
        None => match args.format {
            Format::Json => println!("{}", serde_json::to_string_pretty(&outcome)?),
            Format::Csv => print!("{}", snapshots_csv(&outcome)?),
        },
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("outcome.json"), serde_json::to_string_pretty(&outcome)?)?;
            if !outcome.snapshots.is_empty() {
                fs::write(dir.join("snapshots.csv"), snapshots_csv(&outcome)?)?;
            }
            println!("wrote {}", dir.join("outcome.json").display());
        }
    }
    Ok(())
}

/// Snapshot dump: one line per requested record time.
fn snapshots_csv(outcome: &SimOutcome) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["time", "z0", "z1", "n_clones_alive"])?;
    for s in &outcome.snapshots {
        wtr.write_record([
            s.time.to_string(),
            s.z0.to_string(),
            s.z1.to_string(),
            s.clones_alive().to_string(),
        ])?;
    }
    Ok(String::from_utf8(wtr.into_inner()?)?)
}

fn cmd_estimate(args: EstimateArgs) -> Result<()> {
    let ingested = ingest_observation(&args.config)?;
    for w in &ingested.warnings {
        eprintln!("warning: {w}");
    }
    let obs = ingested.observation;
    let i_full = surviving_clone_count(&obs.clone_sizes);
    // Both refinements modify only the Simpson's Index; the observed
    // clone count always feeds the estimators unfiltered.
    let est = if let Some(frac) = args.threshold_frac {
        if !(0.0..1.0).contains(&frac) {
            bail!("--threshold-frac must lie in [0, 1)");
        }
        let detectable =
            recur_core::estimate::apply_detection_threshold(&obs.clone_sizes, obs.z0, frac);
        let r_det = recur_core::estimate::simpson_index(&detectable);
        estimate_from_observables(obs.n, obs.gamma, obs.z0, i_full as f64, r_det)
    } else if args.bootstrap {
        let r_boot = recur_core::estimate::bootstrap_simpson(
            &obs.clone_sizes,
            args.bootstrap_keep,
            args.bootstrap_resample,
            args.bootstrap_b,
            args.seed,
        );
        estimate_from_observables(obs.n, obs.gamma, obs.z0, i_full as f64, r_boot)
    } else {
        estimate(&obs)
    };
    let payload = serde_json::to_string_pretty(&est)?;
    match args.out {
        None => println!("{payload}"),
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("estimates.json"), payload)?;
            println!("wrote {}", dir.join("estimates.json").display());
        }
    }
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let given: serde_json::Value = serde_json::from_str(&text)?;
    let mut config: ExperimentConfig = serde_json::from_value(given.clone())?;

    let named: ExperimentKind = serde_json::from_value(json!(args.name))
        .with_context(|| format!("unknown experiment `{}`", args.name))?;
    if config.experiment != named {
        bail!(
            "experiment `{}` on the command line but `{}` in the config",
            args.name,
            config.experiment.name()
        );
    }
    if let Some(seed) = args.seed {
        config.base_seed = seed;
    }
    if let Some(replicates) = args.replicates {
        config.replicates = replicates;
    }
    if let Some(threads) = args.threads {
        config.parallelism = threads;
    }
    let resolved: ResolvedConfig = config.resolve()?;

    let out_dir = args
        .out
        .or_else(|| resolved.output_path.clone())
        .unwrap_or_else(|| PathBuf::from(format!("out/{}", resolved.experiment.name())));

    let artifacts = run_experiment(&resolved)?;
    write_artifacts(&resolved, &given, &artifacts, &out_dir)?;

    if let Some(report) = &artifacts.verify {
        print_verify(report);
        if !report.all_pass() {
            bail!("verification battery failed");
        }
        return Ok(());
    }
    println!(
        "wrote {} rows across {} summary groups to {}",
        artifacts.rows.len(),
        artifacts.summary.len(),
        out_dir.display()
    );
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let report = verify_suite(args.seed, &VerifyConfig::default());
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        fs::write(
            dir.join("verify_report.json"),
            serde_json::to_string_pretty(&report)?,
        )?;
    } else {
        println!("{}", serde_json::to_string_pretty(&report)?);
    }
    print_verify(&report);
    if !report.all_pass() {
        bail!("verification battery failed");
    }
    Ok(())
}

fn print_verify(report: &recur_core::oracle::VerifyReport) {
    for c in &report.checks {
        eprintln!(
            "{} {}: statistic {:.6} vs expected {:.6} (threshold {:.6})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.statistic,
            c.expected,
            c.threshold
        );
    }
}
