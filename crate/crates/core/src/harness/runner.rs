//! Experiment drivers: replicate fan-out, per-experiment evaluation,
//! summaries, and artifact writing.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use crate::estimate::{
    apply_detection_threshold, bootstrap_simpson, estimate_from_observables, relative_errors,
    simpson_index, surviving_clone_count, Estimates, Observation, RelativeErrors,
};
use crate::model::ModelParams;
use crate::oracle::{verify_suite, VerifyConfig, VerifyReport};
use crate::rng::{derive_stream_seed, stream_rng};
use crate::sim::{simulate, simulate_capacity, SimOpts, SimOutcome};
use crate::stats::{log_log_slope, median, welch_one_sided_t};

use super::config::{ExperimentKind, ResolvedConfig};
use super::row::{
    summarize, write_rows_csv, write_summary_csv, write_timings_csv, ResultRow, SummaryRow,
};
use super::HarnessError;

// Per-replicate stream roles under the replicate seed.
const STREAM_SAMPLE: u64 = 0;
const STREAM_SIM: u64 = 1;
const STREAM_BOOT: u64 = 2;
const STREAM_CAPACITY_BASE: u64 = 16;

/// Everything a run produces before touching the filesystem.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    /// Experiment-specific extras (concentration slope, Welch tests,
    /// bootstrap error ratios); `Null` when none apply.
    pub diagnostics: serde_json::Value,
    pub timings: Vec<(String, String, u64, u32, f64)>,
    pub verify: Option<VerifyReport>,
}

#[derive(Debug, Clone, Copy)]
struct Job {
    n_index: usize,
    n: u64,
    replicate: u32,
    rep_seed: u64,
}

/// Seed for replicate `replicate` of burden index `n_index`; stable
/// across experiments so shared-trajectory comparisons line up.
fn replicate_seed(base_seed: u64, n_index: usize, replicate: u32) -> u64 {
    derive_stream_seed(base_seed, ((n_index as u64) << 32) | replicate as u64)
}

fn jobs_for(cfg: &ResolvedConfig, n_values: &[u64]) -> Vec<Job> {
    let mut jobs = Vec::with_capacity(n_values.len() * cfg.replicates as usize);
    for (n_index, &n) in n_values.iter().enumerate() {
        for replicate in 0..cfg.replicates {
            jobs.push(Job {
                n_index,
                n,
                replicate,
                rep_seed: replicate_seed(cfg.base_seed, n_index, replicate),
            });
        }
    }
    jobs
}

/// Runs the experiment described by `cfg` and returns all artifacts.
/// Output rows depend only on `(cfg, base_seed)`; the worker count only
/// changes how fast they arrive.
pub fn run_experiment(cfg: &ResolvedConfig) -> Result<RunArtifacts, HarnessError> {
    if cfg.experiment == ExperimentKind::Verify {
        let report = verify_suite(cfg.base_seed, &VerifyConfig::default());
        return Ok(RunArtifacts {
            rows: Vec::new(),
            summary: Vec::new(),
            diagnostics: serde_json::Value::Null,
            timings: Vec::new(),
            verify: Some(report),
        });
    }

    let n_values = match cfg.experiment {
        // Single-burden experiments use the first entry.
        ExperimentKind::Stability | ExperimentKind::Capacity | ExperimentKind::Bootstrap => {
            vec![cfg.n_values[0]]
        }
        _ => cfg.n_values.clone(),
    };
    let jobs = jobs_for(cfg, &n_values);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
    let mut outputs: Vec<(usize, u32, Vec<ResultRow>, f64)> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let start = Instant::now();
                let rows = run_job(cfg, job)?;
                Ok((job.n_index, job.replicate, rows, start.elapsed().as_secs_f64() * 1e3))
            })
            .collect::<Result<Vec<_>, HarnessError>>()
    })?;
    // Deterministic order regardless of scheduling.
    outputs.sort_by_key(|(n_index, replicate, _, _)| (*n_index, *replicate));

    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for (_, replicate, job_rows, ms) in outputs {
        if let Some(first) = job_rows.first() {
            timings.push((first.experiment.clone(), String::new(), first.n, replicate, ms));
        }
        rows.extend(job_rows);
    }

    let summary = summarize(&rows);
    let diagnostics = match cfg.experiment {
        ExperimentKind::Convergence | ExperimentKind::Threshold => {
            gamma_concentration_diagnostics(&summary)
        }
        ExperimentKind::Capacity => capacity_welch_diagnostics(cfg, &rows)?,
        ExperimentKind::Bootstrap => bootstrap_ratio_diagnostics(&rows),
        _ => serde_json::Value::Null,
    };

    Ok(RunArtifacts { rows, summary, diagnostics, timings, verify: None })
}

fn run_job(cfg: &ResolvedConfig, job: &Job) -> Result<Vec<ResultRow>, HarnessError> {
    let mut sample_rng = stream_rng(job.rep_seed, STREAM_SAMPLE);
    let params = cfg.params.sample(job.n, &mut sample_rng)?;
    let opts = SimOpts { max_events: cfg.max_events, ..Default::default() };
    let name = cfg.experiment.name().to_string();

    match cfg.experiment {
        ExperimentKind::Convergence | ExperimentKind::Stability => {
            let sim_seed = derive_stream_seed(job.rep_seed, STREAM_SIM);
            let outcome = simulate(&params, sim_seed, &opts);
            Ok(vec![evaluate_outcome(&name, String::new(), job, sim_seed, &params, &outcome, None)])
        }
        ExperimentKind::Threshold => {
            let sim_seed = derive_stream_seed(job.rep_seed, STREAM_SIM);
            let outcome = simulate(&params, sim_seed, &opts);
            Ok(cfg
                .threshold_fracs
                .iter()
                .map(|&frac| {
                    evaluate_outcome(
                        &name,
                        format!("frac={frac}"),
                        job,
                        sim_seed,
                        &params,
                        &outcome,
                        Some(frac),
                    )
                })
                .collect())
        }
        ExperimentKind::Capacity => {
            let mut rows = Vec::with_capacity(cfg.capacity_values.len());
            for (cap_index, &capacity) in cfg.capacity_values.iter().enumerate() {
                let sim_seed =
                    derive_stream_seed(job.rep_seed, STREAM_CAPACITY_BASE + cap_index as u64);
                let outcome = simulate_capacity(&params, capacity, sim_seed, &opts)?;
                rows.push(evaluate_outcome(
                    &name,
                    format!("C={capacity}"),
                    job,
                    sim_seed,
                    &params,
                    &outcome,
                    None,
                ));
            }
            Ok(rows)
        }
        ExperimentKind::Bootstrap => {
            let sim_seed = derive_stream_seed(job.rep_seed, STREAM_SIM);
            let outcome = simulate(&params, sim_seed, &opts);
            let plain =
                evaluate_outcome(&name, "plain".into(), job, sim_seed, &params, &outcome, None);

            let mut boot = plain.clone();
            boot.variant = "bootstrap".into();
            if let Some(obs) = Observation::from_outcome(&outcome, job.n) {
                let bc = &cfg.bootstrap;
                let boot_seed = derive_stream_seed(job.rep_seed, STREAM_BOOT);
                let r_boot = bootstrap_simpson(
                    &obs.clone_sizes,
                    bc.keep_frac,
                    bc.resample_frac,
                    bc.b,
                    boot_seed,
                );
                // The refined Simpson's Index feeds the estimators next to
                // the full (unfiltered) surviving-clone count.
                let i_full = surviving_clone_count(&obs.clone_sizes);
                let est =
                    estimate_from_observables(job.n, obs.gamma, obs.z0, i_full as f64, r_boot);
                boot.r_n = Some(r_boot);
                boot.errors = relative_errors(&est, &params);
                boot.estimates = est;
            }
            Ok(vec![plain, boot])
        }
        ExperimentKind::Verify => unreachable!("verify handled in run_experiment"),
    }
}

/// Turns one finished trajectory into a row. A detection threshold
/// modifies the Simpson's Index computation (only detectable clones
/// enter it); the surviving-clone count stays the full observed one,
/// exactly as the bootstrap refinement does.
fn evaluate_outcome(
    experiment: &str,
    variant: String,
    job: &Job,
    seed: u64,
    params: &ModelParams,
    outcome: &SimOutcome,
    detection_frac: Option<f64>,
) -> ResultRow {
    let mut row = ResultRow {
        experiment: experiment.to_string(),
        variant,
        n: job.n,
        replicate: job.replicate,
        seed,
        params: *params,
        termination: outcome.termination,
        gamma: outcome.gamma,
        z0_at_end: outcome.z0_at_end,
        i_hat: None,
        r_n: None,
        estimates: Estimates::default(),
        errors: RelativeErrors::default(),
    };
    let Some(obs) = Observation::from_outcome(outcome, job.n) else {
        return row;
    };
    let r_sizes = match detection_frac {
        None | Some(0.0) => obs.clone_sizes.clone(),
        Some(frac) => apply_detection_threshold(&obs.clone_sizes, obs.z0, frac),
    };
    let i_hat = surviving_clone_count(&obs.clone_sizes);
    let r_n = simpson_index(&r_sizes);
    let est = estimate_from_observables(job.n, obs.gamma, obs.z0, i_hat as f64, r_n);
    row.i_hat = Some(i_hat);
    row.r_n = Some(r_n);
    row.errors = relative_errors(&est, params);
    row.estimates = est;
    row
}

/// Non-gating concentration diagnostic: median |γ − ζ| per burden and
/// its log–log slope (direction is the claim, the exponent is only
/// reported).
fn gamma_concentration_diagnostics(summary: &[SummaryRow]) -> serde_json::Value {
    let mut per_n: Vec<(u64, f64)> = summary
        .iter()
        .filter(|s| s.variant.is_empty() || s.variant == "frac=0")
        .filter_map(|s| s.median_abs_gamma_dev.map(|d| (s.n, d)))
        .collect();
    per_n.sort_by_key(|(n, _)| *n);
    per_n.dedup_by_key(|(n, _)| *n);
    if per_n.len() < 2 || per_n.iter().any(|(_, d)| *d <= 0.0) {
        return serde_json::Value::Null;
    }
    let ns: Vec<f64> = per_n.iter().map(|(n, _)| *n as f64).collect();
    let devs: Vec<f64> = per_n.iter().map(|(_, d)| *d).collect();
    let decreasing = devs.windows(2).all(|w| w[1] < w[0]);
    json!({
        "gamma_concentration": {
            "n": per_n.iter().map(|(n, _)| *n).collect::<Vec<u64>>(),
            "median_abs_gamma_dev": devs,
            "log_log_slope": log_log_slope(&ns, &devs),
            "strictly_decreasing": decreasing,
        }
    })
}

/// One-sided Welch tests comparing low-capacity against high-capacity
/// relative errors for λ0, λ1, and α.
fn capacity_welch_diagnostics(
    cfg: &ResolvedConfig,
    rows: &[ResultRow],
) -> Result<serde_json::Value, HarnessError> {
    let mut caps = cfg.capacity_values.clone();
    caps.sort_unstable();
    caps.dedup();
    if caps.len() < 2 {
        return Ok(serde_json::Value::Null);
    }
    let half = caps.len() / 2;
    let low: Vec<u64> = caps[..half].to_vec();
    let high: Vec<u64> = caps[caps.len() - half..].to_vec();
    let errs_of = |group: &[u64], get: ErrField| -> Vec<f64> {
        rows.iter()
            .filter(|r| {
                r.included()
                    && group.iter().any(|c| r.variant == format!("C={c}"))
            })
            .filter_map(|r| get(&r.errors))
            .collect()
    };
    let mut tests = Vec::new();
    let fields: [(&str, ErrField); 3] = [
        ("lambda0", |e| e.lambda0),
        ("lambda1", |e| e.lambda1),
        ("alpha", |e| e.alpha),
    ];
    for (name, get) in fields {
        let a = errs_of(&low, get);
        let b = errs_of(&high, get);
        match welch_one_sided_t(&a, &b) {
            Ok(wt) => tests.push(json!({
                "parameter": name,
                "t": wt.t,
                "df": wt.df,
                "p_upper": wt.p_upper,
                "n_low": a.len(),
                "n_high": b.len(),
            })),
            Err(e) => tests.push(json!({ "parameter": name, "error": e.to_string() })),
        }
    }
    Ok(json!({
        "welch_tests": tests,
        "low_capacities": low,
        "high_capacities": high,
    }))
}

type ErrField = fn(&RelativeErrors) -> Option<f64>;

/// Post/pre relative-error ratios per parameter (the violin data).
fn bootstrap_ratio_diagnostics(rows: &[ResultRow]) -> serde_json::Value {
    let fields: [(&str, ErrField); 4] = [
        ("lambda0", |e| e.lambda0),
        ("lambda1", |e| e.lambda1),
        ("r1", |e| e.r1),
        ("alpha", |e| e.alpha),
    ];
    let mut ratios = serde_json::Map::new();
    let mut medians = serde_json::Map::new();
    for (name, get) in fields {
        let mut vals = Vec::new();
        for pair in rows.chunks(2) {
            let [plain, boot] = pair else { continue };
            if let (Some(pre), Some(post)) = (get(&plain.errors), get(&boot.errors)) {
                if pre > 0.0 {
                    vals.push(post / pre);
                }
            }
        }
        if !vals.is_empty() {
            medians.insert(name.into(), json!(median(&vals)));
        }
        ratios.insert(name.into(), json!(vals));
    }
    json!({ "error_ratios": ratios, "median_error_ratios": medians })
}

/// Writes `rows.csv`, `summary.csv`, `timings.csv`, `config-echo.json`,
/// and the experiment-specific `diagnostics.json` / `verify_report.json`
/// into `out_dir`.
pub fn write_artifacts(
    cfg: &ResolvedConfig,
    given_config: &serde_json::Value,
    artifacts: &RunArtifacts,
    out_dir: &Path,
) -> Result<(), HarnessError> {
    fs::create_dir_all(out_dir)?;

    let echo = json!({
        "version": cfg.version,
        "given": given_config,
        "resolved": serde_json::to_value(cfg)?,
    });
    fs::write(out_dir.join("config-echo.json"), serde_json::to_string_pretty(&echo)?)?;

    if let Some(report) = &artifacts.verify {
        fs::write(
            out_dir.join("verify_report.json"),
            serde_json::to_string_pretty(report)?,
        )?;
        return Ok(());
    }

    write_rows_csv(fs::File::create(out_dir.join("rows.csv"))?, &artifacts.rows)?;
    write_summary_csv(fs::File::create(out_dir.join("summary.csv"))?, &artifacts.summary)?;
    write_timings_csv(fs::File::create(out_dir.join("timings.csv"))?, &artifacts.timings)?;
    if !artifacts.diagnostics.is_null() {
        fs::write(
            out_dir.join("diagnostics.json"),
            serde_json::to_string_pretty(&artifacts.diagnostics)?,
        )?;
    }
    Ok(())
}
