//! Tabular experiment output: per-replicate rows, grouped summaries,
//! and their CSV encodings.
//!
//! Rows are a pure function of `(config, base_seed)`: they are sorted by
//! `(n, replicate, variant)` before writing regardless of the execution
//! schedule, floats use Rust's shortest round-trip formatting, and wall
//! times live in a separate `timings.csv` so `rows.csv` reruns
//! byte-identically.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::estimate::{Estimates, RelativeErrors};
use crate::model::{zeta, ModelParams};
use crate::sim::Termination;
use crate::stats::{mean, median, sample_sd};

use super::HarnessError;

pub const ROWS_HEADER: [&str; 26] = [
    "experiment",
    "variant",
    "n",
    "replicate",
    "seed",
    "alpha",
    "r0",
    "d0",
    "r1",
    "d1",
    "beta",
    "termination",
    "gamma",
    "z0_at_end",
    "i_hat",
    "r_n",
    "lambda0_hat",
    "lambda1_hat",
    "r1_hat",
    "alpha_hat",
    "u_n",
    "err_lambda0",
    "err_lambda1",
    "err_r1",
    "err_alpha",
    "diagnostics",
];

pub const SUMMARY_HEADER: [&str; 19] = [
    "experiment",
    "variant",
    "n",
    "replicates",
    "included",
    "excluded",
    "mean_err_lambda0",
    "sd_err_lambda0",
    "median_err_lambda0",
    "mean_err_lambda1",
    "sd_err_lambda1",
    "median_err_lambda1",
    "mean_err_r1",
    "sd_err_r1",
    "median_err_r1",
    "mean_err_alpha",
    "sd_err_alpha",
    "median_err_alpha",
    "median_abs_gamma_dev",
];

/// One replicate (or one replicate-variant pair, for experiments that
/// evaluate each trajectory several ways).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    /// Distinguishes evaluations sharing a trajectory or a sweep leg:
    /// `frac=0.02`, `C=200000`, `plain`, `bootstrap`; empty otherwise.
    pub variant: String,
    pub n: u64,
    pub replicate: u32,
    pub seed: u64,
    /// The concrete (possibly sampled) truth behind this replicate.
    pub params: ModelParams,
    pub termination: Termination,
    pub gamma: Option<f64>,
    pub z0_at_end: u64,
    /// Surviving clone count fed to the estimators.
    pub i_hat: Option<u64>,
    /// Simpson's Index fed to the estimators.
    pub r_n: Option<f64>,
    pub estimates: Estimates,
    pub errors: RelativeErrors,
}

impl ResultRow {
    /// Included in error aggregates: recurred and fully estimated.
    pub fn included(&self) -> bool {
        self.termination == Termination::Recurrence && self.estimates.is_complete()
    }

    /// Label carrying either the estimator diagnostics or the
    /// non-recurrence termination.
    pub fn diagnostics_label(&self) -> String {
        match self.termination {
            Termination::Recurrence => self.estimates.diagnostics_label(),
            Termination::Extinct => "Extinct".into(),
            Termination::CapReached => "CapReached".into(),
        }
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.variant.clone(),
            self.n.to_string(),
            self.replicate.to_string(),
            self.seed.to_string(),
            fmt_f64(self.params.alpha),
            fmt_f64(self.params.r0),
            fmt_f64(self.params.d0),
            fmt_f64(self.params.r1),
            fmt_f64(self.params.d1),
            fmt_f64(self.params.beta),
            termination_label(self.termination).into(),
            fmt_opt(self.gamma),
            self.z0_at_end.to_string(),
            self.i_hat.map(|v| v.to_string()).unwrap_or_default(),
            fmt_opt(self.r_n),
            fmt_opt(self.estimates.lambda0_hat),
            fmt_opt(self.estimates.lambda1_hat),
            fmt_opt(self.estimates.r1_hat),
            fmt_opt(self.estimates.alpha_hat),
            fmt_opt(self.estimates.u_n),
            fmt_opt(self.errors.lambda0),
            fmt_opt(self.errors.lambda1),
            fmt_opt(self.errors.r1),
            fmt_opt(self.errors.alpha),
            self.diagnostics_label(),
        ]
    }
}

pub fn termination_label(t: Termination) -> &'static str {
    match t {
        Termination::Recurrence => "recurrence",
        Termination::Extinct => "extinct",
        Termination::CapReached => "cap_reached",
    }
}

fn fmt_f64(v: f64) -> String {
    v.to_string()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Aggregates over one `(n, variant)` group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub variant: String,
    pub n: u64,
    pub replicates: u32,
    pub included: u32,
    pub excluded: u32,
    pub mean_err: RelativeErrors,
    pub sd_err: RelativeErrors,
    pub median_err: RelativeErrors,
    /// Median of per-row `|γ − ζ(θ_row)|` over recurrent replicates.
    pub median_abs_gamma_dev: Option<f64>,
}

impl SummaryRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.variant.clone(),
            self.n.to_string(),
            self.replicates.to_string(),
            self.included.to_string(),
            self.excluded.to_string(),
            fmt_opt(self.mean_err.lambda0),
            fmt_opt(self.sd_err.lambda0),
            fmt_opt(self.median_err.lambda0),
            fmt_opt(self.mean_err.lambda1),
            fmt_opt(self.sd_err.lambda1),
            fmt_opt(self.median_err.lambda1),
            fmt_opt(self.mean_err.r1),
            fmt_opt(self.sd_err.r1),
            fmt_opt(self.median_err.r1),
            fmt_opt(self.mean_err.alpha),
            fmt_opt(self.sd_err.alpha),
            fmt_opt(self.median_err.alpha),
            fmt_opt(self.median_abs_gamma_dev),
        ]
    }
}

/// Groups rows by `(n, variant)` in first-appearance order and computes
/// mean, SD, and median of each relative error over the included rows.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: Vec<(u64, String)> = Vec::new();
    for row in rows {
        let key = (row.n, row.variant.clone());
        if !groups.contains(&key) {
            groups.push(key);
        }
    }

    groups
        .into_iter()
        .map(|(n, variant)| {
            let members: Vec<&ResultRow> =
                rows.iter().filter(|r| r.n == n && r.variant == variant).collect();
            let included: Vec<&&ResultRow> =
                members.iter().filter(|r| r.included()).collect();

            let collect = |get: fn(&RelativeErrors) -> Option<f64>| -> Vec<f64> {
                included.iter().filter_map(|r| get(&r.errors)).collect()
            };
            let agg = |xs: &[f64], f: fn(&[f64]) -> f64, min_len: usize| -> Option<f64> {
                (xs.len() >= min_len).then(|| f(xs))
            };
            let field = |get: fn(&RelativeErrors) -> Option<f64>| {
                let xs = collect(get);
                (
                    agg(&xs, mean, 1),
                    agg(&xs, sample_sd, 2),
                    agg(&xs, median, 1),
                )
            };
            let (m0, s0, d0) = field(|e| e.lambda0);
            let (m1, s1, d1) = field(|e| e.lambda1);
            let (mr, sr, dr) = field(|e| e.r1);
            let (ma, sa, da) = field(|e| e.alpha);

            let gamma_devs: Vec<f64> = members
                .iter()
                .filter_map(|r| r.gamma.map(|g| (g - zeta(&r.params)).abs()))
                .collect();

            SummaryRow {
                experiment: members[0].experiment.clone(),
                variant,
                n,
                replicates: members.len() as u32,
                included: included.len() as u32,
                excluded: (members.len() - included.len()) as u32,
                mean_err: RelativeErrors { lambda0: m0, lambda1: m1, r1: mr, alpha: ma },
                sd_err: RelativeErrors { lambda0: s0, lambda1: s1, r1: sr, alpha: sa },
                median_err: RelativeErrors { lambda0: d0, lambda1: d1, r1: dr, alpha: da },
                median_abs_gamma_dev: agg(&gamma_devs, median, 1),
            }
        })
        .collect()
}

pub fn write_rows_csv<W: Write>(w: W, rows: &[ResultRow]) -> Result<(), HarnessError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(ROWS_HEADER)?;
    for row in rows {
        wtr.write_record(row.record())?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(w: W, rows: &[SummaryRow]) -> Result<(), HarnessError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(SUMMARY_HEADER)?;
    for row in rows {
        wtr.write_record(row.record())?;
    }
    wtr.flush()?;
    Ok(())
}

/// Wall-clock per replicate; informational, excluded from the
/// deterministic outputs.
pub fn write_timings_csv<W: Write>(
    w: W,
    timings: &[(String, String, u64, u32, f64)],
) -> Result<(), HarnessError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["experiment", "variant", "n", "replicate", "wall_ms"])?;
    for (exp, variant, n, rep, ms) in timings {
        wtr.write_record([
            exp.clone(),
            variant.clone(),
            n.to_string(),
            rep.to_string(),
            format!("{ms:.3}"),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
