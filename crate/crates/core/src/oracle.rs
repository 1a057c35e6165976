//! Independent numerical oracles for the simulator and the closed forms.
//!
//! The centerpiece integrates the birth-death master equation
//!
//! ```text
//! dP_k/dt = r(k−1)P_{k−1} + d(k+1)P_{k+1} − (r+d)k P_k
//! ```
//!
//! on the truncated state space `0..=S` with an adaptive Cash–Karp RK4(5)
//! pair; probability flowing past `S` accumulates in an absorbing leak
//! bucket and is reported. This path shares no sampling code with the
//! event simulator, so agreement between the two is evidence for both.
//!
//! [`verify_suite`] bundles the distribution audit with Monte Carlo
//! checks of the mean curves, the exact clone-count formula, the Simpson
//! limit, and the clone extinction probability into a machine-readable
//! report.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::simpson_index;
use crate::model::{
    bd_second_moment, expected_clones, limit_constants, mean_curves, zeta, ModelParams,
};
use crate::rng::stream_rng;
use crate::sim::{bd_population_at, classify_clone_sizes, simulate, SimOpts};
use crate::stats::{mean, standard_error};

/// Accepted results must leak less probability mass than this.
pub const LEAK_GATE: f64 = 1e-6;

/// Allowed drift of `Σ probs + leak` from 1.
pub const CONSERVATION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("truncation {truncation} leaked {leaked:.3e} probability mass (gate {LEAK_GATE:.0e})")]
    TruncationTooSmall { truncation: usize, leaked: f64 },
    #[error("initial count {z0} exceeds truncation {truncation}")]
    InitialStateOutOfRange { z0: u64, truncation: usize },
    #[error("time must be nonnegative, got {0}")]
    InvalidTime(f64),
    #[error("histogram support {hist} does not match distribution support {dist}")]
    SupportMismatch { dist: usize, hist: usize },
    #[error("integrator failed: {0}")]
    IntegrationFailed(String),
}

/// Probability mass over population sizes `0..=truncation`, plus the
/// mass that escaped past the truncation boundary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruncatedDistribution {
    pub probs: Vec<f64>,
    pub truncation: usize,
    pub leaked_mass: f64,
}

impl TruncatedDistribution {
    pub fn moment(&self, order: u32) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, &p)| (k as f64).powi(order as i32) * p)
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }
}

/// Endpoint counts bucketed onto the same support as a
/// [`TruncatedDistribution`]; counts past the boundary go to `overflow`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalHistogram {
    pub counts: Vec<u64>,
    pub overflow: u64,
    pub total: u64,
}

impl EmpiricalHistogram {
    pub fn from_samples(samples: impl IntoIterator<Item = u64>, truncation: usize) -> Self {
        let mut counts = vec![0u64; truncation + 1];
        let mut overflow = 0;
        let mut total = 0;
        for s in samples {
            if (s as usize) <= truncation {
                counts[s as usize] += 1;
            } else {
                overflow += 1;
            }
            total += 1;
        }
        Self { counts, overflow, total }
    }
}

/// Truncation large enough to keep the leak below the gate for
/// desk-scale audits: `⌈4·mean + 14·sd⌉ + 16`.
pub fn default_truncation(r: f64, d: f64, z0: u64, t: f64) -> usize {
    let lam = r - d;
    let m = z0 as f64 * (lam * t).exp();
    let var = if lam == 0.0 {
        2.0 * r * t * z0 as f64
    } else if z0 == 1 {
        bd_second_moment(r, d, 1, t).expect("lam != 0") - m * m
    } else {
        let e = (lam * t).exp();
        z0 as f64 * ((r + d) / lam) * e * (e - 1.0)
    };
    let s = (4.0 * m + 14.0 * var.max(0.0).sqrt()).ceil() as usize + 16;
    s.max(z0 as usize + 8)
}

/// Integrates the master equation to time `t` with local tolerance
/// `1e-10` and returns the truncated law.
pub fn master_equation_dist(
    r: f64,
    d: f64,
    z0: u64,
    t: f64,
    truncation: usize,
) -> Result<TruncatedDistribution, OracleError> {
    if t.is_nan() || t < 0.0 {
        return Err(OracleError::InvalidTime(t));
    }
    if z0 as usize > truncation {
        return Err(OracleError::InitialStateOutOfRange { z0, truncation });
    }
    let s = truncation;
    // State layout: probs 0..=s, leak bucket at s+1.
    let mut y = vec![0.0; s + 2];
    y[z0 as usize] = 1.0;

    let rhs = |y: &[f64], dy: &mut [f64]| {
        dy.fill(0.0);
        for k in 0..=s {
            let out = (r + d) * k as f64 * y[k];
            dy[k] -= out;
            if k > 0 {
                dy[k] += r * (k - 1) as f64 * y[k - 1];
            }
            if k < s {
                dy[k] += d * (k + 1) as f64 * y[k + 1];
            }
        }
        dy[s + 1] = r * s as f64 * y[s];
    };
    integrate_adaptive(&rhs, &mut y, t, 1e-10, 1e-13)?;

    let leaked = y[s + 1];
    let mut probs = y;
    probs.truncate(s + 1);
    for p in &mut probs {
        // Tiny negative round-off is clamped; anything larger is a bug.
        if *p < 0.0 {
            debug_assert!(*p > -1e-12, "negative probability {p}");
            *p = 0.0;
        }
    }
    let total: f64 = probs.iter().sum::<f64>() + leaked;
    if (total - 1.0).abs() > CONSERVATION_TOL {
        return Err(OracleError::IntegrationFailed(format!(
            "probability drifted to {total}"
        )));
    }
    if leaked >= LEAK_GATE {
        return Err(OracleError::TruncationTooSmall { truncation: s, leaked });
    }
    Ok(TruncatedDistribution { probs, truncation: s, leaked_mass: leaked })
}

/// Cash–Karp RK4(5) with standard step-size control. Integrates `y` in
/// place from 0 to `t_end`.
fn integrate_adaptive(
    rhs: &dyn Fn(&[f64], &mut [f64]),
    y: &mut [f64],
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> Result<(), OracleError> {
    if t_end == 0.0 {
        return Ok(());
    }
    let n = y.len();
    let mut k = vec![vec![0.0; n]; 6];
    let mut tmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];

    const A: [[f64; 5]; 5] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0],
        [3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0, 0.0, 0.0],
        [-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0, 0.0],
        [
            1631.0 / 55296.0,
            175.0 / 512.0,
            575.0 / 13824.0,
            44275.0 / 110592.0,
            253.0 / 4096.0,
        ],
    ];
    const B5: [f64; 6] = [37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0];
    const B4: [f64; 6] = [
        2825.0 / 27648.0,
        0.0,
        18575.0 / 48384.0,
        13525.0 / 55296.0,
        277.0 / 14336.0,
        1.0 / 4.0,
    ];

    let mut t = 0.0;
    let mut h = (t_end * 1e-3).clamp(1e-8, 0.05);
    let mut steps = 0u64;
    while t < t_end {
        steps += 1;
        if steps > 50_000_000 {
            return Err(OracleError::IntegrationFailed("step limit exceeded".into()));
        }
        h = h.min(t_end - t);

        rhs(y, &mut k[0]);
        for stage in 1..6 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(stage) {
                    acc += A[stage - 1][j] * kj[i];
                }
                tmp[i] = y[i] + h * acc;
            }
            let (head, tail) = k.split_at_mut(stage);
            let _ = head;
            rhs(&tmp, &mut tail[0]);
        }

        let mut err_ratio: f64 = 0.0;
        for i in 0..n {
            let mut v5 = 0.0;
            let mut v4 = 0.0;
            for j in 0..6 {
                v5 += B5[j] * k[j][i];
                v4 += B4[j] * k[j][i];
            }
            y5[i] = y[i] + h * v5;
            let scale = atol + rtol * y5[i].abs().max(y[i].abs());
            err_ratio = err_ratio.max((h * (v5 - v4)).abs() / scale);
        }

        if err_ratio <= 1.0 {
            t += h;
            y.copy_from_slice(&y5);
        }
        let grow = if err_ratio > 0.0 { 0.9 * err_ratio.powf(-0.2) } else { 5.0 };
        h *= grow.clamp(0.2, 5.0);
        if h < 1e-14 {
            return Err(OracleError::IntegrationFailed("step size underflow".into()));
        }
    }
    Ok(())
}

/// Total-variation distance `½ Σ |p_k − f_k|` between the truncated law
/// and an empirical histogram on the same support; leaked mass and
/// histogram overflow enter as a discrepancy term of their own.
pub fn total_variation(
    a: &TruncatedDistribution,
    b: &EmpiricalHistogram,
) -> Result<f64, OracleError> {
    if a.probs.len() != b.counts.len() {
        return Err(OracleError::SupportMismatch { dist: a.probs.len(), hist: b.counts.len() });
    }
    let n = b.total as f64;
    let mut acc = (a.leaked_mass - b.overflow as f64 / n).abs();
    for (p, &c) in a.probs.iter().zip(&b.counts) {
        acc += (p - c as f64 / n).abs();
    }
    Ok(0.5 * acc)
}

/// Which audits [`verify_suite`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    MeanCurve,
    CloneCount,
    SimpsonLimit,
    Extinction,
    TotalVariation,
}

impl CheckKind {
    pub fn all() -> Vec<CheckKind> {
        vec![
            CheckKind::MeanCurve,
            CheckKind::CloneCount,
            CheckKind::SimpsonLimit,
            CheckKind::Extinction,
            CheckKind::TotalVariation,
        ]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub checks: Vec<CheckKind>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { checks: CheckKind::all() }
    }
}

/// One audit line: observed statistic, its target, the scale of
/// sampling noise, and the pass band actually applied.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub statistic: f64,
    pub expected: f64,
    pub se: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckResult {
    fn band(name: impl Into<String>, statistic: f64, expected: f64, se: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            expected,
            se,
            threshold,
            pass: (statistic - expected).abs() <= threshold,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Reference system for the battery: λ0 = −0.5, λ1 = 0.5, α = 0.5.
fn battery_params(n: u64) -> ModelParams {
    ModelParams::new(n, 0.5, 0.5, 1.0, 1.5, 1.0)
}

/// Runs the configured audit battery at desk scale. Failures are report
/// entries, never errors; check order is fixed by the config.
pub fn verify_suite(seed: u64, cfg: &VerifyConfig) -> VerifyReport {
    let mut checks = Vec::new();
    for (i, kind) in cfg.checks.iter().enumerate() {
        let check_seed = crate::rng::derive_stream_seed(seed, i as u64);
        match kind {
            CheckKind::MeanCurve => {
                let p = battery_params(2_000);
                checks.extend(mean_curve_check(&p, &p, 2.0, 400, check_seed));
            }
            CheckKind::CloneCount => {
                let p = battery_params(2_000);
                checks.push(clone_count_check(&p, 300, check_seed));
            }
            CheckKind::SimpsonLimit => {
                let p = battery_params(10_000);
                checks.push(simpson_limit_check(&p, 150, check_seed));
            }
            CheckKind::Extinction => {
                checks.push(extinction_check(1.5, 1.0, 20_000, check_seed));
            }
            CheckKind::TotalVariation => {
                checks.extend(tv_check(1.5, 1.0, 1.0, 20_000, check_seed));
            }
        }
    }
    VerifyReport { seed, checks }
}

/// Sample means of `Z0(t)` and `Z1(t)` against the mean curves of
/// `ref_params`. Trajectories come from `sim_params`, so a corrupted
/// simulator can be audited against the honest reference.
fn mean_curve_check(
    sim_params: &ModelParams,
    ref_params: &ModelParams,
    t: f64,
    reps: u64,
    seed: u64,
) -> Vec<CheckResult> {
    let opts = SimOpts { record_times: vec![t], ..Default::default() };
    let mut z0s = Vec::with_capacity(reps as usize);
    let mut z1s = Vec::with_capacity(reps as usize);
    for i in 0..reps {
        let out = simulate(sim_params, crate::rng::derive_stream_seed(seed, i), &opts);
        z0s.push(out.snapshots[0].z0 as f64);
        z1s.push(out.snapshots[0].z1 as f64);
    }
    let (phi0, phi1) = mean_curves(ref_params, t).expect("t >= 0");
    [("mean_curve_z0", z0s, phi0), ("mean_curve_z1", z1s, phi1)]
        .into_iter()
        .map(|(name, xs, target)| {
            let se = standard_error(&xs);
            CheckResult::band(name, mean(&xs), target, se, 4.0 * se)
        })
        .collect()
}

/// Mean infinite-lineage clone count at `ζ_n` against the exact formula.
fn clone_count_check(p: &ModelParams, reps: u64, seed: u64) -> CheckResult {
    let z = zeta(p);
    let opts = SimOpts { record_times: vec![z], ..Default::default() };
    let mut counts = Vec::with_capacity(reps as usize);
    for i in 0..reps {
        let run_seed = crate::rng::derive_stream_seed(seed, 2 * i);
        let class_seed = crate::rng::derive_stream_seed(seed, 2 * i + 1);
        let out = simulate(p, run_seed, &opts);
        let classes =
            classify_clone_sizes(&out.snapshots[0].clone_sizes, p, class_seed, 1_000)
                .expect("escape size >= 100");
        counts.push(classes.iter().filter(|c| c.classified_infinite).count() as f64);
    }
    let target = expected_clones(p, z, 1.0).expect("valid inputs").infinite_lineage;
    let se = standard_error(&counts);
    CheckResult::band("clone_count_infinite", mean(&counts), target, se, 4.0 * se + 0.02 * target)
}

/// Mean `n^{1−α} R_n(γ_n)` against the Simpson limit coefficient, with a
/// 10% finite-n allowance on top of the 4-SE band.
fn simpson_limit_check(p: &ModelParams, reps: u64, seed: u64) -> CheckResult {
    let scale = (p.n as f64).powf(1.0 - p.alpha);
    let mut vals = Vec::with_capacity(reps as usize);
    for i in 0..reps {
        let out = simulate(p, crate::rng::derive_stream_seed(seed, i), &SimOpts::default());
        if out.gamma.is_some() {
            vals.push(scale * simpson_index(&out.clone_sizes()));
        }
    }
    let target = limit_constants(p).simpson_coef;
    let se = standard_error(&vals);
    CheckResult::band("simpson_limit", mean(&vals), target, se, 4.0 * se + 0.1 * target)
}

/// Extinction frequency of a single clone against `d1/r1`.
fn extinction_check(r: f64, d: f64, runs: u64, seed: u64) -> CheckResult {
    let mut extinct = 0u64;
    for i in 0..runs {
        let mut rng = stream_rng(seed, i);
        if !crate::sim::escapes_before_extinction(1, r, d, 1_000, &mut rng) {
            extinct += 1;
        }
    }
    let freq = extinct as f64 / runs as f64;
    let target = d / r;
    let se = (target * (1.0 - target) / runs as f64).sqrt();
    CheckResult::band("extinction_probability", freq, target, se, 4.0 * se)
}

/// TV distance between simulated endpoints and the master-equation law,
/// plus the empirical second moment against the closed form.
fn tv_check(r: f64, d: f64, t: f64, runs: u64, seed: u64) -> Vec<CheckResult> {
    let truncation = default_truncation(r, d, 1, t).max(64);
    let dist = master_equation_dist(r, d, 1, t, truncation).expect("battery truncation passes");
    let samples: Vec<u64> = (0..runs)
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            bd_population_at(r, d, 1, t, &mut rng)
        })
        .collect();
    let hist = EmpiricalHistogram::from_samples(samples.iter().copied(), truncation);
    let tv = total_variation(&dist, &hist).expect("same support");

    let sq: Vec<f64> = samples.iter().map(|&s| (s as f64) * (s as f64)).collect();
    let m2_target = bd_second_moment(r, d, 1, t).expect("r != d");
    let se = standard_error(&sq);
    vec![
        CheckResult::band("endpoint_tv_distance", tv, 0.0, 0.0, 0.03),
        CheckResult::band("endpoint_second_moment", mean(&sq), m2_target, se, 4.0 * se),
    ]
}
