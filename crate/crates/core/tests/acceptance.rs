//! Acceptance suite: every release-gating criterion as one test, each
//! printing a PASS/FAIL line (run with `--nocapture` to see them all).
//!
//! Monte Carlo bands are expressed in standard errors of the relevant
//! statistic; the two large-n limit audits carry an extra 10% finite-n
//! allowance on top of their 4-SE bands.

use std::time::Instant;

use rayon::prelude::*;

use recur_core::estimate::{estimate_from_observables, simpson_index};
use recur_core::harness::{run_experiment, ExperimentConfig, ResolvedConfig, SummaryRow};
use recur_core::model::{expected_clones, limit_constants, mean_curves, zeta, ModelParams};
use recur_core::oracle::{
    master_equation_dist, total_variation, EmpiricalHistogram,
};
use recur_core::rng::{derive_stream_seed, stream_rng};
use recur_core::sim::{
    bd_population_at, classify_clone_sizes, escapes_before_extinction, simulate, SimOpts,
    Termination,
};
use recur_core::stats::{mean, standard_error};

/// λ0 = −0.5, λ1 = 0.5, α = 0.5 reference system.
fn theta_star(n: u64) -> ModelParams {
    ModelParams::new(n, 0.5, 0.5, 1.0, 1.5, 1.0)
}

/// λ0 = −0.2, λ1 = 0.8, α = 0.8 detection-threshold system.
fn theta_prime(n: u64) -> ModelParams {
    ModelParams::new(n, 0.8, 1.3, 1.5, 2.0, 1.2)
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!("{} criterion {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion}: {detail}");
}

fn convergence_config(json: &str) -> ResolvedConfig {
    ExperimentConfig::from_json(json).unwrap().resolve().unwrap()
}

#[test]
fn criterion_01_mean_curve_audit() {
    let started = Instant::now();
    let p = theta_star(10_000);
    let times = [1.0, 2.0, 4.0];
    let reps = 2_000u64;
    let opts = SimOpts { record_times: times.to_vec(), ..Default::default() };
    let snaps: Vec<[(f64, f64); 3]> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let out = simulate(&p, derive_stream_seed(101, i), &opts);
            let mut rec = [(0.0, 0.0); 3];
            for (j, s) in out.snapshots.iter().enumerate() {
                rec[j] = (s.z0 as f64, s.z1 as f64);
            }
            rec
        })
        .collect();

    let mut all_ok = true;
    let mut details = Vec::new();
    for (j, &t) in times.iter().enumerate() {
        let (phi0, phi1) = mean_curves(&p, t).unwrap();
        for (label, target, xs) in [
            ("z0", phi0, snaps.iter().map(|r| r[j].0).collect::<Vec<f64>>()),
            ("z1", phi1, snaps.iter().map(|r| r[j].1).collect::<Vec<f64>>()),
        ] {
            let (m, se) = (mean(&xs), standard_error(&xs));
            let ok = (m - target).abs() <= 4.0 * se;
            all_ok &= ok;
            details.push(format!("{label}(t={t}): {m:.2} vs {target:.2} (se {se:.3})"));
        }
    }
    let elapsed = started.elapsed();
    all_ok &= elapsed.as_secs_f64() < 120.0;
    report(
        "1 (mean-curve audit)",
        all_ok,
        &format!("{} in {elapsed:.1?} (target < 2 min)", details.join("; ")),
    );
}

#[test]
fn criterion_02_clone_count_audit() {
    let p = theta_star(10_000);
    let z = zeta(&p);
    let reps = 500u64;
    let opts = SimOpts { record_times: vec![z], ..Default::default() };
    let results: Vec<(f64, bool)> = (0..reps)
        .into_par_iter()
        .map(|i| {
            let out = simulate(&p, derive_stream_seed(202, 2 * i), &opts);
            let sizes = &out.snapshots[0].clone_sizes;
            let classes =
                classify_clone_sizes(sizes, &p, derive_stream_seed(202, 2 * i + 1), 1_000)
                    .unwrap();
            let surviving = classes.iter().filter(|c| c.surviving).count();
            let infinite = classes.iter().filter(|c| c.classified_infinite).count();
            (infinite as f64, surviving >= infinite)
        })
        .collect();

    let counts: Vec<f64> = results.iter().map(|r| r.0).collect();
    let subset_ok = results.iter().all(|r| r.1);
    let target = expected_clones(&p, z, 1.0).unwrap().infinite_lineage;
    let (m, se) = (mean(&counts), standard_error(&counts));
    let within = (m - target).abs() <= 4.0 * se;
    report(
        "2 (clone-count audit)",
        within && subset_ok,
        &format!(
            "mean infinite {m:.2} vs {target:.2} (se {se:.3}); surviving >= infinite in all {reps} replicates: {subset_ok}"
        ),
    );
}

#[test]
fn criterion_03_and_04_limit_audits() {
    let p = theta_star(100_000);
    let scale = (p.n as f64).powf(1.0 - p.alpha);
    let reps = 200u64;
    let pairs: Vec<(f64, f64)> = (0..reps)
        .into_par_iter()
        .filter_map(|i| {
            let out = simulate(&p, derive_stream_seed(303, i), &SimOpts::default());
            out.gamma?;
            let sizes = out.clone_sizes();
            Some((scale * simpson_index(&sizes), sizes.len() as f64 / scale))
        })
        .collect();

    let lc = limit_constants(&p);
    let simpson: Vec<f64> = pairs.iter().map(|x| x.0).collect();
    let clones: Vec<f64> = pairs.iter().map(|x| x.1).collect();

    let (m, se) = (mean(&simpson), standard_error(&simpson));
    let band = 4.0 * se + 0.1 * lc.simpson_coef;
    let ok3 = (m - lc.simpson_coef).abs() <= band;
    report(
        "3 (Simpson-limit audit)",
        ok3,
        &format!(
            "mean n^(1-a)·R = {m:.3} vs {} (4se + 10% band {band:.3}, {} recurrences)",
            lc.simpson_coef,
            simpson.len()
        ),
    );

    let (m, se) = (mean(&clones), standard_error(&clones));
    let band = 4.0 * se + 0.1 * lc.clone_count_coef;
    let ok4 = (m - lc.clone_count_coef).abs() <= band;
    report(
        "4 (clone-count limit audit)",
        ok4,
        &format!(
            "mean I/n^(1-a) = {m:.4} vs {:.4} (4se + 10% band {band:.4})",
            lc.clone_count_coef
        ),
    );
}

/// Shared convergence sweep for criteria 5 and 6.
fn convergence_sweep() -> Vec<SummaryRow> {
    let cfg = convergence_config(
        r#"{
            "experiment": "convergence",
            "params": {"alpha": 0.5, "r0": 0.5, "d0": 1.0, "r1": 1.5, "d1": 1.0},
            "n_values": [1000, 10000, 100000, 1000000],
            "replicates": 40,
            "base_seed": 505
        }"#,
    );
    run_experiment(&cfg).unwrap().summary
}

#[test]
fn criterion_05_and_06_convergence_sweep() {
    let summary = convergence_sweep();
    assert_eq!(summary.len(), 4);

    // Criterion 5: recurrence concentration.
    let devs: Vec<f64> = summary.iter().map(|s| s.median_abs_gamma_dev.unwrap()).collect();
    let decreasing = devs.windows(2).all(|w| w[1] < w[0]);
    let ns: Vec<f64> = summary.iter().map(|s| s.n as f64).collect();
    let slope = recur_core::stats::log_log_slope(&ns, &devs);
    report(
        "5 (recurrence concentration)",
        decreasing && slope < 0.0,
        &format!("median |gamma - zeta| by n: {devs:?}; log-log slope {slope:.3}"),
    );

    // Criterion 6: estimator consistency trend.
    let first = &summary[0];
    let last = &summary[3];
    type MedianField = fn(&SummaryRow) -> Option<f64>;
    let fields: [(&str, MedianField); 4] = [
        ("lambda0", |s| s.median_err.lambda0),
        ("lambda1", |s| s.median_err.lambda1),
        ("r1", |s| s.median_err.r1),
        ("alpha", |s| s.median_err.alpha),
    ];
    let mut ok = true;
    let mut details = Vec::new();
    for (name, get) in fields {
        let (lo, hi) = (get(last).unwrap(), get(first).unwrap());
        ok &= lo < hi;
        details.push(format!("{name}: {hi:.4} @1e3 -> {lo:.4} @1e6"));
    }
    let lambda0_at_1e6 = last.median_err.lambda0.unwrap();
    ok &= lambda0_at_1e6 < 0.02;
    report(
        "6 (estimator consistency)",
        ok,
        &format!("{}; median lambda0 error @1e6 = {lambda0_at_1e6:.5} (< 0.02)", details.join("; ")),
    );
}

#[test]
fn criterion_07_plug_in_limit_identity() {
    let p = theta_star(1_000_000);
    let z = zeta(&p);
    let lc = limit_constants(&p);
    let n = p.n as f64;
    let z0 = n * (p.lambda0() * z).exp();
    let i_n = lc.clone_count_coef * n.powf(1.0 - p.alpha);
    let r_n = lc.simpson_coef * n.powf(p.alpha - 1.0);
    let est = estimate_from_observables(p.n, z, z0, i_n, r_n);
    assert!(est.is_complete(), "{:?}", est.diagnostics);

    let l0_err = (est.lambda0_hat.unwrap() - p.lambda0()).abs() / -p.lambda0();
    let l1_err = (est.lambda1_hat.unwrap() - p.lambda1()).abs() / p.lambda1();
    // At the limit point r̂1 = r1·(1 − e^{(λ0−λ1)ζ}), so the relative
    // deviation equals the residual factor e^{(λ0−λ1)ζ} ≈ 1e-6.
    let residual = ((p.lambda0() - p.lambda1()) * z).exp();
    let r1_err = (est.r1_hat.unwrap() - p.r1).abs() / p.r1;
    let a_err = (est.alpha_hat.unwrap() - p.alpha).abs();
    let ok = l0_err < 1e-9 && l1_err < 1e-9 && r1_err <= 2e-6 && a_err < 1e-5;
    report(
        "7 (plug-in limit identity)",
        ok,
        &format!(
            "lambda0 rel {l0_err:.2e}, lambda1 rel {l1_err:.2e}, r1 rel {r1_err:.2e} \
             (residual factor {residual:.2e} <= 2e-6), alpha abs {a_err:.2e}"
        ),
    );
}

#[test]
fn criterion_08_oracle_equivalence() {
    let (r, d, t) = (1.5, 1.0, 1.0);
    let truncation = 64;
    let dist = master_equation_dist(r, d, 1, t, truncation).unwrap();
    let samples: Vec<u64> = (0..100_000u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(808, i);
            bd_population_at(r, d, 1, t, &mut rng)
        })
        .collect();
    let hist = EmpiricalHistogram::from_samples(samples.iter().copied(), truncation);
    let tv = total_variation(&dist, &hist).unwrap();

    let sq: Vec<f64> = samples.iter().map(|&s| (s as f64) * (s as f64)).collect();
    let (m2, se) = (mean(&sq), standard_error(&sq));
    let target = 8.066084617253631;
    let ok = tv < 0.02 && (m2 - target).abs() <= 4.0 * se;
    report(
        "8 (oracle equivalence)",
        ok,
        &format!("TV = {tv:.4} (< 0.02); second moment {m2:.4} vs {target:.4} (se {se:.4})"),
    );
}

#[test]
fn criterion_09_extinction_probability() {
    let runs = 100_000u64;
    let extinct = (0..runs)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = stream_rng(909, i);
            !escapes_before_extinction(1, 1.5, 1.0, 1_000, &mut rng)
        })
        .count();
    let freq = extinct as f64 / runs as f64;
    let target = 2.0 / 3.0;
    let se = (target * (1.0 - target) / runs as f64).sqrt();
    let ok = (freq - target).abs() <= 3.0 * se;
    report(
        "9 (extinction probability)",
        ok,
        &format!("extinction frequency {freq:.5} vs {target:.5} (3se = {:.5})", 3.0 * se),
    );
}

#[test]
fn criterion_10_threshold_robustness() {
    let p = theta_prime(100_000);
    let cfg = convergence_config(&format!(
        r#"{{
            "experiment": "threshold",
            "params": {{"alpha": {}, "r0": {}, "d0": {}, "r1": {}, "d1": {}, "n": {}}},
            "replicates": 40,
            "base_seed": 1010,
            "threshold_fracs": [0.0, 0.02, 0.10]
        }}"#,
        p.alpha, p.r0, p.d0, p.r1, p.d1, p.n
    ));
    let summary = run_experiment(&cfg).unwrap().summary;
    let by_variant = |v: &str| -> &SummaryRow {
        summary.iter().find(|s| s.variant == v).unwrap()
    };
    let base = by_variant("frac=0");
    let two = by_variant("frac=0.02");
    let ten = by_variant("frac=0.1");

    let l1_ratio = two.median_err.lambda1.unwrap() / base.median_err.lambda1.unwrap();
    let a_ratio = two.median_err.alpha.unwrap() / base.median_err.alpha.unwrap();
    let ten_worse = ten.median_err.alpha.unwrap() > base.median_err.alpha.unwrap();
    let ok = l1_ratio <= 2.0 && a_ratio <= 2.0 && ten_worse;
    report(
        "10 (threshold robustness)",
        ok,
        &format!(
            "2% vs plain medians: lambda1 x{l1_ratio:.2}, alpha x{a_ratio:.2} (<= 2); \
             10% alpha median {:.4} > plain {:.4}: {ten_worse}",
            ten.median_err.alpha.unwrap(),
            base.median_err.alpha.unwrap()
        ),
    );
}

#[test]
fn criterion_11_determinism_and_parallel_invariance() {
    let base = r#"{
        "experiment": "threshold",
        "params": {"alpha": 0.5, "r0": 0.5, "d0": 1.0, "r1": 1.5, "d1": 1.0, "n": 1000},
        "replicates": 3,
        "base_seed": 1111,
        "parallelism": PAR
    }"#;
    let rows_bytes = |workers: usize| {
        let cfg = convergence_config(&base.replace("PAR", &workers.to_string()));
        let artifacts = run_experiment(&cfg).unwrap();
        let mut buf = Vec::new();
        recur_core::harness::row::write_rows_csv(&mut buf, &artifacts.rows).unwrap();
        buf
    };
    let one = rows_bytes(1);
    let eight = rows_bytes(8);
    let rerun = rows_bytes(1);
    let ok = one == eight && one == rerun;
    report(
        "11 (determinism & parallel invariance)",
        ok,
        &format!(
            "rows.csv identical across reruns and 1 vs 8 workers ({} bytes)",
            one.len()
        ),
    );
}

#[test]
fn criterion_12_performance_single_replicate() {
    let p = theta_star(1_000_000);
    let started = Instant::now();
    let out = simulate(&p, 1212, &SimOpts::default());
    let elapsed = started.elapsed();
    let n = p.n;
    let ok = elapsed.as_secs_f64() < 60.0
        && out.termination == Termination::Recurrence
        && out.event_count >= n
        && out.event_count <= 50 * n;
    report(
        "12 (performance)",
        ok,
        &format!(
            "n = 1e6 replicate: {:?} (< 60 s), {} events in [n, 50n], termination {:?}",
            elapsed, out.event_count, out.termination
        ),
    );
}

#[test]
fn criterion_13_non_reproducible_targets_documented() {
    // The published figures carry no numeric tables and the reported
    // capacity-study p-values (0.2799, 0.5497, 0.0076) are single
    // stochastic draws; criteria 5, 6, and 10 stand in for the curves and
    // the Welch utility is pinned by its hand-computed example instead.
    let wt = recur_core::stats::welch_one_sided_t(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
    let ok = (wt.t + 1.224744871391589).abs() < 1e-12
        && (wt.df - 4.0).abs() < 1e-12
        && (wt.p_upper - 0.8560679326366546).abs() < 1e-9;
    report(
        "13 (explicitly not reproducible)",
        ok,
        "figure curves and one-shot p-values substituted by criteria 5/6/10 and the \
         hand-checked Welch example",
    );
}
