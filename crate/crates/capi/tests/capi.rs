//! Exercises the C ABI exactly as a foreign caller would: through raw
//! pointers and status codes, plus a syntax check of the generated
//! header.

use std::ptr;

use recur_capi::*;

#[test]
fn params_lifecycle_and_validation() {
    unsafe {
        let mut p: *mut RecurParams = ptr::null_mut();
        let st = recur_params_new(1000, 0.5, 0.5, 1.0, 1.5, 1.0, 1.0, &mut p);
        assert_eq!(st, RecurStatus::RecurOk);
        assert!(!p.is_null());
        assert!(!recur_params_consistency_warning(p));

        // With λ1 = −λ0 the root reduces to ζ = asinh(λ1 n^α)/λ1.
        let mut z = 0.0;
        assert_eq!(recur_zeta(p, &mut z), RecurStatus::RecurOk);
        assert!((z - (0.5 * 1000.0_f64.powf(0.5)).asinh() / 0.5).abs() < 1e-9);

        let mut lc = RecurLimitConstants {
            clone_count_coef: 0.0,
            simpson_coef: 0.0,
            u_limit: 0.0,
            survival_prob: 0.0,
            extinction_prob: 0.0,
        };
        assert_eq!(recur_limit_constants(p, &mut lc), RecurStatus::RecurOk);
        assert!((lc.clone_count_coef - 2.0 / 3.0).abs() < 1e-12);
        assert!((lc.simpson_coef - 4.0).abs() < 1e-12);
        recur_params_free(p);

        // λ0 >= 0 must be rejected.
        let mut bad: *mut RecurParams = ptr::null_mut();
        let st = recur_params_new(1000, 0.5, 1.0, 1.0, 1.5, 1.0, 1.0, &mut bad);
        assert_eq!(st, RecurStatus::RecurInvalidParams);
        assert!(bad.is_null());

        assert_eq!(
            recur_params_new(1000, 0.5, 0.5, 1.0, 1.5, 1.0, 1.0, ptr::null_mut()),
            RecurStatus::RecurNullPointer
        );
    }
}

#[test]
fn simulate_is_deterministic_over_the_abi() {
    unsafe {
        let mut p: *mut RecurParams = ptr::null_mut();
        recur_params_new(500, 0.5, 0.5, 1.0, 1.5, 1.0, 1.0, &mut p);

        let run = |seed: u64| -> (i32, f64, u64, u64, Vec<u64>) {
            let mut o: *mut RecurOutcome = ptr::null_mut();
            assert_eq!(recur_simulate(p, seed, 0, &mut o), RecurStatus::RecurOk);
            let term = recur_outcome_termination(o);
            let gamma = recur_outcome_gamma(o);
            let z0 = recur_outcome_z0(o);
            let events = recur_outcome_event_count(o);
            let len = recur_outcome_clone_count(o);
            let mut sizes = vec![0u64; len];
            assert_eq!(recur_outcome_clone_sizes(o, sizes.as_mut_ptr(), len), len);
            recur_outcome_free(o);
            (term, gamma, z0, events, sizes)
        };
        let a = run(7);
        let b = run(7);
        assert_eq!(a, b);
        let c = run(8);
        assert_ne!(a.3, c.3);
        recur_params_free(p);
    }
}

#[test]
fn capacity_status_and_null_handling() {
    unsafe {
        let mut p: *mut RecurParams = ptr::null_mut();
        recur_params_new(500, 0.5, 0.5, 1.0, 1.5, 1.0, 1.0, &mut p);
        let mut o: *mut RecurOutcome = ptr::null_mut();
        // Capacity at the threshold is invalid.
        assert_eq!(
            recur_simulate_capacity(p, 500, 1, 0, &mut o),
            RecurStatus::RecurInvalidCapacity
        );
        assert!(o.is_null());
        // Generous capacity runs fine.
        assert_eq!(
            recur_simulate_capacity(p, 1_000_000, 1, 0, &mut o),
            RecurStatus::RecurOk
        );
        recur_outcome_free(o);
        recur_params_free(p);

        assert_eq!(recur_outcome_termination(ptr::null()), -1);
        assert!(recur_outcome_gamma(ptr::null()).is_nan());
        assert_eq!(recur_outcome_clone_count(ptr::null()), 0);
        recur_outcome_free(ptr::null_mut());
        recur_params_free(ptr::null_mut());
    }
}

#[test]
fn estimate_matches_core_and_flags_diagnostics() {
    unsafe {
        let sizes: Vec<u64> = vec![1000, 500, 250, 125, 64, 32, 16, 8, 4, 2, 1];
        let mut out = RecurEstimates {
            lambda0_hat: 0.0,
            lambda1_hat: 0.0,
            r1_hat: 0.0,
            alpha_hat: 0.0,
            u_n: 0.0,
            diagnostics: 0,
        };
        let st = recur_estimate(10_000, 9.2, 95.0, sizes.as_ptr(), sizes.len(), &mut out);
        assert_eq!(st, RecurStatus::RecurOk);
        assert_eq!(out.diagnostics, 0);

        let obs = recur_core::estimate::Observation {
            n: 10_000,
            gamma: 9.2,
            z0: 95.0,
            clone_sizes: sizes.clone(),
        };
        let core = recur_core::estimate::estimate(&obs);
        assert_eq!(out.lambda0_hat, core.lambda0_hat.unwrap());
        assert_eq!(out.lambda1_hat, core.lambda1_hat.unwrap());
        assert_eq!(out.r1_hat, core.r1_hat.unwrap());
        assert_eq!(out.alpha_hat, core.alpha_hat.unwrap());

        // z0 = 0 sets the diagnostics bit and NaNs the field.
        let st = recur_estimate(10_000, 9.2, 0.0, sizes.as_ptr(), sizes.len(), &mut out);
        assert_eq!(st, RecurStatus::RecurOk);
        assert!(out.lambda0_hat.is_nan());
        assert_ne!(out.diagnostics & RECUR_DIAG_LAMBDA0_UNDEFINED, 0);

        assert_eq!(
            recur_estimate(10_000, 9.2, 95.0, ptr::null(), 3, &mut out),
            RecurStatus::RecurNullPointer
        );
        assert_eq!(recur_simpson_index(sizes.as_ptr(), 0), 0.0);
        let two = [2u64, 2u64];
        assert_eq!(recur_simpson_index(two.as_ptr(), 2), 0.5);
    }
}

#[test]
fn status_messages_are_c_strings() {
    for st in [
        RecurStatus::RecurOk,
        RecurStatus::RecurNullPointer,
        RecurStatus::RecurInvalidParams,
        RecurStatus::RecurInvalidCapacity,
        RecurStatus::RecurInvalidArgument,
    ] {
        let msg = recur_status_message(st);
        assert!(!msg.is_null());
        let text = unsafe { std::ffi::CStr::from_ptr(msg) }.to_str().unwrap();
        assert!(!text.is_empty());
    }
}

#[test]
fn generated_header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/recur.h");
    assert!(std::path::Path::new(header).exists(), "header not generated");
    let compiler = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok());
    let Some(cc) = compiler else {
        eprintln!("no C compiler found; skipping syntax check");
        return;
    };
    let out = std::process::Command::new(cc)
        .args(["-std=c99", "-fsyntax-only", "-x", "c", header])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "header failed C syntax check:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
