//! Observables and plug-in estimators from a single recurrence
//! observation.
//!
//! From `(n, γ, Z0(γ), clone sizes)` the four estimators are, in order,
//!
//! ```text
//! λ̂0 = log(Z0/n) / γ
//! U  = √(I·R)/√(I·R − 2) − 1
//! λ̂1 = −λ̂0 / U
//! r̂1 = (1/U + 1) · n λ̂1 / (I e^{λ̂1 γ})
//! α̂  = 1 − log_n I + log_n(λ̂1 / (−λ̂0 r̂1))
//! ```
//!
//! with `I` the surviving-clone count and `R` the Simpson's Index of the
//! clone-size spectrum. Each stage that cannot be computed records a
//! diagnostic and leaves its field (and the dependent ones) absent;
//! earlier stages are still reported.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelParams;
use crate::rng::seeded_rng;
use crate::sim::{SimOutcome, Termination};

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("diversity product I·R = {0} must exceed 2")]
    DiversityProductTooSmall(f64),
    #[error("u_statistic inputs out of domain: I = {i_n}, R = {r_n}")]
    InvalidInput { i_n: f64, r_n: f64 },
}

/// Estimator input: one tumor at its recurrence time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Initial sensitive burden.
    pub n: u64,
    /// Observed recurrence time (> 0).
    pub gamma: f64,
    /// Sensitive count at recurrence. Kept as a float so analytically
    /// constructed observations need not round.
    pub z0: f64,
    /// Positive resistant-clone sizes at recurrence.
    pub clone_sizes: Vec<u64>,
}

impl Observation {
    /// Extracts the observation from a recurrent trajectory; `None` for
    /// non-recurrent terminations.
    pub fn from_outcome(outcome: &SimOutcome, n: u64) -> Option<Self> {
        if outcome.termination != Termination::Recurrence {
            return None;
        }
        Some(Self {
            n,
            gamma: outcome.gamma?,
            z0: outcome.z0_at_end as f64,
            clone_sizes: outcome.clone_sizes(),
        })
    }
}

/// Per-field failure and warning codes attached to [`Estimates`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Diagnostic {
    /// `Z0 = 0` at recurrence: `λ̂0` needs `log Z0`.
    Lambda0Undefined,
    /// `λ̂0 >= 0` (sensitive count at recurrence not below `n`).
    Lambda0NotNegative,
    /// No clone survived to the observation time.
    NoSurvivingClones,
    /// `I·R <= 2`: the `U` statistic is undefined (n too small or the
    /// parameter regime violated).
    DiversityProductTooSmall,
    /// `λ̂1 <= 0`, so the `r̂1`/`α̂` logarithms are unavailable.
    Lambda1NotPositive,
    /// Preconditions violated (`γ <= 0`, `n < 2`, or non-finite input).
    InvalidObservation,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Diagnostic::Lambda0Undefined => "Lambda0Undefined",
            Diagnostic::Lambda0NotNegative => "Lambda0NotNegative",
            Diagnostic::NoSurvivingClones => "NoSurvivingClones",
            Diagnostic::DiversityProductTooSmall => "DiversityProductTooSmall",
            Diagnostic::Lambda1NotPositive => "Lambda1NotPositive",
            Diagnostic::InvalidObservation => "InvalidObservation",
        };
        f.write_str(s)
    }
}

/// Estimator output; absent fields correspond to recorded diagnostics.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimates {
    pub lambda0_hat: Option<f64>,
    pub lambda1_hat: Option<f64>,
    pub r1_hat: Option<f64>,
    pub alpha_hat: Option<f64>,
    pub u_n: Option<f64>,
    pub diagnostics: BTreeSet<Diagnostic>,
}

impl Estimates {
    pub fn is_complete(&self) -> bool {
        self.diagnostics.is_empty()
    }

    /// Diagnostics joined as `A|B` for tabular output.
    pub fn diagnostics_label(&self) -> String {
        self.diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("|")
    }
}

/// Relative estimation errors against known truth, per parameter.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RelativeErrors {
    pub lambda0: Option<f64>,
    pub lambda1: Option<f64>,
    pub r1: Option<f64>,
    pub alpha: Option<f64>,
}

/// Simpson's Index `Σ sᵢ² / (Σ sᵢ)²` of a size spectrum.
///
/// Both sums accumulate in 128-bit integers before a single floating
/// division, so spectra at `n = 10⁸` scale cannot overflow. Empty or
/// all-zero input returns 0 by convention.
pub fn simpson_index(sizes: &[u64]) -> f64 {
    let mut sum: u128 = 0;
    let mut sum_sq: u128 = 0;
    for &s in sizes {
        let s = s as u128;
        sum += s;
        sum_sq += s * s;
    }
    if sum == 0 {
        return 0.0;
    }
    (sum_sq as f64) / ((sum * sum) as f64)
}

/// Number of strictly positive entries.
pub fn surviving_clone_count(sizes: &[u64]) -> u64 {
    sizes.iter().filter(|&&s| s > 0).count() as u64
}

/// Keeps clones at least `frac` of the total tumor (residual sensitive
/// cells included in the denominator); boundary values are kept.
pub fn apply_detection_threshold(sizes: &[u64], z0: f64, frac: f64) -> Vec<u64> {
    assert!((0.0..1.0).contains(&frac), "detection fraction must lie in [0, 1)");
    let total = z0 + sizes.iter().map(|&s| s as f64).sum::<f64>();
    let threshold = frac * total;
    sizes.iter().copied().filter(|&s| s as f64 >= threshold).collect()
}

/// `U = √(I·R)/√(I·R − 2) − 1`; requires `I·R > 2`.
pub fn u_statistic(i_n: f64, r_n: f64) -> Result<f64, EstimateError> {
    if i_n.is_nan() || i_n < 1.0 || r_n.is_nan() || r_n <= 0.0 || r_n > 1.0 {
        return Err(EstimateError::InvalidInput { i_n, r_n });
    }
    let p = i_n * r_n;
    if p <= 2.0 {
        return Err(EstimateError::DiversityProductTooSmall(p));
    }
    Ok((p / (p - 2.0)).sqrt() - 1.0)
}

/// Runs the estimator pipeline on an observation.
pub fn estimate(obs: &Observation) -> Estimates {
    let i_n = surviving_clone_count(&obs.clone_sizes);
    let r_n = simpson_index(&obs.clone_sizes);
    estimate_from_observables(obs.n, obs.gamma, obs.z0, i_n as f64, r_n)
}

/// Estimator pipeline on pre-computed observables. `i_n` is a float so
/// exact non-integer clone counts (analytic limit values) can be fed
/// straight through.
pub fn estimate_from_observables(n: u64, gamma: f64, z0: f64, i_n: f64, r_n: f64) -> Estimates {
    let mut est = Estimates::default();
    if n < 2 || gamma.is_nan() || gamma <= 0.0 || !z0.is_finite() || z0 < 0.0 {
        est.diagnostics.insert(Diagnostic::InvalidObservation);
        return est;
    }
    let ln_n = (n as f64).ln();

    // λ̂0
    if z0 == 0.0 {
        est.diagnostics.insert(Diagnostic::Lambda0Undefined);
    } else {
        let l0 = (z0 / n as f64).ln() / gamma;
        if l0 >= 0.0 {
            est.diagnostics.insert(Diagnostic::Lambda0NotNegative);
        }
        est.lambda0_hat = Some(l0);
    }

    // U
    if i_n < 1.0 {
        est.diagnostics.insert(Diagnostic::NoSurvivingClones);
    } else {
        match u_statistic(i_n, r_n) {
            Ok(u) => est.u_n = Some(u),
            Err(_) => {
                est.diagnostics.insert(Diagnostic::DiversityProductTooSmall);
            }
        }
    }

    // λ̂1
    let (Some(l0), Some(u)) = (est.lambda0_hat, est.u_n) else {
        return est;
    };
    let l1 = -l0 / u;
    est.lambda1_hat = Some(l1);
    if l1 <= 0.0 {
        est.diagnostics.insert(Diagnostic::Lambda1NotPositive);
        return est;
    }

    // r̂1 assembled in log space so a large λ̂1·γ exponent cannot overflow
    // the intermediate; α̂ reuses the log form directly.
    let log_r1 = (1.0 / u + 1.0).ln() + ln_n + l1.ln() - i_n.ln() - l1 * gamma;
    est.r1_hat = Some(log_r1.exp());

    // α̂ = 1 − log_n I + log_n(λ̂1/(−λ̂0 r̂1))
    let alpha = 1.0 - i_n.ln() / ln_n + (l1.ln() - (-l0).ln() - log_r1) / ln_n;
    est.alpha_hat = Some(alpha);
    est
}

/// Mean Simpson's Index over `b` bootstrap samples: every sample keeps
/// the largest `keep_frac` share of clones (ties broken by original
/// index) and draws `⌊resample_frac·rest⌋` of the remaining clones
/// uniformly without replacement.
pub fn bootstrap_simpson(
    sizes: &[u64],
    keep_frac: f64,
    resample_frac: f64,
    b: u32,
    seed: u64,
) -> f64 {
    assert!((0.0..=1.0).contains(&keep_frac), "keep_frac must lie in [0, 1]");
    assert!((0.0..=1.0).contains(&resample_frac), "resample_frac must lie in [0, 1]");
    assert!(b >= 1, "bootstrap needs at least one sample");
    if sizes.is_empty() {
        return 0.0;
    }
    let k = sizes.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(sizes[i]), i));
    let kept = ((keep_frac * k as f64).ceil() as usize).min(k);
    let kept_sizes: Vec<u64> = order[..kept].iter().map(|&i| sizes[i]).collect();
    let rest: Vec<u64> = order[kept..].iter().map(|&i| sizes[i]).collect();
    let m = (resample_frac * rest.len() as f64).floor() as usize;
    if m == 0 {
        // Every sample is the kept set; in particular keep_frac = 1 is an
        // exact identity for any seed and b.
        return simpson_index(&kept_sizes);
    }

    let mut rng = seeded_rng(seed);
    let mut pool = rest.clone();
    let mut sample = Vec::with_capacity(kept + m);
    let mut acc = 0.0;
    for _ in 0..b {
        pool.copy_from_slice(&rest);
        for j in 0..m {
            let swap = rng.random_range(j..pool.len());
            pool.swap(j, swap);
        }
        sample.clear();
        sample.extend_from_slice(&kept_sizes);
        sample.extend_from_slice(&pool[..m]);
        acc += simpson_index(&sample);
    }
    acc / b as f64
}

/// Relative errors `|x̂ − x|/denom` with denominators `|λ0|, λ1, α, r1`.
pub fn relative_errors(est: &Estimates, truth: &ModelParams) -> RelativeErrors {
    let ratio = |hat: Option<f64>, target: f64, denom: f64| {
        hat.map(|h| (h - target).abs() / denom)
    };
    RelativeErrors {
        lambda0: ratio(est.lambda0_hat, truth.lambda0(), -truth.lambda0()),
        lambda1: ratio(est.lambda1_hat, truth.lambda1(), truth.lambda1()),
        r1: ratio(est.r1_hat, truth.r1, truth.r1),
        alpha: ratio(est.alpha_hat, truth.alpha, truth.alpha),
    }
}
