//! Model parameters and closed-form quantities for the two-type
//! branching process.
//!
//! The process starts from `n` sensitive cells declining under treatment
//! (birth rate `r0`, death rate `d0`, net growth `λ0 = r0 − d0 < 0`).
//! Each sensitive cell seeds a new resistant clone at rate `n^{−α}`;
//! clones grow as independent supercritical birth-death processes
//! (`r1`, `d1`, `λ1 = r1 − d1 > 0`). Recurrence is the first time the
//! total resistant population reaches `β·n`.
//!
//! Everything in this module is a pure function of value inputs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for the `zeta` root residual.
pub const ZETA_REL_TOL: f64 = 1e-10;

/// Rate-difference threshold below which the `λ0 + λ1 = 0` branch of the
/// ghost-clone bound is used (below double-precision resolution of the
/// exponent difference over the time spans of interest).
pub const NEUTRAL_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },
    #[error("time must be nonnegative, got {0}")]
    InvalidTime(f64),
    #[error("constant must be positive, got {0}")]
    InvalidConstant(f64),
    #[error("critical birth-death case r = d = {0} is not supported")]
    UnsupportedCriticalCase(f64),
    #[error("initial count must be >= 1, got {0}")]
    InvalidCount(u64),
}

/// Parameter vector `θ = (α, r0, d0, r1, d1)` plus the initial burden `n`
/// and the recurrence multiplier `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Initial sensitive-cell count.
    pub n: u64,
    /// Mutation exponent: each sensitive cell mutates at rate `n^{−α}`.
    pub alpha: f64,
    /// Sensitive birth rate.
    pub r0: f64,
    /// Sensitive death rate.
    pub d0: f64,
    /// Resistant birth rate.
    pub r1: f64,
    /// Resistant death rate.
    pub d1: f64,
    /// Recurrence threshold multiplier: recurrence at `Z1 >= β·n`.
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_beta() -> f64 {
    1.0
}

impl ModelParams {
    pub fn new(n: u64, alpha: f64, r0: f64, d0: f64, r1: f64, d1: f64) -> Self {
        Self { n, alpha, r0, d0, r1, d1, beta: 1.0 }
    }

    /// Net growth rate of the sensitive population (negative for valid params).
    pub fn lambda0(&self) -> f64 {
        self.r0 - self.d0
    }

    /// Net growth rate of a resistant clone (positive for valid params).
    pub fn lambda1(&self) -> f64 {
        self.r1 - self.d1
    }

    /// Per-sensitive-cell mutation rate `n^{−α}`.
    pub fn mutation_rate(&self) -> f64 {
        (self.n as f64).powf(-self.alpha)
    }

    /// Recurrence threshold `⌈β·n⌉` in cells.
    pub fn recurrence_threshold(&self) -> u64 {
        (self.beta * self.n as f64).ceil() as u64
    }

    /// Checks every structural constraint and returns the record unchanged.
    ///
    /// The estimator consistency condition `α < min{1, λ1/|λ0|}` is *not*
    /// an error; query it separately via
    /// [`consistency_warning`](Self::consistency_warning).
    pub fn validated(self) -> Result<Self, ModelError> {
        let err = |field: &'static str, reason: String| ModelError::InvalidParams { field, reason };
        for (field, v) in [
            ("alpha", self.alpha),
            ("r0", self.r0),
            ("d0", self.d0),
            ("r1", self.r1),
            ("d1", self.d1),
            ("beta", self.beta),
        ] {
            if !v.is_finite() {
                return Err(err(field, format!("must be finite, got {v}")));
            }
        }
        for (field, v) in [("r0", self.r0), ("d0", self.d0), ("r1", self.r1), ("d1", self.d1)] {
            if v < 0.0 {
                return Err(err(field, format!("rate must be nonnegative, got {v}")));
            }
        }
        if self.lambda0() >= 0.0 {
            return Err(err("r0", format!("λ0 = r0 − d0 = {} must be negative", self.lambda0())));
        }
        if self.lambda1() <= 0.0 {
            return Err(err("r1", format!("λ1 = r1 − d1 = {} must be positive", self.lambda1())));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(err("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if self.n < 1 {
            return Err(err("n", format!("must be >= 1, got {}", self.n)));
        }
        if self.beta < 1.0 {
            return Err(err("beta", format!("must be >= 1, got {}", self.beta)));
        }
        Ok(self)
    }

    /// True when `α >= min{1, λ1/|λ0|}`, the regime where the plug-in
    /// estimators lose their consistency guarantee. Non-fatal.
    pub fn consistency_warning(&self) -> bool {
        let bound = (self.lambda1() / -self.lambda0()).min(1.0);
        self.alpha >= bound
    }
}

/// Large-`n` limit constants of the recurrence observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitConstants {
    /// Limit of `I_n(γ_n) / n^{1−α}`: `−λ1/(λ0 r1)`.
    pub clone_count_coef: f64,
    /// Limit of `n^{1−α} R_n(γ_n)`: `2 r1 (λ1−λ0)² / (λ1 (2λ1−λ0))`.
    pub simpson_coef: f64,
    /// Limit of the `U_n` statistic: `−λ0/λ1`.
    pub u_limit: f64,
    /// Survival probability of a resistant clone: `λ1/r1`.
    pub survival_prob: f64,
    /// Extinction probability of a resistant clone: `d1/r1`.
    pub extinction_prob: f64,
}

/// Closed-form clone-count expectations at time `t`, plus the ghost-clone
/// bound (clones alive at `t` but destined for extinction).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedClones {
    /// Expected number of mutation events in `(0, t)`.
    pub ever_created: f64,
    /// Expected number of those clones with an infinite lineage.
    pub infinite_lineage: f64,
    /// Upper bound (up to the caller's constant `c1`) on the expected
    /// surviving-minus-infinite clone count.
    pub ghost_bound: f64,
}

/// Mean curves `(Φ0(t), Φ1(t))` of the sensitive and resistant populations.
///
/// `Φ0(t) = n e^{λ0 t}` and
/// `Φ1(t) = n^{1−α} e^{λ1 t} (1 − e^{(λ0−λ1) t}) / (λ1−λ0)`.
pub fn mean_curves(p: &ModelParams, t: f64) -> Result<(f64, f64), ModelError> {
    if t.is_nan() || t < 0.0 {
        return Err(ModelError::InvalidTime(t));
    }
    let (l0, l1) = (p.lambda0(), p.lambda1());
    let n = p.n as f64;
    let phi0 = n * (l0 * t).exp();
    let phi1 = n.powf(1.0 - p.alpha) * (l1 * t).exp() * (1.0 - ((l0 - l1) * t).exp()) / (l1 - l0);
    Ok((phi0, phi1))
}

/// Deterministic recurrence-time proxy: the unique root of `Φ1(t) = n`.
///
/// Found by bisection to a relative residual below [`ZETA_REL_TOL`];
/// the initial bracket `[0, 2(α/λ1)·log n + 10/λ1]` is doubled until it
/// contains the root. Asymptotically `ζ_n ~ (α/λ1)·log n`.
///
/// Assumes validated params (root existence follows from monotonicity).
pub fn zeta(p: &ModelParams) -> f64 {
    let n = p.n as f64;
    let l1 = p.lambda1();
    let phi1 = |t: f64| mean_curves(p, t).expect("t >= 0").1;

    let mut hi = 2.0 * (p.alpha / l1) * n.ln() + 10.0 / l1;
    let mut doublings = 0;
    while phi1(hi) < n {
        hi *= 2.0;
        doublings += 1;
        assert!(doublings < 200, "zeta bracket failed to expand; invalid params?");
    }
    let mut lo = 0.0_f64;
    while hi - lo > 1e-14 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if phi1(mid) < n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    debug_assert!((phi1(root) - n).abs() / n < ZETA_REL_TOL);
    root
}

/// Limit constants for validated params.
pub fn limit_constants(p: &ModelParams) -> LimitConstants {
    let (l0, l1) = (p.lambda0(), p.lambda1());
    LimitConstants {
        clone_count_coef: -l1 / (l0 * p.r1),
        simpson_coef: 2.0 * p.r1 * (l1 - l0).powi(2) / (l1 * (2.0 * l1 - l0)),
        u_limit: -l0 / l1,
        survival_prob: l1 / p.r1,
        extinction_prob: p.d1 / p.r1,
    }
}

/// Expected clone counts over `(0, t)` and the ghost-clone bound with
/// caller-supplied constant `c1` (the bound's constant is not pinned by
/// theory; 1.0 is the conventional default).
pub fn expected_clones(p: &ModelParams, t: f64, c1: f64) -> Result<ExpectedClones, ModelError> {
    if t.is_nan() || t < 0.0 {
        return Err(ModelError::InvalidTime(t));
    }
    if c1.is_nan() || c1 <= 0.0 {
        return Err(ModelError::InvalidConstant(c1));
    }
    let (l0, l1) = (p.lambda0(), p.lambda1());
    let scale = (p.n as f64).powf(1.0 - p.alpha);
    let ever_created = scale * (1.0 - (l0 * t).exp()) / -l0;
    let infinite_lineage = (l1 / p.r1) * ever_created;
    let sum = l0 + l1;
    let bound = if sum.abs() < NEUTRAL_SUM_TOL {
        (c1 * p.d1 / p.r1) * t * (-l1 * t).exp()
    } else {
        (c1 * p.d1 / (p.r1 * sum)) * ((l0 * t).exp() - (-l1 * t).exp())
    };
    Ok(ExpectedClones { ever_created, infinite_lineage, ghost_bound: scale * bound })
}

/// Second moment of a birth-death process at time `t`.
///
/// Single ancestor: `E[Z(t)²] = (2r/λ) e^{2λt} − ((r+d)/λ) e^{λt}`.
/// `z0` ancestors: `E[Z(t)²] = z0 ((r+d)/λ) e^{λt}(e^{λt}−1) + z0² e^{2λt}`.
/// The two agree at `z0 = 1`. The critical case `r = d` is rejected.
pub fn bd_second_moment(r: f64, d: f64, z0: u64, t: f64) -> Result<f64, ModelError> {
    if r == d {
        return Err(ModelError::UnsupportedCriticalCase(r));
    }
    if t.is_nan() || t < 0.0 {
        return Err(ModelError::InvalidTime(t));
    }
    if z0 < 1 {
        return Err(ModelError::InvalidCount(z0));
    }
    let lam = r - d;
    let e = (lam * t).exp();
    if z0 == 1 {
        Ok((2.0 * r / lam) * e * e - ((r + d) / lam) * e)
    } else {
        let n = z0 as f64;
        Ok(n * ((r + d) / lam) * e * (e - 1.0) + n * n * e * e)
    }
}
