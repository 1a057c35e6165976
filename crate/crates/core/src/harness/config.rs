//! Experiment configuration: JSON schema, defaults, and validation.
//!
//! A config names an experiment, a parameter spec (fixed values or
//! per-field sampling windows), the initial-burden sweep, and replicate
//! bookkeeping. `resolve()` materializes every default so the run can be
//! echoed back verbatim alongside what was actually used.

use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::ModelParams;
use crate::rng::SimRng;
use crate::sim::DEFAULT_MAX_EVENTS;

use super::HarnessError;

/// Schema version written into `config-echo.json`.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Convergence,
    Threshold,
    Stability,
    Capacity,
    Bootstrap,
    Verify,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Threshold => "threshold",
            ExperimentKind::Stability => "stability",
            ExperimentKind::Capacity => "capacity",
            ExperimentKind::Bootstrap => "bootstrap",
            ExperimentKind::Verify => "verify",
        }
    }
}

/// A parameter field: either pinned or sampled uniformly per replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FieldSpec {
    Fixed(f64),
    Range { lo: f64, hi: f64 },
}

impl FieldSpec {
    fn sample(&self, rng: &mut SimRng) -> f64 {
        match *self {
            FieldSpec::Fixed(v) => v,
            FieldSpec::Range { lo, hi } => rng.random_range(lo..hi),
        }
    }

    fn validate(&self, field: &str) -> Result<(), HarnessError> {
        if let FieldSpec::Range { lo, hi } = *self {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(HarnessError::Config(format!(
                    "empty sampling window [{lo}, {hi}) for `{field}`"
                )));
            }
        }
        Ok(())
    }
}

/// Rates and exponent, each fixed or windowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub alpha: FieldSpec,
    pub r0: FieldSpec,
    pub d0: FieldSpec,
    pub r1: FieldSpec,
    pub d1: FieldSpec,
    /// Initial burden used when `n_values` is absent.
    #[serde(default)]
    pub n: Option<u64>,
    #[serde(default = "one")]
    pub beta: f64,
}

fn one() -> f64 {
    1.0
}

impl ParamSpec {
    pub fn fixed(p: &ModelParams) -> Self {
        Self {
            alpha: FieldSpec::Fixed(p.alpha),
            r0: FieldSpec::Fixed(p.r0),
            d0: FieldSpec::Fixed(p.d0),
            r1: FieldSpec::Fixed(p.r1),
            d1: FieldSpec::Fixed(p.d1),
            n: Some(p.n),
            beta: p.beta,
        }
    }

    /// Draws a concrete parameter set at burden `n`; windows are
    /// rejection-resampled until the structural constraints hold.
    pub fn sample(&self, n: u64, rng: &mut SimRng) -> Result<ModelParams, HarnessError> {
        for _ in 0..10_000 {
            let candidate = ModelParams {
                n,
                alpha: self.alpha.sample(rng),
                r0: self.r0.sample(rng),
                d0: self.d0.sample(rng),
                r1: self.r1.sample(rng),
                d1: self.d1.sample(rng),
                beta: self.beta,
            };
            if let Ok(valid) = candidate.validated() {
                return Ok(valid);
            }
        }
        Err(HarnessError::Config(
            "parameter windows produced no valid draw in 10000 attempts".into(),
        ))
    }

    fn validate(&self) -> Result<(), HarnessError> {
        self.alpha.validate("alpha")?;
        self.r0.validate("r0")?;
        self.d0.validate("d0")?;
        self.r1.validate("r1")?;
        self.d1.validate("d1")?;
        Ok(())
    }
}

/// The three single-parameter sweeps of the stability study. Each pins
/// the other rates and samples one quantity uniformly per replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilitySweep {
    /// `λ0` uniform in (−0.9, −0.1) via `r0 ~ U(0.8, 1.2)`, `d0 ~ U(1.3, 1.7)`.
    Lambda0,
    /// `λ1` uniform in (0.3, 0.9) via `r1 ~ U(1.4, 1.8)`, `d1 ~ U(0.7, 1.1)`.
    Lambda1,
    /// `α ~ U(0, 1)` at fixed rates with `λ0 = −0.5`, `λ1 = 0.5`.
    Alpha,
}

impl StabilitySweep {
    /// The per-field windows of this sweep mode.
    pub fn param_spec(&self) -> ParamSpec {
        // Degenerate α windows are nudged off the open-interval endpoints
        // so rejection sampling terminates quickly.
        match self {
            StabilitySweep::Lambda0 => ParamSpec {
                alpha: FieldSpec::Fixed(0.5),
                r0: FieldSpec::Range { lo: 0.8, hi: 1.2 },
                d0: FieldSpec::Range { lo: 1.3, hi: 1.7 },
                r1: FieldSpec::Fixed(1.5),
                d1: FieldSpec::Fixed(1.0),
                n: None,
                beta: 1.0,
            },
            StabilitySweep::Lambda1 => ParamSpec {
                alpha: FieldSpec::Fixed(0.5),
                r0: FieldSpec::Fixed(1.0),
                d0: FieldSpec::Fixed(1.5),
                r1: FieldSpec::Range { lo: 1.4, hi: 1.8 },
                d1: FieldSpec::Range { lo: 0.7, hi: 1.1 },
                n: None,
                beta: 1.0,
            },
            StabilitySweep::Alpha => ParamSpec {
                alpha: FieldSpec::Range { lo: 1e-3, hi: 1.0 - 1e-3 },
                r0: FieldSpec::Fixed(1.0),
                d0: FieldSpec::Fixed(1.5),
                r1: FieldSpec::Fixed(1.5),
                d1: FieldSpec::Fixed(1.0),
                n: None,
                beta: 1.0,
            },
        }
    }
}

/// Bootstrap refinement settings (§ defaults: keep the top 20% of
/// clones, resample 5/8 of the rest, 1000 samples).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    #[serde(default = "default_keep_frac")]
    pub keep_frac: f64,
    #[serde(default = "default_resample_frac")]
    pub resample_frac: f64,
    #[serde(default = "default_bootstrap_b")]
    pub b: u32,
}

fn default_keep_frac() -> f64 {
    0.2
}

fn default_resample_frac() -> f64 {
    0.625
}

fn default_bootstrap_b() -> u32 {
    1000
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            keep_frac: default_keep_frac(),
            resample_frac: default_resample_frac(),
            b: default_bootstrap_b(),
        }
    }
}

/// Experiment configuration as parsed from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "config_version")]
    pub version: u32,
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub params: Option<ParamSpec>,
    /// Shortcut selecting one of the stability sweep modes; fills in
    /// `params` when absent.
    #[serde(default)]
    pub sweep: Option<StabilitySweep>,
    #[serde(default)]
    pub n_values: Vec<u64>,
    #[serde(default = "default_replicates")]
    pub replicates: u32,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub threshold_fracs: Vec<f64>,
    #[serde(default)]
    pub capacity_values: Vec<u64>,
    #[serde(default)]
    pub bootstrap: Option<BootstrapConfig>,
    #[serde(default = "default_max_events")]
    pub max_events: u64,
    /// Worker count; 0 means all available cores.
    #[serde(default)]
    pub parallelism: usize,
    #[serde(default)]
    pub output_path: Option<PathBuf>,
}

fn config_version() -> u32 {
    CONFIG_VERSION
}

fn default_replicates() -> u32 {
    40
}

fn default_max_events() -> u64 {
    DEFAULT_MAX_EVENTS
}

/// A config with every default materialized.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub version: u32,
    pub experiment: ExperimentKind,
    pub params: ParamSpec,
    pub n_values: Vec<u64>,
    pub replicates: u32,
    pub base_seed: u64,
    pub threshold_fracs: Vec<f64>,
    pub capacity_values: Vec<u64>,
    pub bootstrap: BootstrapConfig,
    pub max_events: u64,
    pub parallelism: usize,
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(json: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(json)?)
    }

    /// Fills defaults and validates cross-field constraints.
    pub fn resolve(&self) -> Result<ResolvedConfig, HarnessError> {
        if self.replicates < 1 {
            return Err(HarnessError::Config("replicates must be >= 1".into()));
        }
        let params = match (&self.params, self.sweep) {
            (Some(p), None) => p.clone(),
            (None, Some(sweep)) => sweep.param_spec(),
            (Some(p), Some(sweep)) => {
                // Explicit params win; the sweep only names the mode.
                let _ = sweep;
                p.clone()
            }
            // The verification battery carries its own reference system.
            (None, None) if self.experiment == ExperimentKind::Verify => {
                ParamSpec::fixed(&ModelParams::new(2_000, 0.5, 0.5, 1.0, 1.5, 1.0))
            }
            (None, None) => {
                return Err(HarnessError::Config(
                    "config needs `params` or a stability `sweep`".into(),
                ))
            }
        };
        params.validate()?;

        let n_values = if !self.n_values.is_empty() {
            self.n_values.clone()
        } else if let Some(n) = params.n {
            vec![n]
        } else if self.experiment == ExperimentKind::Stability {
            vec![1_000_000]
        } else {
            return Err(HarnessError::Config("no `n_values` and no `params.n`".into()));
        };
        if n_values.iter().any(|&n| n < 2) {
            return Err(HarnessError::Config("every n must be >= 2".into()));
        }

        let threshold_fracs = if self.threshold_fracs.is_empty() {
            vec![0.0, 0.02, 0.10]
        } else {
            self.threshold_fracs.clone()
        };
        if threshold_fracs.iter().any(|f| !(0.0..1.0).contains(f)) {
            return Err(HarnessError::Config("threshold fractions must lie in [0, 1)".into()));
        }

        let capacity_values = if !self.capacity_values.is_empty() {
            self.capacity_values.clone()
        } else {
            let n = n_values[0];
            vec![2 * n, 5 * n]
        };
        if self.experiment == ExperimentKind::Capacity {
            let threshold = (params.beta * n_values[0] as f64).ceil() as u64;
            if let Some(&c) = capacity_values.iter().find(|&&c| c <= threshold) {
                return Err(HarnessError::Config(format!(
                    "capacity {c} does not exceed the recurrence threshold {threshold}"
                )));
            }
            // With fixed resistant rates the mean-field ceiling C·λ1/r1 is
            // known up front; below the threshold a replicate would grind
            // through the whole event cap without ever recurring.
            if let (FieldSpec::Fixed(r1), FieldSpec::Fixed(d1)) = (params.r1, params.d1) {
                let ratio = (r1 - d1) / r1;
                if let Some(&c) = capacity_values
                    .iter()
                    .find(|&&c| c as f64 * ratio <= threshold as f64)
                {
                    return Err(HarnessError::Config(format!(
                        "capacity {c} stalls resistant growth at {:.0} cells \
                         (C·λ1/r1), below the recurrence threshold {threshold}; \
                         raise C above {:.0} or lower d1/r1",
                        c as f64 * ratio,
                        threshold as f64 / ratio
                    )));
                }
            }
        }

        let bootstrap = self.bootstrap.unwrap_or_default();
        if !(0.0..=1.0).contains(&bootstrap.keep_frac)
            || !(0.0..=1.0).contains(&bootstrap.resample_frac)
            || bootstrap.b < 1
        {
            return Err(HarnessError::Config("bootstrap fractions in [0,1], b >= 1".into()));
        }

        if self.max_events < 1 {
            return Err(HarnessError::Config("max_events must be >= 1".into()));
        }

        Ok(ResolvedConfig {
            version: self.version,
            experiment: self.experiment,
            params,
            n_values,
            replicates: self.replicates,
            base_seed: self.base_seed,
            threshold_fracs,
            capacity_values,
            bootstrap,
            max_events: self.max_events,
            parallelism: self.parallelism,
            output_path: self.output_path.clone(),
        })
    }
}
