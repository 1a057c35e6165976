//! Observed-data ingestion.
//!
//! Accepts a JSON observation in either of two clone encodings:
//!
//! ```json
//! {"n": 1000000, "gamma": 13.8, "z0": 1000, "clones": [500000, 300000, 200000]}
//! {"n": 1000000, "gamma": 13.8, "z0": 1000,
//!  "clones": [0.5, 0.3, 0.2], "total_resistant": 1000000}
//! ```
//!
//! The second form carries cancer-cell fractions of the resistant total;
//! fractions must sum to 1 within `1e-6` and are converted by rounding.
//! Clones that round to zero are dropped with a warning.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::estimate::Observation;

use super::HarnessError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObservation {
    n: u64,
    gamma: f64,
    z0: f64,
    clones: Vec<f64>,
    #[serde(default)]
    total_resistant: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct IngestedObservation {
    pub observation: Observation,
    pub warnings: Vec<String>,
}

pub fn ingest_observation(path: &Path) -> Result<IngestedObservation, HarnessError> {
    let text = fs::read_to_string(path)?;
    ingest_observation_str(&text)
}

pub fn ingest_observation_str(text: &str) -> Result<IngestedObservation, HarnessError> {
    let raw: RawObservation =
        serde_json::from_str(text).map_err(|e| HarnessError::Schema(e.to_string()))?;
    if raw.n < 2 {
        return Err(HarnessError::Schema(format!("n must be >= 2, got {}", raw.n)));
    }
    if !raw.gamma.is_finite() || raw.gamma <= 0.0 {
        return Err(HarnessError::Schema(format!("gamma must be > 0, got {}", raw.gamma)));
    }
    if !raw.z0.is_finite() || raw.z0 < 0.0 {
        return Err(HarnessError::Schema(format!("z0 must be >= 0, got {}", raw.z0)));
    }
    if raw.clones.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(HarnessError::Schema("clone entries must be finite and >= 0".into()));
    }

    let mut warnings = Vec::new();
    let clone_sizes = match raw.total_resistant {
        None => raw
            .clones
            .iter()
            .map(|&c| {
                if c.fract() != 0.0 {
                    return Err(HarnessError::Schema(format!(
                        "clone size {c} is not an integer (did you mean the \
                         fractions form with `total_resistant`?)"
                    )));
                }
                if c < 1.0 {
                    return Err(HarnessError::Schema(
                        "clone sizes must be >= 1 in the sizes form".into(),
                    ));
                }
                Ok(c as u64)
            })
            .collect::<Result<Vec<u64>, _>>()?,
        Some(total) => {
            if raw.clones.iter().any(|&f| f > 1.0) {
                return Err(HarnessError::Schema("fractions must lie in [0, 1]".into()));
            }
            let sum: f64 = raw.clones.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(HarnessError::Schema(format!(
                    "fractions sum to {sum}, expected 1 within 1e-6"
                )));
            }
            let mut sizes = Vec::with_capacity(raw.clones.len());
            for (i, &f) in raw.clones.iter().enumerate() {
                let size = (f * total as f64).round() as u64;
                if size == 0 {
                    warnings.push(format!(
                        "clone {i} (fraction {f}) rounds to zero cells and was dropped"
                    ));
                } else {
                    sizes.push(size);
                }
            }
            sizes
        }
    };

    Ok(IngestedObservation {
        observation: Observation {
            n: raw.n,
            gamma: raw.gamma,
            z0: raw.z0,
            clone_sizes,
        },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_form_round_trips() {
        let got = ingest_observation_str(
            r#"{"n": 1000, "gamma": 6.9, "z0": 31, "clones": [600, 300, 100]}"#,
        )
        .unwrap();
        assert_eq!(got.observation.clone_sizes, vec![600, 300, 100]);
        assert_eq!(got.observation.z0, 31.0);
        assert!(got.warnings.is_empty());
    }

    #[test]
    fn fractions_form_converts_by_rounding() {
        let got = ingest_observation_str(
            r#"{"n": 1000, "gamma": 6.9, "z0": 31,
                "clones": [0.5, 0.5], "total_resistant": 10}"#,
        )
        .unwrap();
        assert_eq!(got.observation.clone_sizes, vec![5, 5]);
    }

    #[test]
    fn zero_rounded_fraction_clones_warn() {
        let got = ingest_observation_str(
            r#"{"n": 1000, "gamma": 6.9, "z0": 31,
                "clones": [0.99996, 0.00004], "total_resistant": 1000}"#,
        )
        .unwrap();
        assert_eq!(got.observation.clone_sizes, vec![1000]);
        assert_eq!(got.warnings.len(), 1);
    }

    #[test]
    fn schema_violations_are_rejected() {
        // Fraction sum far from 1.
        assert!(ingest_observation_str(
            r#"{"n": 1000, "gamma": 6.9, "z0": 31,
                "clones": [0.5, 0.3], "total_resistant": 10}"#
        )
        .is_err());
        // Non-integer size in sizes form.
        assert!(ingest_observation_str(
            r#"{"n": 1000, "gamma": 6.9, "z0": 31, "clones": [10.5]}"#
        )
        .is_err());
        // Negative and out-of-domain values.
        for bad in [
            r#"{"n": 1000, "gamma": 6.9, "z0": 31, "clones": [-3]}"#,
            r#"{"n": 1000, "gamma": 0.0, "z0": 31, "clones": [3]}"#,
            r#"{"n": 1000, "gamma": 6.9, "z0": -1, "clones": [3]}"#,
            r#"{"n": 1, "gamma": 6.9, "z0": 31, "clones": [3]}"#,
            r#"{"n": 1000, "gamma": 6.9, "z0": 31, "clones": [3], "extra": 1}"#,
        ] {
            assert!(ingest_observation_str(bad).is_err(), "accepted: {bad}");
        }
    }
}
