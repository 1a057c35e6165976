//! Simulator and inference toolkit for tumor-recurrence dynamics under a
//! two-type branching-process model.
//!
//! The crate covers the full loop from model to data and back:
//!
//! - [`model`] — parameter validation and every closed-form quantity
//!   (mean curves, the deterministic recurrence proxy `ζ_n`, limit
//!   constants, exact clone-count expectation, moment formulas);
//! - [`sim`] — exact event-by-event simulation to recurrence with
//!   per-clone bookkeeping, an optional carrying capacity, and
//!   infinite-lineage classification;
//! - [`estimate`] — clonal-diversity observables (Simpson's Index,
//!   surviving-clone count, detection thresholds, bootstrap refinement)
//!   and the consistent plug-in estimators of `λ0`, `λ1`, `r1`, `α`;
//! - [`oracle`] — independent master-equation and Monte Carlo audits of
//!   the simulator and formulas;
//! - [`stats`] — Welch's one-sided t-test and summary helpers;
//! - [`harness`] — experiment campaigns, replicate orchestration, and
//!   file I/O behind the `recur` command-line tool.

pub mod estimate;
pub mod fenwick;
pub mod harness;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod sim;
pub mod stats;
