//! Exact continuous-time simulation of the two-type recurrence process.
//!
//! The event loop is a direct-method SSA: an exponential waiting time at
//! the current total rate, then one event chosen proportionally to the
//! channel weights
//!
//! - sensitive birth `r0·Z0`, sensitive death `d0·Z0`,
//! - mutation `n^{−α}·Z0` (a new resistant clone of size 1; `Z0` unchanged),
//! - resistant birth `r1·X_i` / death `d1·X_i` per clone `i`.
//!
//! Clone selection goes through a Fenwick tree keyed by clone index, so
//! each event costs `O(log K)` in the number of clones. A run stops at
//! the first event that lifts the resistant total to `β·n` (recurrence),
//! at global extinction, or at an event-count cap.
//!
//! The capacity variant scales every resistant birth by
//! `max(0, 1 − (Z0+Z1)/C)` via thinning: candidate births fire at the
//! constant bound `r1` and are accepted probabilistically, which keeps
//! the per-event cost unchanged under state-dependent rates.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fenwick::FenwickTree;
use crate::model::ModelParams;
use crate::rng::{seeded_rng, stream_rng, SimRng};

/// Default safety cap on executed events.
pub const DEFAULT_MAX_EVENTS: u64 = 20_000_000_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("capacity {capacity} must exceed the recurrence threshold {threshold}")]
    InvalidCapacity { capacity: u64, threshold: u64 },
    #[error("escape size must be >= 100, got {0}")]
    EscapeSizeTooSmall(u64),
    #[error("max_events must be >= 1")]
    InvalidMaxEvents,
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// Resistant total reached `β·n`.
    Recurrence,
    /// Both populations hit zero.
    Extinct,
    /// Event cap hit first.
    CapReached,
}

/// One resistant clone: when it was founded and how large it ended.
/// Extinct clones stay in the ledger with size 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloneRecord {
    pub founding_time: f64,
    pub size: u64,
}

/// Population state recorded at a requested time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub z0: u64,
    pub z1: u64,
    pub clone_sizes: Vec<u64>,
}

impl Snapshot {
    pub fn clones_alive(&self) -> usize {
        self.clone_sizes.iter().filter(|&&s| s > 0).count()
    }
}

/// Terminal record of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub termination: Termination,
    /// Recurrence time; present iff `termination == Recurrence`.
    pub gamma: Option<f64>,
    pub z0_at_end: u64,
    pub clone_ledger: Vec<CloneRecord>,
    pub event_count: u64,
    pub seed: u64,
    /// States at the requested `record_times`, in time order.
    pub snapshots: Vec<Snapshot>,
}

impl SimOutcome {
    /// Resistant total at termination.
    pub fn z1_at_end(&self) -> u64 {
        self.clone_ledger.iter().map(|c| c.size).sum()
    }

    /// Strictly positive clone sizes at termination.
    pub fn clone_sizes(&self) -> Vec<u64> {
        self.clone_ledger.iter().map(|c| c.size).filter(|&s| s > 0).collect()
    }
}

/// Run options.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimOpts {
    #[serde(default = "default_max_events")]
    pub max_events: u64,
    /// Times at which to record `(z0, z1, clone sizes)` snapshots.
    /// Times past termination record the terminal state (exact for
    /// extinction, boundary state otherwise).
    #[serde(default)]
    pub record_times: Vec<f64>,
    /// Emit a progress line to stderr every this many events (long runs
    /// sit behind a 2e10-event safety cap by default).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub progress_every: Option<u64>,
}

fn default_max_events() -> u64 {
    DEFAULT_MAX_EVENTS
}

impl Default for SimOpts {
    fn default() -> Self {
        Self { max_events: DEFAULT_MAX_EVENTS, record_times: Vec::new(), progress_every: None }
    }
}

/// Per-clone classification after a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineageClass {
    /// Size 0 at the end of the run.
    pub extinct_by_end: bool,
    /// Size > 0 at the end of the run.
    pub surviving: bool,
    /// Surviving and the continued private run reached the escape size
    /// before extinction.
    pub classified_infinite: bool,
}

enum Step {
    Continue,
    Done(Termination),
}

struct Engine<'a> {
    p: &'a ModelParams,
    mutation_rate: f64,
    threshold: u64,
    capacity: Option<u64>,
    t: f64,
    z0: u64,
    z1: u64,
    founding_times: Vec<f64>,
    index: FenwickTree,
    events: u64,
    rng: SimRng,
}

impl<'a> Engine<'a> {
    fn new(p: &'a ModelParams, seed: u64, capacity: Option<u64>) -> Self {
        Self {
            p,
            mutation_rate: p.mutation_rate(),
            threshold: p.recurrence_threshold(),
            capacity,
            t: 0.0,
            z0: p.n,
            z1: 0,
            founding_times: Vec::new(),
            index: FenwickTree::new(),
            events: 0,
            rng: seeded_rng(seed),
        }
    }

    fn total_rate(&self) -> f64 {
        let s = (self.p.r0 + self.p.d0 + self.mutation_rate) * self.z0 as f64;
        let r = (self.p.r1 + self.p.d1) * self.z1 as f64;
        s + r
    }

    /// Waiting time to the next event at the current state, or `None` at
    /// the absorbing all-zero state.
    fn draw_wait(&mut self) -> Option<f64> {
        let total = self.total_rate();
        if total <= 0.0 {
            return None;
        }
        Some(self.rng.sample::<f64, _>(Exp1) / total)
    }

    /// Applies one event at the already-advanced clock.
    fn apply_event(&mut self) -> Step {
        self.events += 1;
        let z0f = self.z0 as f64;
        let s_rate = (self.p.r0 + self.p.d0 + self.mutation_rate) * z0f;
        let r_rate = (self.p.r1 + self.p.d1) * self.z1 as f64;
        let u = self.rng.random::<f64>() * (s_rate + r_rate);

        // The z1 == 0 guard catches the rounding corner where u lands
        // exactly on s_rate with no resistant cells to select from.
        if u < s_rate || self.z1 == 0 {
            if u < self.p.r0 * z0f {
                self.z0 += 1;
            } else if u < (self.p.r0 + self.p.d0) * z0f {
                self.z0 -= 1;
                if self.z0 == 0 && self.z1 == 0 {
                    return Step::Done(Termination::Extinct);
                }
            } else {
                self.founding_times.push(self.t);
                self.index.push(1);
                self.z1 += 1;
                if self.z1 >= self.threshold {
                    return Step::Done(Termination::Recurrence);
                }
            }
        } else {
            let clone_idx = self.index.select(self.rng.random_range(0..self.z1));
            let birth =
                self.rng.random::<f64>() * (self.p.r1 + self.p.d1) < self.p.r1;
            if birth {
                if self.accept_resistant_birth() {
                    self.index.add(clone_idx, 1);
                    self.z1 += 1;
                    if self.z1 >= self.threshold {
                        return Step::Done(Termination::Recurrence);
                    }
                }
            } else {
                self.index.add(clone_idx, -1);
                self.z1 -= 1;
                if self.z0 == 0 && self.z1 == 0 {
                    return Step::Done(Termination::Extinct);
                }
            }
        }
        debug_assert_eq!(self.index.total(), self.z1);
        Step::Continue
    }

    /// Thinning acceptance for the capacity variant; always true baseline.
    fn accept_resistant_birth(&mut self) -> bool {
        match self.capacity {
            None => true,
            Some(c) => {
                let p_acc = (1.0 - (self.z0 + self.z1) as f64 / c as f64).max(0.0);
                p_acc > 0.0 && self.rng.random::<f64>() < p_acc
            }
        }
    }

    fn snapshot_at(&self, time: f64) -> Snapshot {
        let sizes: Vec<u64> =
            (0..self.index.len()).map(|i| self.clone_size(i)).collect();
        Snapshot { time, z0: self.z0, z1: self.z1, clone_sizes: sizes }
    }

    fn clone_size(&self, i: usize) -> u64 {
        let below = if i == 0 { 0 } else { self.index.prefix_sum(i - 1) };
        self.index.prefix_sum(i) - below
    }

    /// Full ledger audit: cached totals against the tree. `O(K)`.
    fn check_ledger(&self) {
        let sum: u64 = (0..self.index.len()).map(|i| self.clone_size(i)).sum();
        assert_eq!(sum, self.z1, "ledger sum diverged from cached z1");
        assert_eq!(self.index.total(), self.z1, "rate index total diverged");
    }

    fn run(mut self, seed: u64, opts: &SimOpts) -> SimOutcome {
        let mut record: Vec<f64> = opts.record_times.clone();
        record.sort_by(f64::total_cmp);
        let mut next_rec = 0;
        let mut snapshots = Vec::with_capacity(record.len());

        let termination = loop {
            if self.events >= opts.max_events {
                break Termination::CapReached;
            }
            if let Some(every) = opts.progress_every {
                if self.events > 0 && self.events.is_multiple_of(every) {
                    eprintln!(
                        "progress: {} events, t = {:.4}, z0 = {}, z1 = {}",
                        self.events, self.t, self.z0, self.z1
                    );
                }
            }
            let Some(wait) = self.draw_wait() else {
                break Termination::Extinct;
            };
            let t_next = self.t + wait;
            while next_rec < record.len() && record[next_rec] < t_next {
                snapshots.push(self.snapshot_at(record[next_rec]));
                next_rec += 1;
            }
            self.t = t_next;
            if let Step::Done(term) = self.apply_event() {
                break term;
            }
        };

        // Remaining requested times see the terminal state.
        for &time in &record[next_rec..] {
            snapshots.push(self.snapshot_at(time));
        }

        self.check_ledger();
        let ledger = self
            .founding_times
            .iter()
            .enumerate()
            .map(|(i, &ft)| CloneRecord { founding_time: ft, size: self.clone_size(i) })
            .collect();
        SimOutcome {
            gamma: (termination == Termination::Recurrence).then_some(self.t),
            termination,
            z0_at_end: self.z0,
            clone_ledger: ledger,
            event_count: self.events,
            seed,
            snapshots,
        }
    }
}

/// Simulates one trajectory of the baseline model. Identical
/// `(params, seed, opts)` produce identical outcomes.
pub fn simulate(p: &ModelParams, seed: u64, opts: &SimOpts) -> SimOutcome {
    Engine::new(p, seed, None).run(seed, opts)
}

/// Simulates under a carrying capacity `C`: resistant births use the
/// effective per-cell rate `r1·max(0, 1 − (Z0+Z1)/C)`.
///
/// Note that the resistant population stalls near the mean-field
/// equilibrium `C·λ1/r1`; when that sits below `β·n`, recurrence is
/// reachable only through large fluctuations and runs will typically end
/// at the event cap.
pub fn simulate_capacity(
    p: &ModelParams,
    capacity: u64,
    seed: u64,
    opts: &SimOpts,
) -> Result<SimOutcome, SimError> {
    let threshold = p.recurrence_threshold();
    if capacity <= threshold {
        return Err(SimError::InvalidCapacity { capacity, threshold });
    }
    Ok(Engine::new(p, seed, Some(capacity)).run(seed, opts))
}

/// Classifies every ledger clone of a finished run.
///
/// A surviving clone is `classified_infinite` when a continued private
/// simulation of just that clone (rates `r1`, `d1`, no further feeding
/// mutations) reaches `escape_size` before hitting 0. The per-clone
/// misclassification probability is at most `(d1/r1)^escape_size`.
pub fn classify_lineages(
    outcome: &SimOutcome,
    p: &ModelParams,
    seed: u64,
    escape_size: u64,
) -> Result<Vec<LineageClass>, SimError> {
    let sizes: Vec<u64> = outcome.clone_ledger.iter().map(|c| c.size).collect();
    classify_clone_sizes(&sizes, p, seed, escape_size)
}

/// Same classification applied to a raw clone-size spectrum (for example
/// a snapshot state). Clone `i` uses its own RNG stream derived from
/// `(seed, i)`, so results do not depend on evaluation order.
pub fn classify_clone_sizes(
    sizes: &[u64],
    p: &ModelParams,
    seed: u64,
    escape_size: u64,
) -> Result<Vec<LineageClass>, SimError> {
    if escape_size < 100 {
        return Err(SimError::EscapeSizeTooSmall(escape_size));
    }
    Ok(sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| {
            if size == 0 {
                LineageClass {
                    extinct_by_end: true,
                    surviving: false,
                    classified_infinite: false,
                }
            } else {
                let mut rng = stream_rng(seed, i as u64);
                let infinite =
                    escapes_before_extinction(size, p.r1, p.d1, escape_size, &mut rng);
                LineageClass {
                    extinct_by_end: false,
                    surviving: true,
                    classified_infinite: infinite,
                }
            }
        })
        .collect())
}

/// Runs the embedded jump chain of a birth-death process from `start`
/// until it hits 0 (extinction) or `escape` (treated as never-extinct).
pub fn escapes_before_extinction(
    start: u64,
    r: f64,
    d: f64,
    escape: u64,
    rng: &mut SimRng,
) -> bool {
    let mut size = start;
    while size > 0 && size < escape {
        if rng.random::<f64>() * (r + d) < r {
            size += 1;
        } else {
            size -= 1;
        }
    }
    size >= escape
}

/// Exact SSA endpoint of a plain birth-death population at time `t_end`.
/// Used by the distribution audits; shares no code with the master
/// equation it is compared against.
pub fn bd_population_at(r: f64, d: f64, z0: u64, t_end: f64, rng: &mut SimRng) -> u64 {
    let mut z = z0;
    let mut t = 0.0;
    while z > 0 {
        let total = (r + d) * z as f64;
        t += rng.sample::<f64, _>(Exp1) / total;
        if t > t_end {
            break;
        }
        if rng.random::<f64>() * (r + d) < r {
            z += 1;
        } else {
            z -= 1;
        }
    }
    z
}
