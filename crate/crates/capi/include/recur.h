#ifndef RECUR_H
#define RECUR_H

/* Generated by cbindgen from recur-capi; regenerate with `cargo build -p recur-capi`. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * `Z0 = 0` at recurrence; `lambda0_hat` is undefined.
 */
#define RECUR_DIAG_LAMBDA0_UNDEFINED (1 << 0)

/**
 * `lambda0_hat >= 0`.
 */
#define RECUR_DIAG_LAMBDA0_NOT_NEGATIVE (1 << 1)

/**
 * No surviving clones in the spectrum.
 */
#define RECUR_DIAG_NO_SURVIVING_CLONES (1 << 2)

/**
 * `I·R <= 2`; the `U` statistic is undefined.
 */
#define RECUR_DIAG_DIVERSITY_PRODUCT_TOO_SMALL (1 << 3)

/**
 * `lambda1_hat <= 0`.
 */
#define RECUR_DIAG_LAMBDA1_NOT_POSITIVE (1 << 4)

/**
 * Preconditions violated (`gamma <= 0`, `n < 2`, bad `z0`).
 */
#define RECUR_DIAG_INVALID_OBSERVATION (1 << 5)

/**
 * Status code returned by fallible entry points.
 */
typedef enum RecurStatus {
  RecurOk = 0,
  RecurNullPointer = 1,
  RecurInvalidParams = 2,
  RecurInvalidCapacity = 3,
  RecurInvalidArgument = 4,
} RecurStatus;

/**
 * Opaque finished trajectory.
 */
typedef struct RecurOutcome RecurOutcome;

/**
 * Opaque validated parameter set.
 */
typedef struct RecurParams RecurParams;

/**
 * Limit constants of the recurrence observables.
 */
typedef struct RecurLimitConstants {
  double clone_count_coef;
  double simpson_coef;
  double u_limit;
  double survival_prob;
  double extinction_prob;
} RecurLimitConstants;

/**
 * Estimates by value; absent fields are NaN with a diagnostics bit set.
 */
typedef struct RecurEstimates {
  double lambda0_hat;
  double lambda1_hat;
  double r1_hat;
  double alpha_hat;
  double u_n;
  /**
   * Bitwise OR of the `RECUR_DIAG_*` flags; 0 means complete.
   */
  uint32_t diagnostics;
} RecurEstimates;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Validates and allocates a parameter set.
 *
 * # Safety
 * `out` must be a valid pointer; the returned handle must be released
 * with `recur_params_free`.
 */
enum RecurStatus recur_params_new(uint64_t n,
                                  double alpha,
                                  double r0,
                                  double d0,
                                  double r1,
                                  double d1,
                                  double beta,
                                  struct RecurParams **out);

/**
 * Releases a parameter handle; null is a no-op.
 *
 * # Safety
 * `p` must be null or a pointer from `recur_params_new`.
 */
void recur_params_free(struct RecurParams *p);

/**
 * True when the estimator consistency condition
 * `alpha < min(1, lambda1/|lambda0|)` fails for these parameters.
 *
 * # Safety
 * `p` must be a valid parameter handle.
 */
bool recur_params_consistency_warning(const struct RecurParams *p);

/**
 * Deterministic recurrence-time proxy `zeta_n` (root of `Phi1(t) = n`).
 *
 * # Safety
 * `p` and `out` must be valid pointers.
 */
enum RecurStatus recur_zeta(const struct RecurParams *p, double *out);

/**
 * Large-n limits of the recurrence observables.
 *
 * # Safety
 * `p` and `out` must be valid pointers.
 */
enum RecurStatus recur_limit_constants(const struct RecurParams *p,
                                       struct RecurLimitConstants *out);

/**
 * Runs one exact trajectory to recurrence/extinction/cap.
 * `max_events = 0` selects the default cap.
 *
 * # Safety
 * `p` and `out` must be valid pointers; release the outcome with
 * `recur_outcome_free`.
 */
enum RecurStatus recur_simulate(const struct RecurParams *p,
                                uint64_t seed,
                                uint64_t max_events,
                                struct RecurOutcome **out);

/**
 * Capacity variant: resistant births are thinned by
 * `max(0, 1 - (Z0+Z1)/capacity)`. `capacity` must exceed `beta * n`.
 *
 * # Safety
 * As for `recur_simulate`.
 */
enum RecurStatus recur_simulate_capacity(const struct RecurParams *p,
                                         uint64_t capacity,
                                         uint64_t seed,
                                         uint64_t max_events,
                                         struct RecurOutcome **out);

/**
 * Releases an outcome handle; null is a no-op.
 *
 * # Safety
 * `o` must be null or a pointer from a simulate call.
 */
void recur_outcome_free(struct RecurOutcome *o);

/**
 * 0 = recurrence, 1 = extinct, 2 = cap reached, -1 = null handle.
 *
 * # Safety
 * `o` must be null or a valid outcome handle.
 */
int32_t recur_outcome_termination(const struct RecurOutcome *o);

/**
 * Recurrence time, or NaN when the run did not recur.
 *
 * # Safety
 * `o` must be null or a valid outcome handle.
 */
double recur_outcome_gamma(const struct RecurOutcome *o);

/**
 * Sensitive count at termination.
 *
 * # Safety
 * `o` must be null or a valid outcome handle.
 */
uint64_t recur_outcome_z0(const struct RecurOutcome *o);

/**
 * Total executed events.
 *
 * # Safety
 * `o` must be null or a valid outcome handle.
 */
uint64_t recur_outcome_event_count(const struct RecurOutcome *o);

/**
 * Ledger length (clones ever founded, including extinct ones).
 *
 * # Safety
 * `o` must be null or a valid outcome handle.
 */
size_t recur_outcome_clone_count(const struct RecurOutcome *o);

/**
 * Copies up to `cap` ledger clone sizes into `buf` and returns the full
 * ledger length (call with `cap = 0` to size the buffer).
 *
 * # Safety
 * `buf` must point to at least `cap` writable `uint64_t`s.
 */
size_t recur_outcome_clone_sizes(const struct RecurOutcome *o, uint64_t *buf, size_t cap);

/**
 * Simpson's Index of a size spectrum (0 for empty input).
 *
 * # Safety
 * `sizes` must point to `len` readable `uint64_t`s (or be null with
 * `len = 0`).
 */
double recur_simpson_index(const uint64_t *sizes, size_t len);

/**
 * Runs the plug-in estimators on `(n, gamma, z0, clone sizes)`.
 * Absent fields come back as NaN with a diagnostics bit set; the call
 * itself only fails on null pointers.
 *
 * # Safety
 * `sizes` must point to `len` readable `uint64_t`s (or be null with
 * `len = 0`); `out` must be valid.
 */
enum RecurStatus recur_estimate(uint64_t n,
                                double gamma,
                                double z0,
                                const uint64_t *sizes,
                                size_t len,
                                struct RecurEstimates *out);

/**
 * Static description of a status code.
 */
const char *recur_status_message(enum RecurStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RECUR_H */
