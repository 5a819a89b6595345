#ifndef QSWAP_H
#define QSWAP_H

/* Generated by cbindgen from crates/qswap-ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QswapStatus {
  QSWAP_STATUS_OK = 0,
  QSWAP_STATUS_NULL_POINTER = 1,
  QSWAP_STATUS_INVALID_ARGUMENT = 2,
  QSWAP_STATUS_NUMERICAL = 3,
  QSWAP_STATUS_NO_HERALD = 4,
  QSWAP_STATUS_PANIC = 5,
} QswapStatus;

typedef enum QswapAncilla {
  QSWAP_ANCILLA_WCS = 0,
  QSWAP_ANCILLA_TMS = 1,
  QSWAP_ANCILLA_HSPS = 2,
} QswapAncilla;

/**
 * Network configuration handle.
 */
typedef struct QswapConfig QswapConfig;

/**
 * Gaussian state handle.
 */
typedef struct QswapState QswapState;

typedef struct QswapRate {
  double bits_per_round;
  double conditional_rate;
  double accept_probability;
  double sift_probability;
  double h_key;
  double h_test;
} QswapRate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *qswap_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qswap_version(void);

/**
 * New configuration with every parameter zero; `k = 0` means `k = d`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum QswapStatus qswap_config_new(size_t d,
                                  size_t k,
                                  enum QswapAncilla ancilla,
                                  struct QswapConfig **out);

/**
 * Parse a JSON network description (same fields as the CLI `network`
 * section).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum QswapStatus qswap_config_from_json(const char *json, struct QswapConfig **out);

/**
 * Set one numeric field: "s", "xi", "alpha", "theta" or "eta".
 *
 * # Safety
 * `cfg` must come from a `qswap_config_*` constructor; `field` must be a
 * NUL-terminated string.
 */
enum QswapStatus qswap_config_set(struct QswapConfig *cfg, const char *field, double value);

/**
 * # Safety
 * `cfg` must be null or a handle not yet freed.
 */
void qswap_config_free(struct QswapConfig *cfg);

/**
 * Full pipeline: heralds, both bases, key rate.
 *
 * # Safety
 * `cfg` must be a live handle and `out` writable.
 */
enum QswapStatus qswap_evaluate(const struct QswapConfig *cfg, struct QswapRate *out);

/**
 * Number of perfect heralding patterns for dimension `d`.
 *
 * # Safety
 * `out` must be writable.
 */
enum QswapStatus qswap_herald_count(size_t d, size_t *out);

/**
 * Vacuum state on `n_modes` modes.
 *
 * # Safety
 * `out` must be writable.
 */
enum QswapStatus qswap_state_vacuum(size_t n_modes, struct QswapState **out);

/**
 * # Safety
 * `st` must be a live state handle.
 */
enum QswapStatus qswap_state_two_mode_squeeze(struct QswapState *st, size_t a, size_t b, double s);

/**
 * # Safety
 * `st` must be a live state handle.
 */
enum QswapStatus qswap_state_squeeze(struct QswapState *st, size_t mode, double r);

/**
 * # Safety
 * `st` must be a live state handle.
 */
enum QswapStatus qswap_state_displace(struct QswapState *st, size_t mode, double re, double im);

/**
 * # Safety
 * `st` must be null or a handle not yet freed.
 */
void qswap_state_free(struct QswapState *st);

/**
 * Probability that no photon reaches any of the listed modes.
 *
 * # Safety
 * `st` must be a live handle, `subset` must hold `n` entries (may be null
 * when `n == 0`) and `out` must be writable.
 */
enum QswapStatus qswap_vacuum_probability(const struct QswapState *st,
                                          const size_t *subset,
                                          size_t n,
                                          double *out);

/**
 * Threshold-detector probability that every `clicked` mode fires and
 * every `silent` mode stays dark.
 *
 * # Safety
 * `st` must be a live handle; the arrays must hold the stated number of
 * entries (may be null when empty); `out` must be writable.
 */
enum QswapStatus qswap_click_probability(const struct QswapState *st,
                                         const size_t *clicked,
                                         size_t n_clicked,
                                         const size_t *silent,
                                         size_t n_silent,
                                         double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QSWAP_H */
