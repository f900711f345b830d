#ifndef SEQDIAG_H
#define SEQDIAG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SeqdiagStatus {
  SEQDIAG_STATUS_OK = 0,
  /**
   * Null pointer, bad UTF-8 or a buffer of the wrong length.
   */
  SEQDIAG_STATUS_INVALID_ARGUMENT = 1,
  SEQDIAG_STATUS_INVALID_MODEL = 2,
  SEQDIAG_STATUS_INVALID_PARAMETER = 3,
  /**
   * An observation outside the model's support, or a statistic that
   * became NaN or infinite.
   */
  SEQDIAG_STATUS_NON_FINITE = 4,
  /**
   * Run-config parse or validation error.
   */
  SEQDIAG_STATUS_CONFIG = 5,
  /**
   * A design produced an empty feasible set (report still returned).
   */
  SEQDIAG_STATUS_INFEASIBLE = 6,
  /**
   * Some estimate is flagged unreliable (report still returned).
   */
  SEQDIAG_STATUS_UNRELIABLE = 7,
  SEQDIAG_STATUS_IO = 8,
  /**
   * A Rust panic was caught at the boundary.
   */
  SEQDIAG_STATUS_INTERNAL = 9,
} SeqdiagStatus;

/**
 * Opaque change model.
 */
typedef struct SeqdiagModel SeqdiagModel;

/**
 * Opaque online procedure bound to a model.
 */
typedef struct SeqdiagProcedure SeqdiagProcedure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *seqdiag_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *seqdiag_version(void);

/**
 * Scalar observations, `f = N(0, 1)` and `g_i = N(θ_i, 1)`.
 *
 * # Safety
 * `thetas` must point to `k` readable doubles and `out` must be writable.
 */
enum SeqdiagStatus seqdiag_model_gaussian_mean_shift(const double *thetas,
                                                     size_t k,
                                                     struct SeqdiagModel **out);

/**
 * Independent Gaussian channels. A change shifts one channel from
 * `N(pre_mean, pre_sd²)` to `N(post_mean, post_sd²)`; with `simultaneous`
 * (two channels only) a third alternative shifts both.
 *
 * # Safety
 * `out` must be writable.
 */
enum SeqdiagStatus seqdiag_model_multichannel(size_t channels,
                                              double pre_mean,
                                              double pre_sd,
                                              double post_mean,
                                              double post_sd,
                                              bool simultaneous,
                                              struct SeqdiagModel **out);

/**
 * Number of post-change alternatives `K` (0 for a null handle).
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t seqdiag_model_alternatives(const struct SeqdiagModel *model);

/**
 * Observation dimension (0 for a null handle).
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t seqdiag_model_dim(const struct SeqdiagModel *model);

/**
 * # Safety
 * `model` must be null or a handle not yet freed. Procedures created from
 * it stay valid.
 */
void seqdiag_model_free(struct SeqdiagModel *model);

/**
 * Creates a procedure. `variant` is one of `min_cusum`, `matrix`,
 * `adaptive`, `vector`, `generalized_m<window>`, `generalized_full`.
 *
 * # Safety
 * `model` must be a live handle, `variant` a NUL-terminated string and
 * `out` writable.
 */
enum SeqdiagStatus seqdiag_procedure_new(const struct SeqdiagModel *model,
                                         const char *variant,
                                         double b,
                                         double h,
                                         struct SeqdiagProcedure **out);

/**
 * Feeds one observation of `len` values (the model dimension). Writes the
 * decided alternative to `decision` when the procedure stops, or -1.
 *
 * # Safety
 * `proc_` must be a live handle, `x` must point to `len` doubles and
 * `decision` must be writable.
 */
enum SeqdiagStatus seqdiag_procedure_step(struct SeqdiagProcedure *proc_,
                                          const double *x,
                                          size_t len,
                                          int64_t *decision);

/**
 * Copies the current `Y_i` and `W_i` (`K` values each) into `y` and `w`;
 * either may be null. `W_i` is +∞ when it does not apply.
 *
 * # Safety
 * `proc_` must be a live handle and non-null buffers must hold `k` doubles.
 */
enum SeqdiagStatus seqdiag_procedure_statistics(const struct SeqdiagProcedure *proc_,
                                                double *y,
                                                double *w,
                                                size_t k);

/**
 * Observations processed since creation or the last reset.
 *
 * # Safety
 * `proc_` must be null or a live handle.
 */
uint64_t seqdiag_procedure_steps(const struct SeqdiagProcedure *proc_);

/**
 * Clears all statistics.
 *
 * # Safety
 * `proc_` must be null or a live handle.
 */
void seqdiag_procedure_reset(struct SeqdiagProcedure *proc_);

/**
 * # Safety
 * `proc_` must be null or a handle not yet freed.
 */
void seqdiag_procedure_free(struct SeqdiagProcedure *proc_);

/**
 * Runs a CLI subcommand (`calibrate`, `design`, `evaluate`,
 * `misid-sweep`, `demo-paths`) on a TOML run config. The JSON report is
 * returned in `report_json` (free with [`seqdiag_string_free`]); when
 * `out_dir` is non-null the CSV tables are written there too. Returns
 * `Infeasible` or `Unreliable` with a valid report when the run flags
 * either condition.
 *
 * # Safety
 * String arguments must be NUL-terminated (`out_dir` may be null) and
 * `report_json` writable.
 */
enum SeqdiagStatus seqdiag_run_config(const char *config_toml,
                                      const char *command,
                                      const char *out_dir,
                                      char **report_json);

/**
 * Frees a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string from [`seqdiag_run_config`] not yet freed.
 */
void seqdiag_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEQDIAG_H */
