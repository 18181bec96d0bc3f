#ifndef SIDEBANDIT_H
#define SIDEBANDIT_H

/* Generated by cbindgen from sidebandit-ffi; regenerate by building that crate. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every ABI call.
 */
typedef enum SbStatus {
  /**
   * Success.
   */
  SB_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SB_STATUS_NULL_ARGUMENT = 1,
  /**
   * An argument was out of range or inconsistent.
   */
  SB_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The simulation or estimation failed; see the argument constraints.
   */
  SB_STATUS_RUNTIME_ERROR = 3,
  /**
   * A file could not be read or written.
   */
  SB_STATUS_IO_ERROR = 4,
  /**
   * An internal panic was caught at the ABI boundary.
   */
  SB_STATUS_PANIC = 5,
} SbStatus;

/**
 * Opaque offline dataset handle.
 */
typedef struct SbDataset SbDataset;

/**
 * Opaque bandit environment handle.
 */
typedef struct SbEnv SbEnv;

/**
 * Opaque regret trace handle.
 */
typedef struct SbTrace SbTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates an environment with seeded weights and behavior policy.
 *
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
enum SbStatus sb_env_create(size_t dim,
                            size_t n_arms,
                            double noise_sd,
                            uint64_t seed,
                            struct SbEnv **out);

/**
 * Releases an environment; a null handle is ignored.
 *
 * # Safety
 * `env` must be null or a pointer returned by [`sb_env_create`] that has
 * not been freed yet.
 */
void sb_env_free(struct SbEnv *env);

/**
 * Reads the context dimension.
 *
 * # Safety
 * `env` must be a live environment handle; `out` must be writable.
 */
enum SbStatus sb_env_dim(const struct SbEnv *env, size_t *out);

/**
 * Reads the number of arms.
 *
 * # Safety
 * `env` must be a live environment handle; `out` must be writable.
 */
enum SbStatus sb_env_arms(const struct SbEnv *env, size_t *out);

/**
 * Logs `rows` behavior-policy rounds, keeping the first `visible_dim`
 * context coordinates. Fails with `RuntimeError` if some arm is never
 * sampled; retry with another seed.
 *
 * # Safety
 * `env` must be a live environment handle; `out` must be writable.
 */
enum SbStatus sb_dataset_generate(const struct SbEnv *env,
                                  size_t visible_dim,
                                  size_t rows,
                                  uint64_t seed,
                                  struct SbDataset **out);

/**
 * Releases a dataset; a null handle is ignored.
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
void sb_dataset_free(struct SbDataset *ds);

/**
 * Reads the number of logged rows.
 *
 * # Safety
 * `ds` must be a live dataset handle; `out` must be writable.
 */
enum SbStatus sb_dataset_rows(const struct SbDataset *ds, size_t *out);

/**
 * Writes a dataset to `path` in the binary log format.
 *
 * # Safety
 * `ds` must be a live dataset handle; `path` must be a nul-terminated
 * string.
 */
enum SbStatus sb_dataset_save(const struct SbDataset *ds, const char *path);

/**
 * Loads a dataset previously written by [`sb_dataset_save`].
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum SbStatus sb_dataset_load(const char *path, struct SbDataset **out);

/**
 * Runs the no-side-information optimistic baseline for `horizon` rounds.
 *
 * # Safety
 * `env` must be a live environment handle; `out` must be writable.
 */
enum SbStatus sb_run_baseline(const struct SbEnv *env,
                              double alpha,
                              size_t horizon,
                              uint64_t seed,
                              struct SbTrace **out);

/**
 * Runs the online-estimation learner: per-arm regressions on the first
 * `visible_dim` dataset coordinates, cross moments re-estimated from
 * behavior policy queries on a doubling schedule.
 *
 * # Safety
 * `env` and `ds` must be live handles from this library; `out` must be
 * writable.
 */
enum SbStatus sb_run_estimated(const struct SbEnv *env,
                               const struct SbDataset *ds,
                               size_t visible_dim,
                               double alpha,
                               size_t horizon,
                               uint64_t seed,
                               struct SbTrace **out);

/**
 * Releases a trace; a null handle is ignored.
 *
 * # Safety
 * `trace` must be null or a live trace handle.
 */
void sb_trace_free(struct SbTrace *trace);

/**
 * Reads the number of rounds in a trace.
 *
 * # Safety
 * `trace` must be a live trace handle; `out` must be writable.
 */
enum SbStatus sb_trace_len(const struct SbTrace *trace, size_t *out);

/**
 * Reads the final cumulative regret.
 *
 * # Safety
 * `trace` must be a live trace handle; `out` must be writable.
 */
enum SbStatus sb_trace_total_regret(const struct SbTrace *trace, double *out);

/**
 * Copies per-round regrets into caller-owned buffers. Either destination
 * may be null to skip it; a non-null destination must hold at least
 * `capacity >= len` values.
 *
 * # Safety
 * `trace` must be a live trace handle; non-null destinations must point to
 * at least `capacity` writable doubles.
 */
enum SbStatus sb_trace_copy(const struct SbTrace *trace,
                            double *inst_out,
                            double *cum_out,
                            size_t capacity);

/**
 * Static name for a status code, always a valid nul-terminated string.
 */
const char *sb_status_name(enum SbStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIDEBANDIT_H */
