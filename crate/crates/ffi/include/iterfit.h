#ifndef ITERFIT_H
#define ITERFIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  ITERFIT_STATUS_OK = 0,
  ITERFIT_STATUS_NULL_POINTER = 1,
  /**
   * Bad configuration or argument value.
   */
  ITERFIT_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Empty dataset, non-finite values, non-positive weights.
   */
  ITERFIT_STATUS_INVALID_DATA = 3,
  /**
   * The data admits no fit (for example every input maps to zero).
   */
  ITERFIT_STATUS_FIT_FAILED = 4,
  ITERFIT_STATUS_PARSE_ERROR = 5,
  ITERFIT_STATUS_UNSUPPORTED_VERSION = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  ITERFIT_STATUS_INTERNAL = 7,
} IterfitStatus;

typedef enum {
  ITERFIT_FAMILY_SINE = 0,
  ITERFIT_FAMILY_COSINE = 1,
} IterfitFamily;

typedef enum {
  ITERFIT_BASE_ZERO = 0,
  ITERFIT_BASE_CONSTANT = 1,
  ITERFIT_BASE_LINEAR = 2,
} IterfitBase;

typedef enum {
  ITERFIT_TRANSFORM_IDENTITY = 0,
  /**
   * `g(x) = transform_scale * x + transform_offset`.
   */
  ITERFIT_TRANSFORM_AFFINE = 1,
  /**
   * Affine map sending the data's x range onto [0, 2*pi].
   */
  ITERFIT_TRANSFORM_SPAN_TWO_PI = 2,
} IterfitTransform;

typedef enum {
  ITERFIT_STOP_REASON_SS_TARGET_REACHED = 0,
  ITERFIT_STOP_REASON_MAX_ITERATIONS = 1,
  ITERFIT_STOP_REASON_NO_IMPROVING_CANDIDATE = 2,
  ITERFIT_STOP_REASON_VALIDATION_WORSENED = 3,
} IterfitStopReason;

/**
 * Opaque fitted model.
 */
typedef struct IterfitModel IterfitModel;

/**
 * Opaque fit report.
 */
typedef struct IterfitReport IterfitReport;

/**
 * Fit settings. Start from [`iterfit_config_default`] and override fields.
 */
typedef struct {
  double beta_min;
  double beta_max;
  size_t grid_points;
  size_t refine_steps;
  size_t max_iterations;
  double ss_target;
  double min_relative_decrease;
  /**
   * 0 disables validation and early stopping.
   */
  double validation_fraction;
  size_t validation_patience;
  uint64_t seed;
  IterfitFamily family;
  IterfitBase base;
  IterfitTransform transform;
  /**
   * Only read when `transform` is `Affine`.
   */
  double transform_scale;
  double transform_offset;
} IterfitConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Fills `out` with the library defaults.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `IterfitConfig`.
 */
IterfitStatus iterfit_config_default(IterfitConfig *out);

/**
 * Fits a series to `n` observations. `ws` may be null for unit weights.
 * `config` may be null for defaults; `out_report` may be null when the
 * report is not wanted. On success `*out_model` owns a new model.
 *
 * # Safety
 * `xs`, `ys` and non-null `ws` must each point to `n` doubles; `config`
 * must be null or valid; the out-pointers must be null or writable.
 */
IterfitStatus iterfit_fit(const double *xs,
                          const double *ys,
                          const double *ws,
                          size_t n,
                          const IterfitConfig *config,
                          IterfitModel **out_model,
                          IterfitReport **out_report);

/**
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
IterfitStatus iterfit_model_predict(const IterfitModel *model, double x, double *out);

/**
 * Evaluates the model at `n` points, writing `n` values to `out`.
 *
 * # Safety
 * `xs` must hold `n` doubles and `out` room for `n` doubles.
 */
IterfitStatus iterfit_model_predict_many(const IterfitModel *model,
                                         const double *xs,
                                         size_t n,
                                         double *out);

/**
 * Number of series terms; 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t iterfit_model_term_count(const IterfitModel *model);

/**
 * Reads term `index`. Any out-pointer may be null.
 *
 * # Safety
 * `model` must be a live handle; non-null out-pointers must be writable.
 */
IterfitStatus iterfit_model_term(const IterfitModel *model,
                                 size_t index,
                                 IterfitFamily *kind,
                                 double *beta,
                                 double *alpha);

/**
 * Serializes the model; free `*out` with [`iterfit_string_free`].
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
IterfitStatus iterfit_model_to_json(const IterfitModel *model, char **out);

/**
 * Parses a model file's text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out_model` must be writable.
 */
IterfitStatus iterfit_model_from_json(const char *json, IterfitModel **out_model);

/**
 * # Safety
 * `model` must be null or a handle not freed before.
 */
void iterfit_model_free(IterfitModel *model);

/**
 * SS of the base model alone; NaN for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
double iterfit_report_initial_ss(const IterfitReport *report);

/**
 * Training SS of the returned (possibly truncated) model.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
double iterfit_report_final_ss(const IterfitReport *report);

/**
 * Number of iterations run, including any later truncated away.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t iterfit_report_iterations(const IterfitReport *report);

/**
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
IterfitStatus iterfit_report_stop_reason(const IterfitReport *report, IterfitStopReason *out);

/**
 * Report as JSON; free `*out` with [`iterfit_string_free`].
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
IterfitStatus iterfit_report_to_json(const IterfitReport *report, char **out);

/**
 * # Safety
 * `report` must be null or a handle not freed before.
 */
void iterfit_report_free(IterfitReport *report);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string from this library not freed before.
 */
void iterfit_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on the same thread.
 */
const char *iterfit_last_error_message(void);

/**
 * Model file format version written by this library.
 */
uint32_t iterfit_format_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ITERFIT_H */
