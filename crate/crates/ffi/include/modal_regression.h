#ifndef MODAL_REGRESSION_H
#define MODAL_REGRESSION_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MrLoss {
  /**
   * Correntropy-induced loss (modal regression).
   */
  MR_LOSS_MR = 0,
  MR_LOSS_HUBER = 1,
  MR_LOSS_LAD = 2,
} MrLoss;

/**
 * Result code of every fallible call.
 */
typedef enum MrStatus {
  MR_STATUS_OK = 0,
  /**
   * A parameter is out of range or inconsistent.
   */
  MR_STATUS_INVALID_ARGUMENT = 1,
  /**
   * A required pointer was null.
   */
  MR_STATUS_NULL_POINTER = 2,
  /**
   * The solver failed (singular system, vanishing weights, ...).
   */
  MR_STATUS_NUMERICAL = 3,
  /**
   * Malformed JSON or text input.
   */
  MR_STATUS_PARSE = 4,
  /**
   * A caller-provided buffer is too small.
   */
  MR_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * An internal panic was caught.
   */
  MR_STATUS_PANIC = 6,
} MrStatus;

typedef enum MrToyModel {
  MR_TOY_MODEL_TOY1 = 0,
  MR_TOY_MODEL_TOY2 = 1,
} MrToyModel;

typedef enum MrNoise {
  MR_NOISE_MIXTURE_SKEWED = 0,
  MR_NOISE_GAUSSIAN = 1,
  MR_NOISE_STUDENT_T3 = 2,
  MR_NOISE_CONTAMINATED_GAUSSIAN = 3,
} MrNoise;

/**
 * A dataset of inputs and responses.
 */
typedef struct MrDataset MrDataset;

/**
 * A fitted kernel model.
 */
typedef struct MrModel MrModel;

/**
 * Parameters of [`mr_fit`]. Start from [`mr_fit_params_default`].
 */
typedef struct MrFitParams {
  enum MrLoss loss;
  /**
   * Scale of the MR and Huber losses; ignored for LAD.
   */
  double sigma;
  double lambda;
  /**
   * Gaussian kernel bandwidth.
   */
  double bandwidth;
  uint32_t max_iter;
  double tol;
  /**
   * Start from the LAD fit instead of zero.
   */
  bool lad_start;
} MrFitParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string.
 */
const char *mr_version(void);

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *mr_last_error_message(void);

/**
 * Defaults: MR loss, `sigma = 1`, `lambda = 1e-3`, `bandwidth = 1`,
 * 100 iterations, tolerance `1e-8`, zero start.
 */
struct MrFitParams mr_fit_params_default(void);

/**
 * Draws a synthetic dataset of `n` points.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum MrStatus mr_dataset_generate(enum MrToyModel model,
                                  enum MrNoise noise,
                                  size_t n,
                                  uint64_t seed,
                                  struct MrDataset **out);

/**
 * Builds a dataset from `n` row-major inputs of dimension `d` and `n`
 * responses. The arrays are copied.
 *
 * # Safety
 * `x` must point to `n * d` doubles, `y` to `n` doubles and `out` to
 * writable storage for one handle.
 */
enum MrStatus mr_dataset_from_arrays(const double *x,
                                     const double *y,
                                     size_t n,
                                     size_t d,
                                     struct MrDataset **out);

/**
 * Number of observations; 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t mr_dataset_len(const struct MrDataset *ds);

/**
 * Input dimension; 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t mr_dataset_dim(const struct MrDataset *ds);

/**
 * Copies the inputs row-major into `buf`, which holds `len` doubles.
 *
 * # Safety
 * `ds` must be a live dataset handle and `buf` must point to `len` doubles.
 */
enum MrStatus mr_dataset_copy_x(const struct MrDataset *ds, double *buf, size_t len);

/**
 * Copies the responses into `buf`, which holds `len` doubles.
 *
 * # Safety
 * `ds` must be a live dataset handle and `buf` must point to `len` doubles.
 */
enum MrStatus mr_dataset_copy_y(const struct MrDataset *ds, double *buf, size_t len);

/**
 * Releases a dataset; null is ignored.
 *
 * # Safety
 * `ds` must be null or a handle not yet freed.
 */
void mr_dataset_free(struct MrDataset *ds);

/**
 * Fits a Gaussian-kernel model by IRLS.
 *
 * # Safety
 * `ds` must be a live dataset handle, `params` must point to a valid
 * parameter block and `out` to writable storage for one handle.
 */
enum MrStatus mr_fit(const struct MrDataset *ds,
                     const struct MrFitParams *params,
                     struct MrModel **out);

/**
 * Predicts at `n` row-major points of dimension `d` into `out` (`n` doubles).
 *
 * # Safety
 * `model` must be a live model handle, `x` must point to `n * d` doubles and
 * `out` to `n` doubles.
 */
enum MrStatus mr_model_predict(const struct MrModel *model,
                               const double *x,
                               size_t n,
                               size_t d,
                               double *out);

/**
 * Intercept `b`; NaN for a null handle.
 *
 * # Safety
 * `model` must be null or a live model handle.
 */
double mr_model_intercept(const struct MrModel *model);

/**
 * Number of expansion coefficients; 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live model handle.
 */
size_t mr_model_len(const struct MrModel *model);

/**
 * Serializes a model to JSON. Release the string with [`mr_string_free`].
 *
 * # Safety
 * `model` must be a live model handle and `out` must point to writable
 * storage for one pointer.
 */
enum MrStatus mr_model_to_json(const struct MrModel *model, char **out);

/**
 * Parses a model from JSON.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` must point to writable
 * storage for one handle.
 */
enum MrStatus mr_model_from_json(const char *json, struct MrModel **out);

/**
 * Releases a model; null is ignored.
 *
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void mr_model_free(struct MrModel *model);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void mr_string_free(char *s);

/**
 * Evaluates a loss at residual `t`.
 *
 * # Safety
 * `out` must point to one writable double.
 */
enum MrStatus mr_loss_eval(enum MrLoss loss, double sigma, double t, double *out);

/**
 * IRLS weight `|L'(t)| / |t|` of a loss at residual `t`.
 *
 * # Safety
 * `out` must point to one writable double.
 */
enum MrStatus mr_irls_weight(enum MrLoss loss, double sigma, double t, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MODAL_REGRESSION_H */
