#ifndef RIPFLOW_H
#define RIPFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RfStatus {
  RF_STATUS_OK = 0,
  RF_STATUS_NULL_POINTER = 1,
  RF_STATUS_DIMENSION = 2,
  RF_STATUS_INVALID_ARGUMENT = 3,
  RF_STATUS_INSUFFICIENT_DATA = 4,
  RF_STATUS_UNSUPPORTED_INPUT = 5,
  RF_STATUS_NO_COASTLINE = 6,
  RF_STATUS_UNDEFINED_GROUND_TRUTH = 7,
  RF_STATUS_NUMERICAL = 8,
  RF_STATUS_IO = 9,
  RF_STATUS_PANIC = 10,
} RfStatus;

typedef enum RfMethod {
  RF_METHOD_LK = 0,
  RF_METHOD_HS = 1,
  RF_METHOD_HOR_LK = 2,
  RF_METHOD_HOR_HS = 3,
} RfMethod;

/**
 * Opaque offshore direction field.
 */
typedef struct RfDirectionField RfDirectionField;

/**
 * Opaque likelihood accumulator.
 */
typedef struct RfLikelihood RfLikelihood;

/**
 * Opaque velocity field.
 */
typedef struct RfVelocityField RfVelocityField;

/**
 * Estimator parameters; see `rf_flow_config_default`.
 */
typedef struct RfFlowConfig {
  enum RfMethod method;
  size_t window;
  double gamma;
  double lambda_hor;
  size_t max_iters;
  double tol;
  double presmooth_sigma;
  double intensity_scale;
} RfFlowConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rf_version(void);

/**
 * Message for the last failed call on this thread, or NULL. Valid until
 * the next ripflow call on the same thread.
 */
const char *rf_last_error_message(void);

/**
 * Fills `out` with the default estimator parameters.
 *
 * # Safety
 * `out` must be NULL or valid for writes.
 */
enum RfStatus rf_flow_config_default(struct RfFlowConfig *out);

/**
 * Estimates the flow from frame `f0` to frame `f1` (grayscale,
 * `width * height` each) and stores a new handle in `out`.
 *
 * # Safety
 * Frame pointers must reference `width * height` readable doubles; `cfg`
 * and `out` must be valid pointers.
 */
enum RfStatus rf_flow_estimate(const double *f0,
                               const double *f1,
                               size_t width,
                               size_t height,
                               const struct RfFlowConfig *cfg,
                               struct RfVelocityField **out);

/**
 * # Safety
 * `field` must be NULL or a live handle.
 */
size_t rf_velocity_width(const struct RfVelocityField *field);

/**
 * # Safety
 * `field` must be NULL or a live handle.
 */
size_t rf_velocity_height(const struct RfVelocityField *field);

/**
 * Copies `u`, `v` (doubles) and `valid` (bytes) into caller buffers of
 * `len >= width * height` elements. Any destination may be NULL to skip it.
 *
 * # Safety
 * Non-NULL destinations must be writable for `len` elements.
 */
enum RfStatus rf_velocity_copy(const struct RfVelocityField *field,
                               double *u,
                               double *v,
                               uint8_t *valid,
                               size_t len);

/**
 * # Safety
 * `field` must be NULL or a handle not yet freed.
 */
void rf_velocity_free(struct RfVelocityField *field);

/**
 * Builds the offshore direction field from a shore mask (non-zero =
 * land, sky or other non-water) with default geometry parameters.
 *
 * # Safety
 * `shore` must reference `width * height` readable bytes; `out` must be
 * valid for writes.
 */
enum RfStatus rf_offshore_from_mask(const uint8_t *shore,
                                    size_t width,
                                    size_t height,
                                    struct RfDirectionField **out);

/**
 * Copies interleaved `(ox, oy)` pairs (`2 * width * height` doubles) and
 * validity bytes. Either destination may be NULL.
 *
 * # Safety
 * Non-NULL destinations must be writable for `2 * len` doubles and `len`
 * bytes respectively.
 */
enum RfStatus rf_direction_copy(const struct RfDirectionField *field,
                                double *dirs,
                                uint8_t *valid,
                                size_t len);

/**
 * # Safety
 * `field` must be NULL or a handle not yet freed.
 */
void rf_direction_free(struct RfDirectionField *field);

/**
 * New all-zero accumulator with `T = 0`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum RfStatus rf_likelihood_new(size_t width, size_t height, struct RfLikelihood **out);

/**
 * Applies the rip predicate to one flow field and adds the result.
 * `combined` is the exclusion mask (non-zero = shore or wave); NULL means
 * nothing is excluded.
 *
 * # Safety
 * Handles must be live; `combined` must be NULL or reference
 * `width * height` readable bytes.
 */
enum RfStatus rf_likelihood_accumulate(struct RfLikelihood *lik,
                                       const struct RfVelocityField *flow,
                                       const struct RfDirectionField *offshore,
                                       const uint8_t *combined,
                                       double speed_eps);

/**
 * Number of fields accumulated so far, or 0 for NULL.
 *
 * # Safety
 * `lik` must be NULL or a live handle.
 */
uint32_t rf_likelihood_t(const struct RfLikelihood *lik);

/**
 * Copies the counts into `counts` (`len >= width * height`).
 *
 * # Safety
 * `counts` must be writable for `len` elements.
 */
enum RfStatus rf_likelihood_copy_counts(const struct RfLikelihood *lik,
                                        uint32_t *counts,
                                        size_t len);

/**
 * Area under the precision-recall curve against a ground-truth mask.
 *
 * # Safety
 * `truth` must reference `width * height` readable bytes of the
 * accumulator's size; `auc` must be valid for writes.
 */
enum RfStatus rf_likelihood_pr_auc(const struct RfLikelihood *lik,
                                   const uint8_t *truth,
                                   double *auc);

/**
 * # Safety
 * `lik` must be NULL or a handle not yet freed.
 */
void rf_likelihood_free(struct RfLikelihood *lik);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIPFLOW_H */
