#ifndef TWOVIEW_H
#define TWOVIEW_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TvStatus {
  TV_STATUS_OK = 0,
  TV_STATUS_NULL_POINTER = 1,
  TV_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Input is valid but admits no meaningful estimate.
   */
  TV_STATUS_DEGENERATE = 3,
  TV_STATUS_IO = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  TV_STATUS_INTERNAL = 5,
} TvStatus;

typedef enum TvExtraction {
  TV_EXTRACTION_HARD = 0,
  TV_EXTRACTION_SOFT = 1,
} TvExtraction;

typedef enum TvCost {
  TV_COST_SAD = 0,
  TV_COST_ZNCC = 1,
} TvCost;

typedef enum TvScaling {
  TV_SCALING_NONE = 0,
  TV_SCALING_MEDIAN = 1,
  TV_SCALING_GT_SCALE = 2,
} TvScaling;

/**
 * Opaque sweep output: up-to-scale depth and confidence.
 */
typedef struct TvDepth TvDepth;

/**
 * Opaque dense flow field.
 */
typedef struct TvFlow TvFlow;

typedef struct TvRansacOptions {
  /**
   * Sampson inlier threshold, squared pixels.
   */
  double threshold;
  double confidence;
  size_t max_iterations;
  size_t min_iterations;
  /**
   * Nonlinear refinement rounds; 0 disables.
   */
  size_t refine_rounds;
  uint64_t seed;
  /**
   * Use only pixels on a grid with this stride; 0 uses every valid pixel.
   */
  size_t grid_stride;
} TvRansacOptions;

typedef struct TvIntrinsics {
  double fx;
  double fy;
  double cx;
  double cy;
} TvIntrinsics;

/**
 * Rigid transform `X2 = R·X1 + t` as the 12 row-major values of `[R|t]`.
 */
typedef struct TvPose {
  double rt[12];
} TvPose;

typedef struct TvPoseResult {
  /**
   * Relative pose with unit translation.
   */
  struct TvPose pose;
  size_t correspondences;
  size_t inliers;
  size_t iterations;
  double mean_inlier_sampson;
  double median_inlier_flow;
  /**
   * Nonzero when the median inlier displacement is too small for a
   * reliable translation direction.
   */
  int32_t low_parallax;
} TvPoseResult;

typedef struct TvSweepOptions {
  size_t hypotheses;
  /**
   * Nearest hypothesis depth in baseline units.
   */
  double d_min;
  enum TvExtraction extraction;
  /**
   * Soft-argmin temperature.
   */
  double tau;
  /**
   * Soft-argmin half-window in hypotheses; negative averages over all.
   */
  int32_t window;
  enum TvCost cost;
} TvSweepOptions;

typedef struct TvDepthMetrics {
  double abs_rel;
  double sq_rel;
  double rmse;
  double rmse_log;
  /**
   * NaN unless a focal length was supplied.
   */
  double d1_all;
  double delta1;
  double delta2;
  double delta3;
  double l1_inv;
  double sc_inv;
  double l1_rel;
} TvDepthMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *tv_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tv_version(void);

/**
 * Builds a flow field from `2·width·height` interleaved `(u, v)` values in
 * row-major order. Non-finite pairs mark invalid pixels.
 *
 * # Safety
 * `uv` must point to `2·width·height` readable doubles; `out` must be writable.
 */
enum TvStatus tv_flow_new(const double *uv, size_t width, size_t height, struct TvFlow **out);

/**
 * Reads a Middlebury `.flo` file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum TvStatus tv_flow_read(const char *path, struct TvFlow **out);

/**
 * # Safety
 * `flow` must be null or a pointer obtained from this library, not yet freed.
 */
void tv_flow_free(struct TvFlow *flow);

/**
 * # Safety
 * `flow` must be a live handle; `width` and `height` must be writable.
 */
enum TvStatus tv_flow_dims(const struct TvFlow *flow, size_t *width, size_t *height);

/**
 * Fills `options` with the library defaults.
 *
 * # Safety
 * `options` must be writable.
 */
enum TvStatus tv_ransac_options_default(struct TvRansacOptions *options);

/**
 * Robust relative pose from a flow field. A null `options` uses defaults.
 *
 * # Safety
 * Pointers must be valid; `options` may be null.
 */
enum TvStatus tv_estimate_pose(const struct TvFlow *flow,
                               const struct TvIntrinsics *intrinsics,
                               const struct TvRansacOptions *options,
                               struct TvPoseResult *out);

/**
 * # Safety
 * `options` must be writable.
 */
enum TvStatus tv_sweep_options_default(struct TvSweepOptions *options);

/**
 * Plane-sweep depth for view 1. Images are row-major intensities in
 * `[0, 1]`; the pose translation is normalized to unit length first, so
 * depth is in baseline units.
 *
 * # Safety
 * `image1` and `image2` must each hold `width·height` doubles; the other
 * pointers must be valid. `options` may be null for defaults.
 */
enum TvStatus tv_plane_sweep(const double *image1,
                             const double *image2,
                             size_t width,
                             size_t height,
                             const struct TvIntrinsics *intrinsics,
                             const struct TvPose *pose,
                             const struct TvSweepOptions *options,
                             struct TvDepth **out);

/**
 * # Safety
 * `depth` must be null or a live handle.
 */
void tv_depth_free(struct TvDepth *depth);

/**
 * Copies `width·height` depth values (NaN where invalid) and, if
 * `confidence` is not null, the matching confidences.
 *
 * # Safety
 * `depth` must be a live handle; buffers must hold `len` doubles.
 */
enum TvStatus tv_depth_copy(const struct TvDepth *depth,
                            double *values,
                            double *confidence,
                            size_t len);

/**
 * # Safety
 * `depth` must be a live handle; `width` and `height` must be writable.
 */
enum TvStatus tv_depth_dims(const struct TvDepth *depth, size_t *width, size_t *height);

/**
 * Depth errors over pixels valid in both maps (finite and positive).
 * `gt_scale` is used with [`TvScaling::GtScale`]; a positive `focal`
 * enables D1-all with the KITTI stereo baseline.
 *
 * # Safety
 * `pred` and `gt` must each hold `width·height` doubles; `out` must be writable.
 */
enum TvStatus tv_depth_metrics(const double *pred,
                               const double *gt,
                               size_t width,
                               size_t height,
                               enum TvScaling scaling,
                               double gt_scale,
                               double focal,
                               struct TvDepthMetrics *out);

/**
 * Rotation error and translation-direction error, both in degrees.
 *
 * # Safety
 * All pointers must be valid.
 */
enum TvStatus tv_pose_errors(const struct TvPose *pred,
                             const struct TvPose *gt,
                             double *rot_deg,
                             double *tran_deg);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TWOVIEW_H */
