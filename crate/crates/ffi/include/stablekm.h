#ifndef STABLEKM_H
#define STABLEKM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SkmAlgorithm {
  SKM_ALGORITHM_STABLE = 0,
  SKM_ALGORITHM_STABLE_LLOYD = 1,
  SKM_ALGORITHM_ROBUST = 2,
  SKM_ALGORITHM_LLOYD = 3,
  SKM_ALGORITHM_KMEANSPP = 4,
  SKM_ALGORITHM_KMEANSPP_LLOYD = 5,
  SKM_ALGORITHM_TWO_MEANS = 6,
  SKM_ALGORITHM_GROUND_TRUTH = 7,
} SkmAlgorithm;

typedef enum SkmStatus {
  SKM_STATUS_OK = 0,
  SKM_STATUS_NULL_POINTER = 1,
  SKM_STATUS_INVALID_ARGUMENT = 2,
  SKM_STATUS_DIMENSION_MISMATCH = 3,
  SKM_STATUS_TOO_LARGE = 4,
  SKM_STATUS_INSUFFICIENT = 5,
  SKM_STATUS_MISSING_DATASET = 6,
  SKM_STATUS_IO = 7,
  SKM_STATUS_PARSE = 8,
  SKM_STATUS_DEGENERATE = 9,
  SKM_STATUS_BUFFER_TOO_SMALL = 10,
  SKM_STATUS_PANIC = 11,
} SkmStatus;

/**
 * Opaque clustering result.
 */
typedef struct SkmClustering SkmClustering;

/**
 * Opaque point set, optionally labeled.
 */
typedef struct SkmInstance SkmInstance;

/**
 * Run options for [`skm_cluster`]. Start from [`skm_options_default`].
 */
typedef struct SkmOptions {
  size_t k;
  uint64_t seed;
  /**
   * Restarts for the randomized algorithms; the cheapest wins.
   */
  size_t trials;
  /**
   * Fixed robust threshold; NaN together with `t` selects the search.
   */
  double r;
  double t;
  /**
   * Cap on the point pairs lifted by two-means; 0 means no cap.
   */
  size_t max_pairs;
} SkmOptions;

typedef struct SkmEpsSummary {
  double min;
  double avg;
  double max;
} SkmEpsSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *skm_version(void);

/**
 * Length in bytes of the last error message, without the terminating NUL. 0 if none.
 */
size_t skm_last_error_length(void);

/**
 * Copies the last error message, NUL-terminated, into `buf`.
 *
 * # Safety
 * `buf` must be valid for `len` bytes.
 */
enum SkmStatus skm_last_error_message(char *buf, size_t len);

struct SkmOptions skm_options_default(void);

/**
 * Builds an instance from `n * d` row-major values. `labels` may be null.
 *
 * # Safety
 * `data` must hold `n * d` doubles and `labels`, when non-null, `n` values.
 */
enum SkmStatus skm_instance_new(const double *data,
                                size_t n,
                                size_t d,
                                const size_t *labels,
                                struct SkmInstance **out);

/**
 * Loads a registered dataset by name or a CSV file by path.
 *
 * # Safety
 * `name_or_path` must be a NUL-terminated string.
 */
enum SkmStatus skm_instance_load(const char *name_or_path,
                                 bool normalize,
                                 struct SkmInstance **out);

/**
 * Writes the instance as CSV (features, then the label column when labeled).
 *
 * # Safety
 * `inst` must come from this library; `path` must be NUL-terminated.
 */
enum SkmStatus skm_instance_write_csv(const struct SkmInstance *inst, const char *path);

/**
 * Point count; 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or come from this library.
 */
size_t skm_instance_n(const struct SkmInstance *inst);

/**
 * Dimension; 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or come from this library.
 */
size_t skm_instance_d(const struct SkmInstance *inst);

/**
 * Number of distinct labels; 0 when unlabeled.
 *
 * # Safety
 * `inst` must be null or come from this library.
 */
size_t skm_instance_label_count(const struct SkmInstance *inst);

/**
 * # Safety
 * `inst` must be null or come from this library and not be used afterwards.
 */
void skm_instance_free(struct SkmInstance *inst);

/**
 * Clusters `inst` with `algo`. `opts` may be null for the defaults.
 *
 * # Safety
 * `inst` must come from this library; `out` must be writable.
 */
enum SkmStatus skm_cluster(const struct SkmInstance *inst,
                           enum SkmAlgorithm algo,
                           const struct SkmOptions *opts,
                           struct SkmClustering **out);

/**
 * Wraps an existing assignment; centroids and cost are recomputed.
 *
 * # Safety
 * `assignment` must hold `skm_instance_n(inst)` values.
 */
enum SkmStatus skm_clustering_from_assignment(const struct SkmInstance *inst,
                                              const size_t *assignment,
                                              size_t k,
                                              struct SkmClustering **out);

/**
 * k-means objective; NaN for a null handle.
 *
 * # Safety
 * `c` must be null or come from this library.
 */
double skm_clustering_cost(const struct SkmClustering *c);

/**
 * # Safety
 * `c` must be null or come from this library.
 */
size_t skm_clustering_k(const struct SkmClustering *c);

/**
 * # Safety
 * `c` must be null or come from this library.
 */
size_t skm_clustering_n(const struct SkmClustering *c);

/**
 * Copies the `n` cluster ids into `out`.
 *
 * # Safety
 * `out` must be valid for `len` writes.
 */
enum SkmStatus skm_clustering_assignment(const struct SkmClustering *c, size_t *out, size_t len);

/**
 * Copies the `k * d` row-major centers into `out`. Empty clusters have NaN rows.
 *
 * # Safety
 * `out` must be valid for `len` writes.
 */
enum SkmStatus skm_clustering_centers(const struct SkmClustering *c, double *out, size_t len);

/**
 * # Safety
 * `c` must be null or come from this library and not be used afterwards.
 */
void skm_clustering_free(struct SkmClustering *c);

/**
 * Largest margin for which every point of clusters `i` and `j` stays on its own side.
 *
 * # Safety
 * Both handles must come from this library; `out` must be writable.
 */
enum SkmStatus skm_max_eps_pair(const struct SkmClustering *c,
                                const struct SkmInstance *inst,
                                size_t i,
                                size_t j,
                                double *out);

/**
 * Minimum, average and maximum of the per-pair margins.
 *
 * # Safety
 * Both handles must come from this library; `out` must be writable.
 */
enum SkmStatus skm_eps_summary(const struct SkmClustering *c,
                               const struct SkmInstance *inst,
                               struct SkmEpsSummary *out);

/**
 * Fraction of points on which two clusterings agree under the best label matching.
 *
 * # Safety
 * Both handles must come from this library; `out` must be writable.
 */
enum SkmStatus skm_recovery_score(const struct SkmClustering *a,
                                  const struct SkmClustering *b,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STABLEKM_H */
