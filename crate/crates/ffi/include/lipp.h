#ifndef LIPP_H
#define LIPP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LippStatus {
  LIPP_STATUS_OK = 0,
  LIPP_STATUS_NOT_FOUND = 1,
  LIPP_STATUS_ALREADY_EXISTS = 2,
  /**
   * Null pointer, bad parameter or malformed input.
   */
  LIPP_STATUS_INVALID_ARGUMENT = 3,
  /**
   * NaN, out-of-range or outside the kernel's domain.
   */
  LIPP_STATUS_INVALID_KEY = 4,
  /**
   * Bulkload on an index that already holds elements.
   */
  LIPP_STATUS_NOT_EMPTY = 5,
  /**
   * The output buffer was too small; the required count was written.
   */
  LIPP_STATUS_BUFFER_TOO_SMALL = 6,
  LIPP_STATUS_PANIC = 7,
} LippStatus;

/**
 * Opaque index over double keys.
 */
typedef struct LippIndexF64 LippIndexF64;

/**
 * Opaque index over unsigned 64-bit keys.
 */
typedef struct LippIndexU64 LippIndexU64;

/**
 * Index parameters; start from `lipp_default_params`.
 */
typedef struct LippParams {
  double alpha;
  double beta;
  double delta;
  size_t max_len;
  size_t min_adjust_elements;
  size_t overflow_capacity;
} LippParams;

typedef struct LippStats {
  size_t elements;
  size_t nodes;
  double avg_depth;
  size_t max_depth;
  size_t index_bytes;
  uint64_t adjustments;
} LippStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static, NUL-terminated description of `status`.
 */
const char *lipp_status_str(enum LippStatus status);

struct LippParams lipp_default_params(void);

/**
 * Creates an empty index. `params` may be NULL for the defaults.
 *
 * # Safety
 * `out` must be valid for writes; `params` must be NULL or readable.
 */
enum LippStatus lipp_u64_new(const struct LippParams *params, struct LippIndexU64 **out);

/**
 * Releases an index. NULL is ignored.
 *
 * # Safety
 * `idx` must be NULL or a handle from `lipp_u64_new` not yet freed.
 */
void lipp_u64_free(struct LippIndexU64 *idx);

/**
 * # Safety
 * `idx` must be NULL or a live handle.
 */
size_t lipp_u64_len(const struct LippIndexU64 *idx);

/**
 * # Safety
 * `idx` must be NULL or a live handle.
 */
enum LippStatus lipp_u64_insert(struct LippIndexU64 *idx, uint64_t key, uint64_t payload);

/**
 * Writes the payload of `key` to `out` (which may be NULL).
 *
 * # Safety
 * `idx` must be NULL or a live handle; `out` NULL or writable.
 */
enum LippStatus lipp_u64_get(const struct LippIndexU64 *idx, uint64_t key, uint64_t *out);

/**
 * Removes `key`, writing its payload to `out` (which may be NULL).
 *
 * # Safety
 * `idx` must be NULL or a live handle; `out` NULL or writable.
 */
enum LippStatus lipp_u64_remove(struct LippIndexU64 *idx, uint64_t key, uint64_t *out);

/**
 * # Safety
 * `idx` must be NULL or a live handle.
 */
enum LippStatus lipp_u64_update(struct LippIndexU64 *idx, uint64_t key, uint64_t payload);

/**
 * Loads `n` distinct keys, in any order, into an empty index.
 *
 * # Safety
 * `keys` and `payloads` must each point to `n` readable elements.
 */
enum LippStatus lipp_u64_bulkload(struct LippIndexU64 *idx,
                                  const uint64_t *keys,
                                  const uint64_t *payloads,
                                  size_t n);

/**
 * Copies the elements with keys in `[lo, hi]` in ascending order and
 * stores their number in `count`. When more than `capacity` match,
 * nothing is copied and `LIPP_STATUS_BUFFER_TOO_SMALL` is returned.
 *
 * # Safety
 * `keys` and `payloads` must have room for `capacity` elements; `count`
 * must be writable.
 */
enum LippStatus lipp_u64_range(const struct LippIndexU64 *idx,
                               uint64_t lo,
                               uint64_t hi,
                               uint64_t *keys,
                               uint64_t *payloads,
                               size_t capacity,
                               size_t *count);

/**
 * # Safety
 * `idx` must be NULL or a live handle; `out` writable.
 */
enum LippStatus lipp_u64_stats(const struct LippIndexU64 *idx, struct LippStats *out);

/**
 * Creates an empty index. `params` may be NULL for the defaults.
 *
 * # Safety
 * `out` must be valid for writes; `params` must be NULL or readable.
 */
enum LippStatus lipp_f64_new(const struct LippParams *params, struct LippIndexF64 **out);

/**
 * Releases an index. NULL is ignored.
 *
 * # Safety
 * `idx` must be NULL or a handle from `lipp_f64_new` not yet freed.
 */
void lipp_f64_free(struct LippIndexF64 *idx);

/**
 * # Safety
 * `idx` must be NULL or a live handle.
 */
size_t lipp_f64_len(const struct LippIndexF64 *idx);

/**
 * # Safety
 * `idx` must be NULL or a live handle.
 */
enum LippStatus lipp_f64_insert(struct LippIndexF64 *idx, double key, uint64_t payload);

/**
 * # Safety
 * `idx` must be NULL or a live handle; `out` NULL or writable.
 */
enum LippStatus lipp_f64_get(const struct LippIndexF64 *idx, double key, uint64_t *out);

/**
 * # Safety
 * `idx` must be NULL or a live handle; `out` NULL or writable.
 */
enum LippStatus lipp_f64_remove(struct LippIndexF64 *idx, double key, uint64_t *out);

/**
 * # Safety
 * `idx` must be NULL or a live handle.
 */
enum LippStatus lipp_f64_update(struct LippIndexF64 *idx, double key, uint64_t payload);

/**
 * # Safety
 * `keys` and `payloads` must each point to `n` readable elements.
 */
enum LippStatus lipp_f64_bulkload(struct LippIndexF64 *idx,
                                  const double *keys,
                                  const uint64_t *payloads,
                                  size_t n);

/**
 * # Safety
 * As for `lipp_u64_range`.
 */
enum LippStatus lipp_f64_range(const struct LippIndexF64 *idx,
                               double lo,
                               double hi,
                               double *keys,
                               uint64_t *payloads,
                               size_t capacity,
                               size_t *count);

/**
 * # Safety
 * `idx` must be NULL or a live handle; `out` writable.
 */
enum LippStatus lipp_f64_stats(const struct LippIndexF64 *idx, struct LippStats *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIPP_H */
