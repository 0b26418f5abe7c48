#ifndef CPWL_H
#define CPWL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum CpwlStatus {
  CPWL_STATUS_OK = 0,
  CPWL_STATUS_NULL_POINTER = 1,
  CPWL_STATUS_INVALID_UTF8 = 2,
  CPWL_STATUS_INVALID_NETWORK = 3,
  CPWL_STATUS_INVALID_PARAMETER = 4,
  CPWL_STATUS_DIMENSION_MISMATCH = 5,
  CPWL_STATUS_UNSUPPORTED = 6,
  CPWL_STATUS_BUDGET_EXCEEDED = 7,
  CPWL_STATUS_BUFFER_TOO_SMALL = 8,
  CPWL_STATUS_INTERNAL = 9,
  CPWL_STATUS_PANIC = 10,
} CpwlStatus;

// Opaque network handle.
typedef struct CpwlNetwork CpwlNetwork;

// Region counts of a network on a domain.
typedef struct CpwlCounts {
  size_t cells;
  size_t distinct_pieces;
  size_t connected_pieces;
} CpwlCounts;

// Knot count and density along a path.
typedef struct CpwlKnots {
  size_t count;
  double length;
  double density;
} CpwlKnots;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *cpwl_version(void);

// Copies the last error message of this thread into `buf` and returns the
// size needed including the terminating NUL. Pass a null `buf` to query the
// size.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t cpwl_last_error_message(char *buf, size_t len);

// Parses a network from NUL-terminated JSON. On success `*out` owns a new
// handle.
//
// # Safety
// `json` must be a valid C string and `out` a valid pointer.
enum CpwlStatus cpwl_network_from_json(const char *json, struct CpwlNetwork **out);

// Releases a handle; null is ignored.
//
// # Safety
// `net` must be null or a handle from this library not yet freed.
void cpwl_network_free(struct CpwlNetwork *net);

// Writes the input and output dimensions.
//
// # Safety
// `net` must be a live handle; the outputs must be valid pointers.
enum CpwlStatus cpwl_network_dims(const struct CpwlNetwork *net,
                                  size_t *input_dim,
                                  size_t *output_dim);

// Evaluates the network at `x` (length `x_len`) into `y` (length `y_len`).
//
// # Safety
// `x` and `y` must be valid for their lengths.
enum CpwlStatus cpwl_network_eval(const struct CpwlNetwork *net,
                                  const double *x,
                                  size_t x_len,
                                  double *y,
                                  size_t y_len);

// Exact region counts on the box `[lo, hi]` (each of length `dim`), or on
// all of space when both are null.
//
// # Safety
// `lo` and `hi` must be null or valid for `dim` values; `out` must be valid.
enum CpwlStatus cpwl_count_regions(const struct CpwlNetwork *net,
                                   const double *lo,
                                   const double *hi,
                                   size_t dim,
                                   struct CpwlCounts *out);

// Knots along the polygonal path whose `n_vertices` vertices are stored
// row-major in `vertices`, each of the network's input dimension.
//
// # Safety
// `vertices` must be valid for `n_vertices * input_dim` values; `out` must
// be valid.
enum CpwlStatus cpwl_count_knots(const struct CpwlNetwork *net,
                                 const double *vertices,
                                 size_t n_vertices,
                                 struct CpwlKnots *out);

// Maximal cell count of an arrangement of `n` convex partitions of `R^d`
// with `sizes[i]` regions each, written as a decimal string into `buf`.
// `*needed` receives the buffer size required including the NUL.
//
// # Safety
// `sizes` must be valid for `n` values, `buf` null or valid for `len`
// bytes, and `needed` valid.
enum CpwlStatus cpwl_beta(size_t d,
                          const uint64_t *sizes,
                          size_t n,
                          char *buf,
                          size_t len,
                          size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPWL_H */
