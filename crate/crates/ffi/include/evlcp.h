#ifndef EVLCP_H
#define EVLCP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum EvlcpStatus {
  EVLCP_STATUS_OK = 0,
  EVLCP_STATUS_NULL_POINTER = 1,
  // Malformed input: shapes, non-finite numbers, bad JSON, unknown names.
  EVLCP_STATUS_INVALID_INPUT = 2,
  // A hypothesis of the requested bound does not hold.
  EVLCP_STATUS_PRECONDITION = 3,
  // Enumeration would exceed the budget; the question is undecided.
  EVLCP_STATUS_BUDGET = 4,
  EVLCP_STATUS_NO_SOLUTION = 5,
  EVLCP_STATUS_NOT_CONVERGED = 6,
  EVLCP_STATUS_SINGULAR_JACOBIAN = 7,
  EVLCP_STATUS_NUMERICAL = 8,
  EVLCP_STATUS_OVERFLOW = 9,
  // The output buffer length does not match the instance dimension.
  EVLCP_STATUS_BUFFER_SIZE = 10,
  EVLCP_STATUS_PANIC = 11,
} EvlcpStatus;

typedef enum EvlcpMethod {
  EVLCP_METHOD_REARRANGEMENT = 0,
  EVLCP_METHOD_CONVEX = 1,
  EVLCP_METHOD_HMATRIX = 2,
  EVLCP_METHOD_SDD = 3,
  EVLCP_METHOD_ALPHA_XZ = 4,
  EVLCP_METHOD_LOWER = 5,
  EVLCP_METHOD_MATHIAS_PANG = 6,
  EVLCP_METHOD_CHEN_XIANG = 7,
} EvlcpMethod;

typedef enum EvlcpNorm {
  EVLCP_NORM_INF = 0,
  EVLCP_NORM_ONE = 1,
} EvlcpNorm;

// Opaque problem instance `min_j (A_j x + q_j) = 0`.
typedef struct EvlcpInstance EvlcpInstance;

// Tuning for [`evlcp_bound`]. Zero fields select the library defaults.
typedef struct EvlcpBoundOptions {
  // Weight grid step in `(0, 1]`.
  double grid_step;
  // Cap on exhaustive enumerations.
  uint64_t budget;
} EvlcpBoundOptions;

typedef struct EvlcpBound {
  // The constant `c`; `INFINITY` when a singular combination was found.
  double value;
  // True for closed-form values, false for numerical estimates.
  bool rigorous;
  uint64_t evaluations;
  uint64_t objective_evaluations;
} EvlcpBound;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates an instance from `k + 1` row-major `n x n` blocks stored back to
// back in `a` and, if `q` is not null, `k + 1` vectors of length `n`.
//
// # Safety
// `a` must point to `(k + 1) * n * n` doubles, `q` to `(k + 1) * n` doubles
// or be null, and `out` must be valid for writing one pointer. On success
// `*out` owns a handle to release with [`evlcp_instance_free`].
enum EvlcpStatus evlcp_instance_new(size_t n,
                                    size_t k,
                                    const double *a,
                                    const double *q,
                                    struct EvlcpInstance **out);

// Parses an `evlcp-v1` JSON document.
//
// # Safety
// `json` is a nul-terminated string and `out` is valid for writing one pointer.
enum EvlcpStatus evlcp_instance_from_json(const char *json, struct EvlcpInstance **out);

// Loads a built-in example (`"example-2.1"`, `"example-4.1"`, `"example-4.2"`
// or `"example-4.3"`) with zero source vectors.
//
// # Safety
// `name` is a nul-terminated string and `out` is valid for writing one pointer.
enum EvlcpStatus evlcp_instance_builtin(const char *name, struct EvlcpInstance **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `inst` is null or a handle from this library that has not been freed.
void evlcp_instance_free(struct EvlcpInstance *inst);

// Writes the dimension `n` and the number `k` (blocks minus one).
//
// # Safety
// `inst` is a live handle; `n` and `k` are valid for writing.
enum EvlcpStatus evlcp_instance_dims(const struct EvlcpInstance *inst, size_t *n, size_t *k);

// Decides the row W-property by enumerating representative matrices.
// `budget == 0` uses the default cap; exceeding the cap returns
// [`EvlcpStatus::Budget`].
//
// # Safety
// `inst` is a live handle and `verdict` is valid for writing.
enum EvlcpStatus evlcp_check_w(const struct EvlcpInstance *inst, uint64_t budget, bool *verdict);

// Computes the constant of the requested bound. `opts` may be null.
//
// # Safety
// `inst` is a live handle, `opts` is null or valid for reading and `out`
// is valid for writing.
enum EvlcpStatus evlcp_bound(const struct EvlcpInstance *inst,
                             enum EvlcpMethod method,
                             enum EvlcpNorm norm,
                             const struct EvlcpBoundOptions *opts,
                             struct EvlcpBound *out);

// Solves the instance into `x` (length `n`). Non-positive `tol` and zero
// `maxit` select the defaults.
//
// # Safety
// `inst` is a live handle and `x` points to `n` writable doubles.
enum EvlcpStatus evlcp_solve(const struct EvlcpInstance *inst,
                             double tol,
                             size_t maxit,
                             double *x,
                             size_t n);

// Writes `r(x) = min_j (A_j x + q_j)` into `r`.
//
// # Safety
// `inst` is a live handle, `x` points to `n` readable doubles and `r` to
// `n` writable doubles.
enum EvlcpStatus evlcp_residual(const struct EvlcpInstance *inst,
                                const double *x,
                                double *r,
                                size_t n);

// Message for the last failed call on this thread, empty after a success.
// The pointer stays valid until the next library call on the same thread.
const char *evlcp_last_error_message(void);

// Static name of a status code.
const char *evlcp_status_name(enum EvlcpStatus status);

// Library version, e.g. `"0.1.0"`.
const char *evlcp_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVLCP_H */
