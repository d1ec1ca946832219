#ifndef CPCSTAR_H
#define CPCSTAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CpcStatus {
  CPC_STATUS_OK = 0,
  CPC_STATUS_NULL_POINTER = 1,
  CPC_STATUS_INVALID_UTF8 = 2,
  CPC_STATUS_PARSE = 3,
  CPC_STATUS_VALIDATION = 4,
  CPC_STATUS_INDEX = 5,
  CPC_STATUS_SHAPE = 6,
  CPC_STATUS_INFEASIBLE = 7,
  CPC_STATUS_INTERNAL = 8,
} CpcStatus;

/**
 * Opaque handle to an inductive system.
 */
typedef struct CpcSystem CpcSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on the same thread.
 */
const char *cpc_last_error(void);

/**
 * Parses a JSON description (system or CPAP; a CPAP yields its
 * associated system).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CpcStatus cpc_system_parse(const char *json, struct CpcSystem **out);

/**
 * Builds a builtin example such as `uhf{2,3}` or `interval{3,5,9}`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CpcStatus cpc_system_builtin(const char *name, struct CpcSystem **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `sys` must be null or a handle not yet freed.
 */
void cpc_system_free(struct CpcSystem *sys);

/**
 * Number of stages `N + 1`.
 *
 * # Safety
 * `sys` must be a live handle and `out` a valid pointer.
 */
enum CpcStatus cpc_stage_count(const struct CpcSystem *sys, size_t *out);

/**
 * Block sizes of stage `n`. `*len` receives the block count; when
 * `blocks` is null only the count is written, otherwise `cap` must be at
 * least the count.
 *
 * # Safety
 * `sys` must be a live handle, `len` a valid pointer and `blocks` null or
 * writable for `cap` entries.
 */
enum CpcStatus cpc_stage_blocks(const struct CpcSystem *sys,
                                size_t n,
                                size_t *blocks,
                                size_t cap,
                                size_t *len);

/**
 * cpc defect of `x, y ∈ F_k` at `(m, n, l)`, each element given by `len`
 * interleaved doubles.
 *
 * # Safety
 * `x` and `y` must be readable for `len` doubles, `out` writable.
 */
enum CpcStatus cpc_cpc_defect(const struct CpcSystem *sys,
                              size_t k,
                              const double *x,
                              const double *y,
                              size_t len,
                              size_t m,
                              size_t n,
                              size_t l,
                              double *out);

/**
 * nf defect of `x, y ∈ F_k` at `(m, n)`.
 *
 * # Safety
 * As for [`cpc_cpc_defect`].
 */
enum CpcStatus cpc_nf_defect(const struct CpcSystem *sys,
                             size_t k,
                             const double *x,
                             const double *y,
                             size_t len,
                             size_t m,
                             size_t n,
                             double *out);

/**
 * Full cpc/nf sweep from stage `k` as CSV. `probes` is `units`,
 * `hermitian`, `coordinate` or `random:COUNT`.
 *
 * # Safety
 * `probes` must be a NUL-terminated string, `out` a valid pointer. The
 * string written to `out` is freed with [`cpc_string_free`].
 */
enum CpcStatus cpc_defect_sweep_csv(const struct CpcSystem *sys,
                                    size_t k,
                                    const char *probes,
                                    uint64_t seed,
                                    char **out);

/**
 * The system as a JSON description.
 *
 * # Safety
 * `sys` must be a live handle and `out` a valid pointer. Free the result
 * with [`cpc_string_free`].
 */
enum CpcStatus cpc_emit_json(const struct CpcSystem *sys, char **out);

/**
 * The direct-sum NF lift `B_n = F_0 ⊕ … ⊕ F_n` as a new handle.
 *
 * # Safety
 * `sys` must be a live handle and `out` a valid pointer.
 */
enum CpcStatus cpc_nf_lift(const struct CpcSystem *sys, struct CpcSystem **out);

/**
 * Frees a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void cpc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPCSTAR_H */
