#ifndef MSGFEM_H
#define MSGFEM_H

/* This file is generated by cbindgen from msgfem-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function of the C API.
 */
typedef enum MsgfemStatus {
  MsgfemStatus_Ok = 0,
  MsgfemStatus_NullPointer = 1,
  MsgfemStatus_InvalidArgument = 2,
  MsgfemStatus_SolveFailed = 3,
  MsgfemStatus_BufferTooSmall = 4,
  MsgfemStatus_Panic = 5,
} MsgfemStatus;

/**
 * Opaque solver workspace: mesh, coefficient field, decomposition,
 * reference solution and per-subdomain spectral solvers.
 */
typedef struct MsgfemWorkspace MsgfemWorkspace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent error on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *msgfem_last_error_message(void);

/**
 * Builds a workspace for one benchmark problem.
 *
 * `example` is "random-field" or "high-contrast"; `mesh_n` is the number
 * of cells per axis; `m` subdomains per axis with `overlap` overlap layers
 * and `ell` oversampling layers; `s_max` harmonic basis functions are
 * prepared per subdomain (solves may use any s <= s_max).
 *
 * # Safety
 * `example` must be a valid NUL-terminated string and `out` a valid
 * pointer; the returned handle must be released with
 * [`msgfem_workspace_free`].
 */
enum MsgfemStatus msgfem_workspace_new(uint32_t mesh_n,
                                       const char *example,
                                       uint64_t seed,
                                       uint32_t m,
                                       uint32_t overlap,
                                       uint32_t ell,
                                       uint32_t s_max,
                                       struct MsgfemWorkspace **out);

/**
 * Releases a workspace handle (accepts NULL).
 *
 * # Safety
 * `handle` must come from [`msgfem_workspace_new`] and not be used again.
 */
void msgfem_workspace_free(struct MsgfemWorkspace *handle);

/**
 * Number of mesh nodes (the length of solution fields).
 *
 * # Safety
 * `handle` must be a live workspace pointer.
 */
size_t msgfem_node_count(const struct MsgfemWorkspace *handle);

/**
 * Runs the multiscale solve with `s` harmonic and `n_loc` spectral basis
 * functions per subdomain; writes the relative energy error against the
 * fine reference into `error_out`.
 *
 * # Safety
 * `handle` and `error_out` must be valid pointers.
 */
enum MsgfemStatus msgfem_solve(const struct MsgfemWorkspace *handle,
                               uint32_t s,
                               uint32_t n_loc,
                               double *error_out);

/**
 * Runs the multiscale solve and copies the GFEM solution into `buffer`
 * (length `len` >= node count), in mesh node order.
 *
 * # Safety
 * `handle`, `buffer` (with capacity `len`) and `error_out` must be valid.
 */
enum MsgfemStatus msgfem_solve_field(const struct MsgfemWorkspace *handle,
                                     uint32_t s,
                                     uint32_t n_loc,
                                     double *buffer,
                                     size_t len,
                                     double *error_out);

/**
 * Copies the fine reference solution into `buffer` (length >= node count).
 *
 * # Safety
 * `handle` and `buffer` (with capacity `len`) must be valid.
 */
enum MsgfemStatus msgfem_reference_field(const struct MsgfemWorkspace *handle,
                                         double *buffer,
                                         size_t len);

/**
 * The oversampling bound shape h(s) on [0, 1].
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MsgfemStatus msgfem_h_of_s(double s, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MSGFEM_H */
