#ifndef RELNET_H
#define RELNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RelnetStatus {
  RELNET_STATUS_OK = 0,
  RELNET_STATUS_NULL_POINTER = 1,
  RELNET_STATUS_PARSE = 2,
  RELNET_STATUS_INVALID_ARGUMENT = 3,
  RELNET_STATUS_CAP_EXCEEDED = 4,
  RELNET_STATUS_INTERNAL = 5,
} RelnetStatus;

/**
 * Opaque network handle.
 */
typedef struct RelnetNetwork RelnetNetwork;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *relnet_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *relnet_version(void);

/**
 * Parses network-file text. Probabilities in the file become the default
 * distribution of the handle.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum RelnetStatus relnet_network_parse(const char *text, struct RelnetNetwork **out);

/**
 * The built-in 4-node bridge with its reference probabilities.
 */
struct RelnetNetwork *relnet_network_bridge(void);

/**
 * Random connected network with `nodes` nodes and `arcs` arcs.
 *
 * # Safety
 * `out` must be writable.
 */
enum RelnetStatus relnet_network_generate(size_t nodes,
                                          size_t arcs,
                                          uint64_t seed,
                                          struct RelnetNetwork **out);

/**
 * # Safety
 * `net` must come from a `relnet_network_*` constructor and not be used afterwards.
 */
void relnet_network_free(struct RelnetNetwork *net);

/**
 * # Safety
 * `net` must be a live handle or null (returns 0).
 */
size_t relnet_network_node_count(const struct RelnetNetwork *net);

/**
 * # Safety
 * `net` must be a live handle or null (returns 0).
 */
size_t relnet_network_arc_count(const struct RelnetNetwork *net);

/**
 * Exact reliability by enumeration (at most 30 arcs). `probs` may be null
 * to use the handle's default distribution; otherwise it holds `len` values.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum RelnetStatus relnet_exact_reliability(const struct RelnetNetwork *net,
                                           const double *probs,
                                           size_t len,
                                           double *out);

/**
 * Exact reliability by arc factoring; no arc-count cap.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum RelnetStatus relnet_factoring_reliability(const struct RelnetNetwork *net,
                                               const double *probs,
                                               size_t len,
                                               double *out);

/**
 * Crude Monte Carlo estimate with `n_sim` samples.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum RelnetStatus relnet_mcs_estimate(const struct RelnetNetwork *net,
                                      const double *probs,
                                      size_t len,
                                      uint64_t n_sim,
                                      uint64_t seed,
                                      double *out);

/**
 * BAT-MCS estimate with supervector width `delta`. `total_sims` may be null.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum RelnetStatus relnet_bat_mcs_estimate(const struct RelnetNetwork *net,
                                          const double *probs,
                                          size_t len,
                                          size_t delta,
                                          uint64_t n_sim,
                                          uint64_t seed,
                                          double *out,
                                          uint64_t *total_sims);

/**
 * Smallest sample size meeting relative error `epsilon` at normal quantile `z`.
 *
 * # Safety
 * `out` must be writable.
 */
enum RelnetStatus relnet_required_sample_size(double reliability,
                                              double epsilon,
                                              double z,
                                              uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELNET_H */
