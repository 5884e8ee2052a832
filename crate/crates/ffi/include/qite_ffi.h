#ifndef QITE_FFI_H
#define QITE_FFI_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum QiteStatus {
  QITE_STATUS_OK = 0,
  QITE_STATUS_NULL_POINTER = 1,
  QITE_STATUS_INVALID_ARGUMENT = 2,
  QITE_STATUS_SIZE_MISMATCH = 3,
  QITE_STATUS_RESOURCE_LIMIT = 4,
  QITE_STATUS_NUMERICAL = 5,
  QITE_STATUS_PARSE = 6,
  QITE_STATUS_CONFIG = 7,
  QITE_STATUS_IO = 8,
  QITE_STATUS_PANIC = 9,
} QiteStatus;

/**
 * Domain recipe for `qite_evolve`.
 */
typedef enum QiteDomain {
  /**
   * Each term's own support.
   */
  QITE_DOMAIN_A = 0,
  /**
   * Coupling supports widened to four qubits with random neighbours; needs the graph.
   */
  QITE_DOMAIN_B = 1,
  /**
   * One domain covering every qubit.
   */
  QITE_DOMAIN_FULL = 2,
} QiteDomain;

typedef struct QiteGraph QiteGraph;

typedef struct QiteHamiltonian QiteHamiltonian;

typedef struct QiteState QiteState;

/**
 * Evolution parameters; start from `qite_options_default`.
 */
typedef struct QiteOptions {
  double tau;
  size_t n_max;
  /**
   * One of the `QITE_DOMAIN_*` values.
   */
  uint32_t domain;
  double regularization_lambda;
  /**
   * Seed for random domain choices.
   */
  uint64_t rng_seed;
} QiteOptions;

/**
 * Outcome of `qite_solve`.
 */
typedef struct QiteSolveResult {
  /**
   * Basis index of the best shot; qubit 0 is the most significant bit.
   */
  uint64_t best_index;
  double best_energy;
  bool succeeded;
} QiteSolveResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *qite_version(void);

/**
 * Message of the last failed call on this thread (empty after a success).
 * Valid until the next call into the library on this thread.
 */
const char *qite_last_error(void);

/**
 * Default edge penalty `u`.
 */
double qite_default_u(void);

/**
 * Defaults: `tau = 0.01`, `n_max = 100`, domain A, `lambda = 1e-6`, seed 0.
 */
struct QiteOptions qite_options_default(void);

/**
 * The 6-vertex benchmark graph.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum QiteStatus qite_graph_paper6(struct QiteGraph **out);

/**
 * Random unit-disk graph on `n` vertices in a square of side `box_side`
 * (`box_side <= 0` picks `0.6 sqrt(n)`).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum QiteStatus qite_graph_random(size_t n,
                                  double box_side,
                                  uint64_t rng_seed,
                                  struct QiteGraph **out);

/**
 * Parses a graph in the text format.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum QiteStatus qite_graph_from_text(const char *text, struct QiteGraph **out);

/**
 * Reads a graph file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum QiteStatus qite_graph_from_file(const char *path, struct QiteGraph **out);

/**
 * Releases a graph; null is ignored.
 *
 * # Safety
 * `g` must come from this library and not be used afterwards.
 */
void qite_graph_free(struct QiteGraph *g);

/**
 * Vertex and edge counts.
 *
 * # Safety
 * All pointers must be valid.
 */
enum QiteStatus qite_graph_counts(const struct QiteGraph *g, size_t *n_vertices, size_t *n_edges);

/**
 * Exhaustive maximum independent set: size and number of optimal sets.
 *
 * # Safety
 * All pointers must be valid.
 */
enum QiteStatus qite_graph_mis(const struct QiteGraph *g, size_t *size, size_t *n_witnesses);

/**
 * UD-MIS Hamiltonian of `g` with edge penalty `u`.
 *
 * # Safety
 * `g` and `out` must be valid pointers.
 */
enum QiteStatus qite_hamiltonian_from_udmis(const struct QiteGraph *g,
                                            double u,
                                            struct QiteHamiltonian **out);

/**
 * Releases a Hamiltonian; null is ignored.
 *
 * # Safety
 * `h` must come from this library and not be used afterwards.
 */
void qite_hamiltonian_free(struct QiteHamiltonian *h);

/**
 * Energy of basis state `index`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum QiteStatus qite_hamiltonian_energy(const struct QiteHamiltonian *h,
                                        uint64_t index,
                                        double *out);

/**
 * Ground energy, its degeneracy and the spectral gap (0 when there is a single level).
 *
 * # Safety
 * All pointers must be valid.
 */
enum QiteStatus qite_hamiltonian_ground(const struct QiteHamiltonian *h,
                                        double *energy,
                                        size_t *degeneracy,
                                        double *gap);

/**
 * Runs QITE from `|+>^N` for `options->n_max` iterations. `g` may be null
 * unless the domain is `QITE_DOMAIN_B`; `options` may be null for defaults.
 *
 * # Safety
 * Non-null pointers must be valid.
 */
enum QiteStatus qite_evolve(const struct QiteHamiltonian *h,
                            const struct QiteGraph *g,
                            const struct QiteOptions *options,
                            struct QiteState **out);

/**
 * Exact normalized `exp(-t H)|+>^N`.
 *
 * # Safety
 * `h` and `out` must be valid pointers.
 */
enum QiteStatus qite_ite_state(const struct QiteHamiltonian *h, double t, struct QiteState **out);

/**
 * Releases a state; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void qite_state_free(struct QiteState *s);

/**
 * Number of qubits of a state.
 *
 * # Safety
 * All pointers must be valid.
 */
enum QiteStatus qite_state_n_qubits(const struct QiteState *s, size_t *out);

/**
 * Copies the `2^N` outcome probabilities into `buf`; `len` must equal `2^N`.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum QiteStatus qite_state_probabilities(const struct QiteState *s, double *buf, size_t len);

/**
 * `|<a|b>|^2`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum QiteStatus qite_state_fidelity(const struct QiteState *a,
                                    const struct QiteState *b,
                                    double *out);

/**
 * Probability that one shot lands above `E_0 + delta_e`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum QiteStatus qite_failure_prob(const struct QiteState *s,
                                  const struct QiteHamiltonian *h,
                                  double delta_e,
                                  double *out);

/**
 * Measures `shots` times with `rng_seed` and reports the lowest-energy outcome.
 *
 * # Safety
 * All pointers must be valid.
 */
enum QiteStatus qite_solve(const struct QiteState *s,
                           const struct QiteHamiltonian *h,
                           double delta_e,
                           size_t shots,
                           uint64_t rng_seed,
                           struct QiteSolveResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QITE_FFI_H */
