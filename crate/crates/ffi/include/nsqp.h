#ifndef NSQP_H
#define NSQP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NsqpStatus {
  NSQP_STATUS_OK = 0,
  NSQP_STATUS_NULL_POINTER = 1,
  NSQP_STATUS_UNKNOWN_PROBLEM = 2,
  NSQP_STATUS_INVALID_ARGUMENT = 3,
  NSQP_STATUS_OUT_OF_RANGE = 4,
  NSQP_STATUS_BUFFER_TOO_SMALL = 5,
  NSQP_STATUS_PANIC = 6,
} NsqpStatus;

typedef enum NsqpSolveStatus {
  NSQP_SOLVE_STATUS_BUDGET_EXHAUSTED = 0,
  NSQP_SOLVE_STATUS_DQP_TOLERANCE = 1,
  NSQP_SOLVE_STATUS_SUBPROBLEM_FAILURE = 2,
} NsqpSolveStatus;

/**
 * Opaque problem handle.
 */
typedef struct NsqpProblem NsqpProblem;

/**
 * Opaque solver report handle.
 */
typedef struct NsqpReport NsqpReport;

/**
 * User-supplied problem functions. `constraints` writes the `m` constraint
 * values and `jacobian` the `n × m` Jacobian row-major (entry `j * m + i` is
 * `∂cᵢ/∂xⱼ`); both may be null when `m = 0`. The callbacks run on the thread
 * that calls `nsqp_solve` and must stay valid for the lifetime of the problem
 * handle.
 */
typedef struct NsqpCallbacks {
  void *user_data;
  double (*objective)(void *user_data, const double *x, size_t n);
  void (*gradient)(void *user_data, const double *x, size_t n, double *g);
  void (*constraints)(void *user_data, const double *x, size_t n, double *c, size_t m);
  void (*jacobian)(void *user_data, const double *x, size_t n, double *jac, size_t m);
} NsqpCallbacks;

/**
 * Noise bounds on `f`, `c`, `∇f` and the constraint Jacobian, plus the seed
 * of the noise stream.
 */
typedef struct NsqpNoise {
  double eps_f;
  double eps_c;
  double eps_g;
  double eps_j;
  uint64_t seed;
} NsqpNoise;

/**
 * Solver parameters. A negative `active_tol` or `dqp_stop_tol` selects the
 * noise-dependent default.
 */
typedef struct NsqpConfig {
  double theta1;
  double theta2;
  double delta;
  double pi0;
  size_t max_iter;
  size_t ls_max_backtracks;
  size_t window;
  double qn_damping;
  double active_tol;
  double dqp_stop_tol;
} NsqpConfig;

/**
 * Scalar fields of one iteration record.
 */
typedef struct NsqpIterRecord {
  size_t k;
  double f_tilde;
  double v_tilde;
  double pi;
  double alpha;
  double rho;
  double psi_v_tilde;
  double psi_o_tilde;
  bool qn_skipped;
  size_t ls_backtracks;
} NsqpIterRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *nsqp_status_message(enum NsqpStatus status);

/**
 * Number of built-in problems.
 */
size_t nsqp_corpus_len(void);

/**
 * Copies the NUL-terminated name of built-in problem `index` into `buf`.
 *
 * # Safety
 * `buf` must point to `len` writable bytes.
 */
enum NsqpStatus nsqp_corpus_name(size_t index, char *buf, size_t len);

/**
 * Looks up a built-in problem by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum NsqpStatus nsqp_problem_from_corpus(const char *name, struct NsqpProblem **out);

/**
 * Builds a problem `min f(x) s.t. c(x) ≤ 0` from callbacks.
 *
 * # Safety
 * `name` must be NUL-terminated or null, `x0` must point to `n` values and
 * the callbacks must follow the contract documented on `NsqpCallbacks`.
 */
enum NsqpStatus nsqp_problem_from_callbacks(const char *name,
                                            size_t n,
                                            size_t m,
                                            const double *x0,
                                            struct NsqpCallbacks callbacks,
                                            struct NsqpProblem **out);

/**
 * Writes the number of variables and constraints.
 *
 * # Safety
 * `problem` must be a live handle; `n` and `m` must be writable.
 */
enum NsqpStatus nsqp_problem_dims(const struct NsqpProblem *problem, size_t *n, size_t *m);

/**
 * Writes the reference optimal value, or returns `OutOfRange` when the
 * problem has none.
 *
 * # Safety
 * `problem` must be a live handle; `f` must be writable.
 */
enum NsqpStatus nsqp_problem_reference_f(const struct NsqpProblem *problem, double *f);

/**
 * # Safety
 * `problem` must be null or a handle not yet freed.
 */
void nsqp_problem_free(struct NsqpProblem *problem);

/**
 * Noise model with function noise `eps1` and derivative noise `√eps1`.
 */
struct NsqpNoise nsqp_noise_from_eps1(double eps1, uint64_t seed);

struct NsqpConfig nsqp_config_default(void);

/**
 * Runs the solver. `noise` and `config` may be null for an exact oracle and
 * default parameters.
 *
 * # Safety
 * `problem` must be a live handle, `noise` and `config` null or valid, and
 * `out` writable.
 */
enum NsqpStatus nsqp_solve(const struct NsqpProblem *problem,
                           const struct NsqpNoise *noise,
                           const struct NsqpConfig *config,
                           struct NsqpReport **out);

/**
 * # Safety
 * `report` must be a live handle; `status` must be writable.
 */
enum NsqpStatus nsqp_report_status(const struct NsqpReport *report, enum NsqpSolveStatus *status);

/**
 * # Safety
 * `report` must be a live handle; `count` must be writable.
 */
enum NsqpStatus nsqp_report_iterations(const struct NsqpReport *report, size_t *count);

/**
 * # Safety
 * `report` must be a live handle; `pi` must be writable.
 */
enum NsqpStatus nsqp_report_final_pi(const struct NsqpReport *report, double *pi);

/**
 * # Safety
 * `report` must be a live handle; `count` must be writable.
 */
enum NsqpStatus nsqp_report_qn_skips(const struct NsqpReport *report, size_t *count);

/**
 * Copies the returned point into `buf`, which must hold `n` values.
 *
 * # Safety
 * `report` must be a live handle; `buf` must point to `len` writable values.
 */
enum NsqpStatus nsqp_report_x_final(const struct NsqpReport *report, double *buf, size_t len);

/**
 * Scalar fields of iteration `k`.
 *
 * # Safety
 * `report` must be a live handle; `record` must be writable.
 */
enum NsqpStatus nsqp_report_record(const struct NsqpReport *report,
                                   size_t k,
                                   struct NsqpIterRecord *record);

/**
 * Full report as a JSON string, released with `nsqp_string_free`.
 *
 * # Safety
 * `report` must be a live handle; `json` must be writable.
 */
enum NsqpStatus nsqp_report_json(const struct NsqpReport *report, char **json);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void nsqp_string_free(char *s);

/**
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void nsqp_report_free(struct NsqpReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NSQP_H */
