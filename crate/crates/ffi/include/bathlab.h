#ifndef BATHLAB_H
#define BATHLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BathlabStatus {
  BATHLAB_STATUS_OK = 0,
  BATHLAB_STATUS_NULL_POINTER = 1,
  BATHLAB_STATUS_INVALID_ARGUMENT = 2,
  BATHLAB_STATUS_REGIME_MISMATCH = 3,
  BATHLAB_STATUS_NUMERICAL = 4,
  BATHLAB_STATUS_CONFIG = 5,
  BATHLAB_STATUS_OUT_OF_RANGE = 6,
  BATHLAB_STATUS_PANIC = 7,
} BathlabStatus;

typedef enum BathlabRegime {
  BATHLAB_REGIME_LARGE_COUPLING = 0,
  BATHLAB_REGIME_SMALL_COUPLING = 1,
  BATHLAB_REGIME_BOUNDARY = 2,
  BATHLAB_REGIME_OVERDAMPED = 3,
  BATHLAB_REGIME_OSCILLATORY_RUNAWAY = 4,
} BathlabRegime;

typedef enum BathlabMethod {
  BATHLAB_METHOD_SOLUTION_FORMULA = 0,
  BATHLAB_METHOD_SYMPLECTIC = 1,
} BathlabMethod;

typedef struct BathlabEnsemble BathlabEnsemble;

/**
 * Spectral density and model parameters, with the response built once.
 */
typedef struct BathlabModel BathlabModel;

/**
 * Output of one experiment run: CSV text and JSON summary.
 */
typedef struct BathlabRun BathlabRun;

/**
 * Characteristic roots, ascending by real part.
 */
typedef struct BathlabRoots {
  double re[3];
  double im[3];
} BathlabRoots;

/**
 * Ensemble statistics at one output time, with standard errors.
 */
typedef struct BathlabMoments {
  double t;
  double mean_q;
  double se_q;
  double mean_p;
  double se_p;
  double var_q;
  double se_var_q;
  double var_p;
  double se_var_p;
  double cov_qp;
  double se_cov_qp;
} BathlabMoments;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *bathlab_last_error_message(void);

/**
 * Library version, static storage.
 */
const char *bathlab_version(void);

/**
 * Model with `J(nu) = 1 / (a + b nu^2)` and coupling `epsilon`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum BathlabStatus bathlab_model_new(double a,
                                     double b,
                                     double omega,
                                     double epsilon,
                                     double kt,
                                     double q0,
                                     double p0,
                                     struct BathlabModel **out);

/**
 * As [`bathlab_model_new`], with the coupling given as `eps^2 pi / (2 b)`.
 *
 * # Safety
 * `out` must be null or valid for writes.
 */
enum BathlabStatus bathlab_model_from_coupling_rhs(double a,
                                                   double b,
                                                   double omega,
                                                   double coupling_rhs,
                                                   double kt,
                                                   double q0,
                                                   double p0,
                                                   struct BathlabModel **out);

/**
 * # Safety
 * `model` must be null or a handle from this library not yet freed.
 */
void bathlab_model_free(struct BathlabModel *model);

/**
 * Roots of the characteristic cubic and the coupling regime.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum BathlabStatus bathlab_model_roots(const struct BathlabModel *model,
                                       struct BathlabRoots *roots,
                                       enum BathlabRegime *regime);

/**
 * Continuum positivity bound on `eps^2` and whether the model satisfies it.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum BathlabStatus bathlab_model_stability(const struct BathlabModel *model,
                                           double *critical_eps_sq,
                                           bool *positive_definite);

/**
 * `v(t)`, `v'(t)`, `v''(t)` of the continuum response.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum BathlabStatus bathlab_model_response(const struct BathlabModel *model,
                                          double t,
                                          double *v,
                                          double *v1,
                                          double *v2);

/**
 * Mean `(q*, p*)` and Gaussian coefficients `A = Var q`, `B = Cov(q, p)`,
 * `C = Var p` at time `t`.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum BathlabStatus bathlab_model_gaussian(const struct BathlabModel *model,
                                          double t,
                                          double *q_star,
                                          double *p_star,
                                          double *a,
                                          double *b,
                                          double *c);

/**
 * Limiting density of the system oscillator at `(q, p)` and time `t`.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum BathlabStatus bathlab_model_density(const struct BathlabModel *model,
                                         double t,
                                         double q,
                                         double p,
                                         double *rho);

/**
 * Monte Carlo over Gibbs-distributed baths of `n` modes up to `nu_max`.
 * `step <= 0` selects the method default.
 *
 * # Safety
 * `times` must point to `n_times` readable values; other pointers null or valid.
 */
enum BathlabStatus bathlab_ensemble_run(const struct BathlabModel *model,
                                        uintptr_t n,
                                        double nu_max,
                                        uintptr_t sample_count,
                                        const double *times,
                                        uintptr_t n_times,
                                        uint64_t seed,
                                        enum BathlabMethod method,
                                        double step,
                                        struct BathlabEnsemble **out);

/**
 * Number of output times held by `ensemble`; 0 for null.
 *
 * # Safety
 * `ensemble` must be null or a live handle.
 */
uintptr_t bathlab_ensemble_len(const struct BathlabEnsemble *ensemble);

/**
 * # Safety
 * Pointers must be null or valid.
 */
enum BathlabStatus bathlab_ensemble_moments(const struct BathlabEnsemble *ensemble,
                                            uintptr_t index,
                                            struct BathlabMoments *out);

/**
 * # Safety
 * `ensemble` must be null or a live handle.
 */
void bathlab_ensemble_free(struct BathlabEnsemble *ensemble);

/**
 * Runs an experiment from JSON config text, as the command line does.
 *
 * # Safety
 * `config_json` must be a nul-terminated string; `out` null or valid.
 */
enum BathlabStatus bathlab_run_config(const char *config_json, struct BathlabRun **out);

/**
 * CSV text owned by `run`; null for a null handle.
 *
 * # Safety
 * `run` must be null or a live handle.
 */
const char *bathlab_run_csv(const struct BathlabRun *run);

/**
 * JSON summary owned by `run`; null for a null handle.
 *
 * # Safety
 * `run` must be null or a live handle.
 */
const char *bathlab_run_summary(const struct BathlabRun *run);

/**
 * # Safety
 * `run` must be null or a live handle.
 */
bool bathlab_run_checks_passed(const struct BathlabRun *run);

/**
 * # Safety
 * `run` must be null or a live handle.
 */
void bathlab_run_free(struct BathlabRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BATHLAB_H */
