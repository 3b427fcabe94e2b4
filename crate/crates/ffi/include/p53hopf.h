#ifndef P53HOPF_H
#define P53HOPF_H

/* Generated by cbindgen from the p53hopf-ffi sources; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum P53Kernel {
  // Point delays on transcription and translation.
  P53_KERNEL_DISCRETE = 0,
  // Point delay on transcription, weak exponential kernel on translation.
  P53_KERNEL_WEAK = 1,
} P53Kernel;

// Result codes. The numeric values of the analysis failures match the
// command-line exit codes.
typedef enum P53Status {
  P53_STATUS_OK = 0,
  P53_STATUS_INVALID_ARGUMENT = 1,
  P53_STATUS_NO_EQUILIBRIUM = 2,
  P53_STATUS_NO_HOPF = 3,
  P53_STATUS_NUMERICAL_DEGENERACY = 4,
  P53_STATUS_NULL_POINTER = 5,
  P53_STATUS_INTERNAL = 6,
} P53Status;

// Model parameters with the selected equilibrium and its linearization.
typedef struct P53Model P53Model;

// Uniformly sampled solution of the nonlinear model.
typedef struct P53Trajectory P53Trajectory;

typedef struct P53Params {
  double a1;
  double a2;
  double b1;
  double b2;
  double b12;
  double c2;
  double d2;
  double d12;
  double a;
  uint32_t n;
} P53Params;

typedef struct P53State {
  double x1;
  double y1;
  double x2;
  double y2;
} P53State;

typedef struct P53HopfPoint {
  double omega;
  double tau_crit;
  double lambda_prime_re;
  double lambda_prime_im;
  double residual;
} P53HopfPoint;

typedef struct P53NormalForm {
  double c1_re;
  double c1_im;
  double mu2;
  double beta2;
  double t2;
  bool supercritical;
  bool stable_orbits;
} P53NormalForm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread; empty after success.
// The pointer stays valid until the next library call on this thread.
const char *p53_last_error_message(void);

// Writes the worked-example parameter set.
//
// # Safety
// `out` must be null or valid for writes.
enum P53Status p53_params_reference(struct P53Params *out);

// Solves for the equilibria and linearizes at root `root_index`.
//
// # Safety
// `params` must be null or valid for reads; `out` null or valid for writes.
enum P53Status p53_model_new(const struct P53Params *params,
                             uintptr_t root_index,
                             struct P53Model **out);

// Releases a model; null is ignored.
//
// # Safety
// `model` must be null or a pointer from `p53_model_new` not yet freed.
void p53_model_free(struct P53Model *model);

// # Safety
// `model` must be a live handle; `out` null or valid for writes.
enum P53Status p53_model_equilibrium(const struct P53Model *model, struct P53State *out);

// First crossing of the imaginary axis as the bifurcation delay grows.
// `q2` is read only for the weak kernel.
//
// # Safety
// `model` must be a live handle; `out` null or valid for writes.
enum P53Status p53_model_hopf(const struct P53Model *model,
                              enum P53Kernel kernel,
                              double q2,
                              struct P53HopfPoint *out);

// Normal-form quantities at the first crossing. `tau2` splits the critical
// delay for the discrete kernel; `q2` is read for the weak kernel.
//
// # Safety
// `model` must be a live handle; `out` null or valid for writes.
enum P53Status p53_model_normal_form(const struct P53Model *model,
                                     enum P53Kernel kernel,
                                     double q2,
                                     double tau2,
                                     struct P53NormalForm *out);

// Integrates from a constant history at the model's equilibrium with
// `perturb` added to y1. For the discrete kernel `tau2_or_q2` is the
// translation lag, for the weak kernel the kernel rate. `quadrature`
// selects direct evaluation of the weak-kernel integral instead of the
// auxiliary chain variable.
//
// # Safety
// `model` must be a live handle; `out` null or valid for writes.
enum P53Status p53_simulate(const struct P53Model *model,
                            enum P53Kernel kernel,
                            double tau1,
                            double tau2_or_q2,
                            double perturb,
                            double horizon,
                            double step,
                            bool quadrature,
                            struct P53Trajectory **out);

// Number of samples; 0 for null.
//
// # Safety
// `traj` must be null or a live handle.
uintptr_t p53_trajectory_len(const struct P53Trajectory *traj);

// State dimension per sample (4, or 5 with the chain variable); 0 for null.
//
// # Safety
// `traj` must be null or a live handle.
uintptr_t p53_trajectory_dim(const struct P53Trajectory *traj);

// Copies `len` sample times into `times` and `len * dim` row-major states
// into `states`. `len` must equal `p53_trajectory_len`.
//
// # Safety
// `times` must be valid for `len` writes and `states` for `len * dim`.
enum P53Status p53_trajectory_copy(const struct P53Trajectory *traj,
                                   double *times,
                                   double *states,
                                   uintptr_t len);

// # Safety
// `traj` must be null or a pointer from `p53_simulate` not yet freed.
void p53_trajectory_free(struct P53Trajectory *traj);

// Runs the published worked-example check and returns its JSON report.
// Release the string with `p53_string_free`.
//
// # Safety
// `out` must be null or valid for writes.
enum P53Status p53_verify_published_json(char **out);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void p53_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* P53HOPF_H */
