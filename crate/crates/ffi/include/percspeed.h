#ifndef PERCSPEED_H
#define PERCSPEED_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_INVALID_ARGUMENT = 2,
  PS_STATUS_PARSE = 3,
  // Offspring mean at most 1, or retention at or below 1/m.
  PS_STATUS_SUBCRITICAL = 4,
  // The law puts all mass on one child.
  PS_STATUS_DEGENERATE = 5,
  // Quantity undefined for this model (no bushes, impossible degree, p_0 > 0).
  PS_STATUS_UNDEFINED = 6,
  PS_STATUS_CONVERGENCE = 7,
  PS_STATUS_PANIC = 8,
} PsStatus;

// Offspring law handle.
typedef struct PsLaw PsLaw;

// Offspring law plus retention probability, with the extinction
// probability already solved.
typedef struct PsModel PsModel;

typedef struct {
  double speed_hat;
  double std_error;
  uint64_t replicas;
  uint64_t horizon;
  uint64_t seed;
  double p;
} PsWalkEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL after a
// successful one. Valid until the next call on this thread.
const char *ps_last_error_message(void);

// Parses a law such as `"pmf:0,0,1"`, `"geometric:0.5"`, `"poisson:2"` or
// `"binomial:3,0.8"`.
//
// # Safety
// `spec` must be a NUL-terminated string; `out` must be writable.
PsStatus ps_law_parse(const char *spec, PsLaw **out);

// # Safety
// `law` must come from `ps_law_parse` and not be freed twice. NULL is ignored.
void ps_law_free(PsLaw *law);

// # Safety
// `law` must be a live handle; `out` must be writable.
PsStatus ps_law_mean(const PsLaw *law, double *out);

// `order`-th derivative of the generating function at `s` in [0, 1].
//
// # Safety
// `law` must be a live handle; `out` must be writable.
PsStatus ps_law_pgf_derivative(const PsLaw *law, double s, size_t order, double *out);

// Speed of the walk on the unpercolated tree (requires p_0 = 0).
//
// # Safety
// `law` must be a live handle; `out` must be writable.
PsStatus ps_eq1_speed(const PsLaw *law, double *out);

// Checks the monotonicity condition on `grid_size` points. Writes 1 or 0
// to `ok` and the smallest successive difference to `worst`.
//
// # Safety
// `law` must be a live handle; `ok` and `worst` must be writable.
PsStatus ps_check_condition(const PsLaw *law, size_t grid_size, int32_t *ok, double *worst);

// Solves the percolated model for retention `p`. `tol <= 0` selects the
// default tolerance. The law handle is copied and may be freed afterwards.
//
// # Safety
// `law` must be a live handle; `out` must be writable.
PsStatus ps_model_new(const PsLaw *law, double p, double tol, PsModel **out);

// # Safety
// `model` must come from `ps_model_new` and not be freed twice. NULL is ignored.
void ps_model_free(PsModel *model);

// # Safety
// `model` must be a live handle; `out` must be writable.
PsStatus ps_model_rho(const PsModel *model, double *out);

// # Safety
// `model` must be a live handle; `out` must be writable.
PsStatus ps_model_lambda(const PsModel *model, double *out);

// # Safety
// `model` must be a live handle; `out` must be writable.
PsStatus ps_model_m_hat(const PsModel *model, double *out);

// # Safety
// `model` must be a live handle; `out` must be writable.
PsStatus ps_model_rho_derivative(const PsModel *model, double *out);

// # Safety
// `model` must be a live handle; `out` must be writable.
PsStatus ps_model_thinned_pmf(const PsModel *model, size_t l, double *out);

// # Safety
// `model` must be a live handle; `out` must be writable.
PsStatus ps_model_backbone_pmf(const PsModel *model, size_t k, double *out);

// # Safety
// `model` must be a live handle; `out` must be writable.
PsStatus ps_model_bush_pmf(const PsModel *model, size_t k, double *out);

// # Safety
// `model` must be a live handle; `out` must be writable.
PsStatus ps_model_bush_mean_size(const PsModel *model, double *out);

// # Safety
// `model` must be a live handle; `out` must be writable.
PsStatus ps_model_mean_excursions(const PsModel *model, size_t k, double *out);

// # Safety
// `model` must be a live handle; `out` must be writable.
PsStatus ps_model_backbone_speed(const PsModel *model, double *out);

// # Safety
// `model` must be a live handle; `out` must be writable.
PsStatus ps_model_cluster_speed(const PsModel *model, double *out);

// Monte Carlo estimate of the cluster speed. Deterministic in `seed`.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
PsStatus ps_estimate_speed(const PsModel *model,
                           uint64_t horizon,
                           uint64_t replicas,
                           uint64_t seed,
                           PsWalkEstimate *out);

// Closed-form speed on the binary tree with pipes, `p` in [0.5, 1].
//
// # Safety
// `out` must be writable.
PsStatus ps_pipes_speed(double p, double *out);

// Monte Carlo speed on the binary tree with pipes, `p` in (0.5, 1).
//
// # Safety
// `out` must be writable.
PsStatus ps_simulate_pipes(double p,
                           uint64_t horizon,
                           uint64_t replicas,
                           uint64_t seed,
                           PsWalkEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERCSPEED_H */
