#ifndef STRATLAB_H
#define STRATLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum {
  STRAT_STATUS_OK = 0,
  STRAT_STATUS_NULL_ARGUMENT = 1,
  STRAT_STATUS_INVALID_ARGUMENT = 2,
  STRAT_STATUS_UNKNOWN_PRESET = 3,
  STRAT_STATUS_NUMERICAL_ERROR = 4,
  STRAT_STATUS_INTERNAL = 5,
} StratStatus;

/**
 * Opaque simulation handle.
 */
typedef struct StratSim StratSim;

/**
 * One row of diagnostics, mirrored as a plain C struct.
 */
typedef struct {
  double t;
  double e_p;
  double e;
  double k;
  double u2_l2sq;
  double u_l2sq;
  double theta_h[5];
  double gradpsi_hk;
  double d2e_integrand;
  double mass;
  double linf;
  double bc_drift;
} StratDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Crate version as a static NUL-terminated string.
 */
const char *stratlab_version(void);

/**
 * Copy the last error message into `buf` (truncated to `cap` bytes,
 * always NUL-terminated when `cap > 0`). Returns the full message length
 * in bytes, excluding the terminator.
 */
size_t stratlab_last_error(char *buf, size_t cap);

/**
 * Build a simulation from a named preset (see `stratlab presets`).
 * On success `*out` owns the handle; free it with `stratlab_sim_free`.
 */
StratStatus stratlab_sim_from_preset(const char *name, StratSim **out);

/**
 * Release a handle; a null pointer is a no-op.
 */
void stratlab_sim_free(StratSim *sim);

/**
 * Grid dimensions of the simulation.
 */
StratStatus stratlab_sim_grid(const StratSim *sim, size_t *n1, size_t *n2);

/**
 * Current simulation time; NaN for a null handle.
 */
double stratlab_sim_time(const StratSim *sim);

/**
 * Advance to `t_target` with CFL-limited steps.
 */
StratStatus stratlab_sim_advance(StratSim *sim, double t_target);

/**
 * Copy theta into `buf` (length `len` = n1 * n2, row-major, i outermost).
 */
StratStatus stratlab_sim_theta(const StratSim *sim, double *buf, size_t len);

/**
 * Compute the full diagnostics record for the current state.
 */
StratStatus stratlab_sim_diagnostics(const StratSim *sim, StratDiagnostics *out);

/**
 * Vertical decreasing rearrangement of a row-major field sampled on the
 * standard channel grid; writes the n2 profile values into `out`.
 */
StratStatus stratlab_rearrange(const double *values, size_t n1, size_t n2, double *out);

/**
 * Least-squares power-law fit of (times, values) over [t_min, t_max].
 */
StratStatus stratlab_fit_power_law(const double *times,
                                   const double *values,
                                   size_t len,
                                   double t_min,
                                   double t_max,
                                   double *exponent,
                                   double *r2);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* STRATLAB_H */
