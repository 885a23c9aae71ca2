#ifndef RDDI_H
#define RDDI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RddiStatus {
  RDDI_STATUS_OK = 0,
  RDDI_STATUS_NULL_POINTER = 1,
  RDDI_STATUS_INVALID_ARGUMENT = 2,
  RDDI_STATUS_DOMAIN = 3,
  RDDI_STATUS_MODEL = 4,
  RDDI_STATUS_NUMERIC = 5,
  RDDI_STATUS_CONFIG = 6,
  RDDI_STATUS_IO = 7,
  RDDI_STATUS_BUFFER_TOO_SMALL = 8,
  RDDI_STATUS_PANIC = 9,
} RddiStatus;

/**
 * Two atoms' coupling coefficients.
 */
typedef struct RddiCoupling RddiCoupling;

/**
 * A validated scenario file.
 */
typedef struct RddiScenario RddiScenario;

/**
 * One atom: position in m, real dipole orientation, magnitude in debye,
 * bare transition frequency in rad/s.
 */
typedef struct RddiAtom {
  double position[3];
  double dipole[3];
  double dipole_debye;
  double omega;
} RddiAtom;

/**
 * Real parts of the coefficients in 1/s and rad/s.
 */
typedef struct RddiCouplingValues {
  double gamma_aa;
  double gamma_bb;
  double gamma_ab;
  double delta_ab;
  double kappa_ab_re;
  double kappa_ab_im;
  double omega_tilde_a;
  double omega_tilde_b;
} RddiCouplingValues;

typedef struct RddiRates {
  double w1;
  double t0;
  double w2;
  double w_golden;
  double p_a0;
  double ratio;
  double corrected_ratio;
} RddiRates;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length in bytes of the last error message on this thread, without the
 * terminating NUL; 0 when there is none.
 */
size_t rddi_last_error_length(void);

/**
 * Copies the last error message into `buf` (NUL-terminated).
 *
 * # Safety
 * `buf` must point to `len` writable bytes.
 */
enum RddiStatus rddi_last_error_message(char *buf, size_t len);

/**
 * Static NUL-terminated version string.
 */
const char *rddi_version(void);

/**
 * Builds couplings from coefficients in 1/s and rad/s.
 *
 * # Safety
 * `out` must be a valid pointer; the handle is released with `rddi_coupling_free`.
 */
enum RddiStatus rddi_coupling_from_coefficients(double gamma_aa,
                                                double gamma_bb,
                                                double gamma_ab,
                                                double delta_ab,
                                                double omega_tilde_a,
                                                double omega_tilde_b,
                                                struct RddiCoupling **out);

/**
 * Builds couplings for two atoms in free space.
 *
 * # Safety
 * `a`, `b` and `out` must be valid pointers.
 */
enum RddiStatus rddi_coupling_vacuum(const struct RddiAtom *a,
                                     const struct RddiAtom *b,
                                     bool lamb_shift,
                                     struct RddiCoupling **out);

/**
 * # Safety
 * `set` must be null or a handle from this library, not yet freed.
 */
void rddi_coupling_free(struct RddiCoupling *set);

/**
 * # Safety
 * `set` and `out` must be valid pointers.
 */
enum RddiStatus rddi_coupling_values(const struct RddiCoupling *set,
                                     struct RddiCouplingValues *out);

/**
 * Weak-coupling populations on `steps + 1` samples over `[0, t_end]`,
 * starting from atom A excited.
 *
 * # Safety
 * `p_a` and `p_b` must each point to `len` writable doubles.
 */
enum RddiStatus rddi_dynamics_weak(const struct RddiCoupling *set,
                                   double t_end,
                                   size_t steps,
                                   double *p_a,
                                   double *p_b,
                                   size_t len);

/**
 * Transfer rates; pass NaN for `p_a0` to use the default.
 *
 * # Safety
 * `set` and `out` must be valid pointers.
 */
enum RddiStatus rddi_rates(const struct RddiCoupling *set, double p_a0, struct RddiRates *out);

/**
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string and `out` a valid pointer.
 */
enum RddiStatus rddi_scenario_load(const char *path, struct RddiScenario **out);

/**
 * Runs every analysis of the scenario. A null `output_dir` uses the
 * scenario's own.
 *
 * # Safety
 * `scenario` must be valid; `output_dir` null or NUL-terminated UTF-8.
 */
enum RddiStatus rddi_scenario_run(const struct RddiScenario *scenario,
                                  const char *output_dir,
                                  bool force);

/**
 * # Safety
 * `scenario` must be null or a handle from this library, not yet freed.
 */
void rddi_scenario_free(struct RddiScenario *scenario);

/**
 * Runs the invariant suite; `failures` receives the number of failed checks.
 *
 * # Safety
 * `failures` must be a valid pointer.
 */
enum RddiStatus rddi_selftest(uint64_t seed, size_t cases, size_t *failures);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RDDI_H */
