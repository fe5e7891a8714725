#ifndef L1SWITCH_H
#define L1SWITCH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Recorded signal selector for [`l1s_simulation_copy`].
 */
typedef enum L1sSignal {
  L1S_SIGNAL_TIME = 0,
  L1S_SIGNAL_MODE = 1,
  L1S_SIGNAL_STATE = 2,
  L1S_SIGNAL_REFERENCE_STATE = 3,
  L1S_SIGNAL_PREDICTOR_STATE = 4,
  L1S_SIGNAL_INPUT = 5,
  L1S_SIGNAL_REFERENCE_INPUT = 6,
} L1sSignal;

typedef enum L1sStatus {
  L1S_STATUS_OK = 0,
  L1S_STATUS_NULL_POINTER = 1,
  L1S_STATUS_INVALID_UTF8 = 2,
  L1S_STATUS_CONFIG = 3,
  L1S_STATUS_DIMENSION = 4,
  L1S_STATUS_INVALID_ARGUMENT = 5,
  L1S_STATUS_SINGULAR = 6,
  L1S_STATUS_NOT_FOUND = 7,
  L1S_STATUS_NUMERICAL = 8,
  L1S_STATUS_IO = 9,
  L1S_STATUS_PANIC = 10,
} L1sStatus;

typedef enum L1sVariant {
  L1S_VARIANT_SWITCHED = 0,
  L1S_VARIANT_FIXED = 1,
} L1sVariant;

typedef struct L1sCertificate L1sCertificate;

typedef struct L1sScenario L1sScenario;

typedef struct L1sSimulation L1sSimulation;

typedef struct L1sCertificateSummary {
  /**
   * 0 common, 1 dwell time.
   */
  int32_t kind;
  double lambda;
  double mu;
  double tau_d;
  double margin_lower;
  double margin_lyapunov;
  double margin_jump;
} L1sCertificateSummary;

typedef struct L1sMetrics {
  double gamma;
  double dt;
  size_t rows;
  double max_x_tilde;
  double max_tracking_state;
  double max_tracking_input;
  double prediction_bound;
  double tracking_bound_state;
  double tracking_bound_input;
  bool bounds_hold;
} L1sMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until
 * the next failing call on the same thread.
 */
const char *l1s_last_error(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *l1s_version(void);

/**
 * # Safety
 * `text` must be a nul-terminated string; `out` must be writable.
 */
enum L1sStatus l1s_scenario_from_toml(const char *text, struct L1sScenario **out);

/**
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum L1sStatus l1s_scenario_from_file(const char *path, struct L1sScenario **out);

/**
 * Built-in transport-aircraft scenario.
 *
 * # Safety
 * `out` must be writable.
 */
enum L1sStatus l1s_scenario_aircraft(enum L1sVariant variant, struct L1sScenario **out);

/**
 * Number of modes, or 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live scenario handle.
 */
size_t l1s_scenario_modes(const struct L1sScenario *s);

/**
 * # Safety
 * `s` must be null or a handle from this library, not freed before.
 */
void l1s_scenario_free(struct L1sScenario *s);

/**
 * Solves for a stability certificate.
 *
 * # Safety
 * `s` must be a live scenario handle; `out` must be writable.
 */
enum L1sStatus l1s_certify(const struct L1sScenario *s, struct L1sCertificate **out);

/**
 * # Safety
 * `c` must be a live certificate handle; `out` must be writable.
 */
enum L1sStatus l1s_certificate_summary(const struct L1sCertificate *c,
                                       struct L1sCertificateSummary *out);

/**
 * Certificate as a JSON document; free it with [`l1s_string_free`].
 *
 * # Safety
 * `c` must be a live certificate handle; `out` must be writable.
 */
enum L1sStatus l1s_certificate_to_json(const struct L1sCertificate *c, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void l1s_string_free(char *s);

/**
 * # Safety
 * `c` must be null or a handle from this library, not freed before.
 */
void l1s_certificate_free(struct L1sCertificate *c);

/**
 * Closed-loop run with adaptation gain `gamma`; a non-positive value uses
 * the scenario's own gain.
 *
 * # Safety
 * `s` and `c` must be live handles; `out` must be writable.
 */
enum L1sStatus l1s_simulate(const struct L1sScenario *s,
                            const struct L1sCertificate *c,
                            double gamma,
                            struct L1sSimulation **out);

/**
 * # Safety
 * `sim` must be a live simulation handle; `out` must be writable.
 */
enum L1sStatus l1s_simulation_metrics(const struct L1sSimulation *sim, struct L1sMetrics *out);

/**
 * Number of recorded rows, or 0 for a null handle.
 *
 * # Safety
 * `sim` must be null or a live simulation handle.
 */
size_t l1s_simulation_rows(const struct L1sSimulation *sim);

/**
 * Copies component `component` of a recorded signal into `buf`, which
 * must hold at least [`l1s_simulation_rows`] values. `component` is
 * ignored for time and mode.
 *
 * # Safety
 * `sim` must be a live handle and `buf` writable for `len` doubles.
 */
enum L1sStatus l1s_simulation_copy(const struct L1sSimulation *sim,
                                   enum L1sSignal signal,
                                   size_t component,
                                   double *buf,
                                   size_t len);

/**
 * Writes the recorded trace as CSV.
 *
 * # Safety
 * `sim` must be a live handle; `path` a nul-terminated string.
 */
enum L1sStatus l1s_simulation_write_csv(const struct L1sSimulation *sim, const char *path);

/**
 * # Safety
 * `sim` must be null or a handle from this library, not freed before.
 */
void l1s_simulation_free(struct L1sSimulation *sim);

/**
 * Projection operator applied to vectors of length `n`.
 *
 * # Safety
 * `theta`, `y` readable and `out` writable for `n` doubles.
 */
enum L1sStatus l1s_projection(const double *theta,
                              const double *y,
                              size_t n,
                              double theta_max,
                              double epsilon,
                              double *out);

/**
 * `√(β/Γ)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum L1sStatus l1s_prediction_bound(double beta, double gamma, double *out);

/**
 * `ln μ / ((1 − a*) λ)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum L1sStatus l1s_dwell_time(double mu, double lambda, double a_star, double *out);

/**
 * Switching factor of the tracking bound, with its limit at `μ = 1`.
 *
 * # Safety
 * `out` must be writable.
 */
enum L1sStatus l1s_switching_ratio(double mu, double a, double a_star, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* L1SWITCH_H */
