#ifndef QUBDOE_H
#define QUBDOE_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QubStatus {
  QUB_STATUS_OK = 0,
  QUB_STATUS_NULL_POINTER = 1,
  QUB_STATUS_INVALID_UTF8 = 2,
  QUB_STATUS_INVALID_INPUT = 3,
  QUB_STATUS_NUMERICAL = 4,
  QUB_STATUS_OUT_OF_RANGE = 5,
  QUB_STATUS_IO = 6,
  QUB_STATUS_PANIC = 7,
} QubStatus;

// Result of a design sweep.
typedef struct QubGrid QubGrid;

// Building model ready for simulation.
typedef struct QubModel QubModel;

// Experiment settings. Temperatures in °C, powers in W, times in s.
typedef struct QubProtocolParams {
  double t_outdoor;
  double p0;
  double p_heat;
  double p_cool;
  double t_qub;
  double window_fraction;
  double sample_dt;
} QubProtocolParams;

// Estimate from one simulated experiment. `c` is NaN when no consistent
// capacity exists.
typedef struct QubEstimateResult {
  double h_qub;
  double c_star;
  double c;
  double alpha_h;
  double alpha_c;
  double r2_h;
  double r2_c;
} QubEstimateResult;

typedef struct QubCell {
  double p_heat;
  double t_qub;
  double h_qub;
  double eps_qub_pct;
  double eps_hm;
  double eps_h_pct;
  double theta_max;
  // 1 when the experiment could be evaluated, 0 otherwise.
  int32_t valid;
} QubCell;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next failing call on the same thread.
const char *qub_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *qub_version(void);

// Fills `params` with the default protocol: 0 °C outside, no base power,
// 1 kW for 3 h, fit over the last third of each phase, 60 s samples.
//
// # Safety
// `params` must be a valid pointer.
enum QubStatus qub_protocol_default(struct QubProtocolParams *params);

// Parses a circuit document and builds its model.
//
// # Safety
// `json` must be a NUL-terminated string and `model` a valid pointer.
enum QubStatus qub_model_from_json(const char *json, struct QubModel **model);

// Loads one of the bundled models: "bungalow", "house" or "ladder".
//
// # Safety
// `name` must be a NUL-terminated string and `model` a valid pointer.
enum QubStatus qub_model_bundled(const char *name, struct QubModel **model);

// # Safety
// `model` must come from this library and not be used afterwards.
void qub_model_free(struct QubModel *model);

// Holds the temperature source `name` at `value` in later calls instead of
// the outdoor temperature.
//
// # Safety
// `model` must be a live handle and `name` a NUL-terminated string.
enum QubStatus qub_model_set_boundary(struct QubModel *model, const char *name, double value);

// # Safety
// `model` must be a live handle and `n` a valid pointer.
enum QubStatus qub_model_n_states(const struct QubModel *model, size_t *n);

// Exact heat transfer coefficient from the static gain, W/K.
//
// # Safety
// `model` must be a live handle and `h` a valid pointer.
enum QubStatus qub_model_reference_h(const struct QubModel *model, double *h);

// Power that holds the indoor temperature reached under `p0`, W.
//
// # Safety
// `model`, `protocol` and `power` must be valid pointers.
enum QubStatus qub_model_maintenance_power(const struct QubModel *model,
                                           const struct QubProtocolParams *protocol,
                                           double *power);

// Simulates one experiment and estimates H and C from its trace.
//
// # Safety
// `model`, `protocol` and `result` must be valid pointers.
enum QubStatus qub_model_estimate(const struct QubModel *model,
                                  const struct QubProtocolParams *protocol,
                                  struct QubEstimateResult *result);

// Evaluates every pair of heating power and duration. `protocol` supplies
// the other settings. A NaN `eps_alpha` takes the slope error from the fit.
// `threads` caps the worker count, 0 for all cores.
//
// # Safety
// `ph` and `t` must point to `n_ph` and `n_t` doubles; `model`, `protocol`
// and `grid` must be valid pointers.
enum QubStatus qub_model_sweep(const struct QubModel *model,
                               const struct QubProtocolParams *protocol,
                               const double *ph,
                               size_t n_ph,
                               const double *t,
                               size_t n_t,
                               double eps_dt,
                               double eps_p_rel,
                               double eps_alpha,
                               size_t threads,
                               struct QubGrid **grid);

// # Safety
// `grid` must come from this library and not be used afterwards.
void qub_grid_free(struct QubGrid *grid);

// # Safety
// All pointers must be valid.
enum QubStatus qub_grid_dims(const struct QubGrid *grid, size_t *n_t, size_t *n_ph);

// Cell at duration index `i_t` and power index `i_ph`.
//
// # Safety
// `grid` and `cell` must be valid pointers.
enum QubStatus qub_grid_cell(const struct QubGrid *grid,
                             size_t i_t,
                             size_t i_ph,
                             struct QubCell *cell);

// Writes the grid as CSV, replacing `path` atomically.
//
// # Safety
// `grid` must be a live handle and `path` a NUL-terminated string.
enum QubStatus qub_grid_export(const struct QubGrid *grid, const char *path);

// Smallest-error valid cell within the limits. Pass infinity for no limit.
//
// # Safety
// `grid` and `cell` must be valid pointers.
enum QubStatus qub_grid_optimum(const struct QubGrid *grid,
                                double max_power,
                                double max_indoor_temperature,
                                double max_total_duration,
                                struct QubCell *cell);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUBDOE_H */
