#ifndef PDM_H
#define PDM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum PdmStatus {
  PDM_STATUS_OK = 0,
  PDM_STATUS_NULL_POINTER = 1,
  PDM_STATUS_INVALID_UTF8 = 2,
  PDM_STATUS_PARSE = 3,
  PDM_STATUS_DOMAIN = 4,
  PDM_STATUS_INTERNAL = 5,
  PDM_STATUS_PANIC = 6,
} PdmStatus;

// Parameter set handle.
typedef struct PdmParamsHandle PdmParamsHandle;

// Surface handle.
typedef struct PdmSurfaceHandle PdmSurfaceHandle;

// Economic instance; see `pdm_scenario_default`.
typedef struct PdmScenario {
  double cost;
  double salvage;
  // Allowed stock-out probability in (0, 1].
  double theta;
  int64_t p_min;
  int64_t p_max;
  double v_max;
  uintptr_t samples;
  uint64_t seed;
  double ad_cost_scale;
} PdmScenario;

typedef struct PdmSolution {
  int64_t p_star;
  double v_star;
  double o_star;
  double objective;
} PdmSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null after a success.
// The pointer stays valid until the next call into this library on the same
// thread.
const char *pdm_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *pdm_version(void);

// Bundled room air conditioner parameter set. Never null.
struct PdmParamsHandle *pdm_params_default(void);

// Load a parameter table (CSV) into `*out`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum PdmStatus pdm_params_load(const char *path, struct PdmParamsHandle **out);

// # Safety
// `params` must come from this library and not be used afterwards.
void pdm_params_free(struct PdmParamsHandle *params);

// Exact demand mean and standard deviation at price `p` and advertising `v`.
//
// # Safety
// Pointers must be valid; `params` must come from this library.
enum PdmStatus pdm_demand_moments(const struct PdmParamsHandle *params,
                                  double p,
                                  double v,
                                  double *mu,
                                  double *sigma);

// Refine a surface over `[p_min, p_max] x [0, v_max]` within `bits` code bits.
//
// # Safety
// Pointers must be valid; `params` must come from this library.
enum PdmStatus pdm_surface_build(const struct PdmParamsHandle *params,
                                 double p_min,
                                 double p_max,
                                 double v_max,
                                 uint32_t bits,
                                 struct PdmSurfaceHandle **out);

// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum PdmStatus pdm_surface_load(const char *path, struct PdmSurfaceHandle **out);

// # Safety
// `surface` must come from this library; `path` must be NUL-terminated.
enum PdmStatus pdm_surface_save(const struct PdmSurfaceHandle *surface, const char *path);

// Number of triangles, or 0 for a null handle.
//
// # Safety
// `surface` must be null or come from this library.
uintptr_t pdm_surface_triangle_count(const struct PdmSurfaceHandle *surface);

// Interpolated mean and standard deviation at `(p, v)`.
//
// # Safety
// Pointers must be valid; `surface` must come from this library.
enum PdmStatus pdm_surface_eval(const struct PdmSurfaceHandle *surface,
                                double p,
                                double v,
                                double *mu,
                                double *sigma);

// # Safety
// `surface` must come from this library and not be used afterwards.
void pdm_surface_free(struct PdmSurfaceHandle *surface);

// Default bounds and sample settings with salvage at a tenth of `cost`.
struct PdmScenario pdm_scenario_default(double cost, double theta);

// Solve the sample-average planning problem on `surface`.
//
// # Safety
// Pointers must be valid; `surface` must come from this library.
enum PdmStatus pdm_solve(const struct PdmSurfaceHandle *surface,
                         const struct PdmScenario *scenario,
                         struct PdmSolution *out);

// Expected profit of a decision when demand is normal with the exact moments
// of `params`.
//
// # Safety
// Pointers must be valid; `params` must come from this library.
enum PdmStatus pdm_expected_profit(const struct PdmParamsHandle *params,
                                   const struct PdmScenario *scenario,
                                   double p,
                                   double v,
                                   double o,
                                   double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PDM_H */
