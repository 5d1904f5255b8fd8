#ifndef COOPMAN_H
#define COOPMAN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(COOPMAN_BUILDING_LIBRARY)
#define COOPMAN_API __declspec(dllexport)
#else
#define COOPMAN_API __declspec(dllimport)
#endif
#else
#define COOPMAN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum coopman_status {
  COOPMAN_OK = 0,
  COOPMAN_ERR_INVALID_ARGUMENT = 1,
  COOPMAN_ERR_CONFIG = 2,     /* bad scenario, initial condition or pitch bound */
  COOPMAN_ERR_IO = 3,
  COOPMAN_ERR_MODEL = 4,      /* singularity, rank loss, numerical blow-up */
  COOPMAN_ERR_FUNNEL = 5,
  COOPMAN_ERR_BOUNDS = 6,     /* infeasible bounds or no feasible gains */
  COOPMAN_ERR_TELEMETRY = 7,
  COOPMAN_ERR_INTERNAL = 8
} coopman_status;

typedef struct coopman_scenario coopman_scenario;
typedef struct coopman_run coopman_run;

COOPMAN_API const char* coopman_version(void);
/* Message of the last failed call on this thread; empty when none. */
COOPMAN_API const char* coopman_last_error(void);

COOPMAN_API coopman_status coopman_scenario_load(const char* path, coopman_scenario** out);
COOPMAN_API coopman_status coopman_scenario_parse(const char* toml_text, coopman_scenario** out);
COOPMAN_API void coopman_scenario_free(coopman_scenario* scenario);
/* Valid until the handle is freed. */
COOPMAN_API const char* coopman_scenario_name(const coopman_scenario* scenario);

/* Overrides are re-validated; on failure the scenario is left unchanged. */
COOPMAN_API coopman_status coopman_scenario_set_controller(coopman_scenario* scenario, const char* kind);
COOPMAN_API coopman_status coopman_scenario_set_dt(coopman_scenario* scenario, double dt);
COOPMAN_API coopman_status coopman_scenario_set_duration(coopman_scenario* scenario, double duration);
COOPMAN_API coopman_status coopman_scenario_set_seed(coopman_scenario* scenario, uint64_t seed);

/* key=value bound report for a PPC scenario; the text stays valid until the
   next call on the same handle. Returns COOPMAN_ERR_BOUNDS with the report
   still filled when a link of the chain is not representable. */
COOPMAN_API coopman_status coopman_scenario_bounds(coopman_scenario* scenario, const char** report_text);
/* Writes the text of the last coopman_scenario_bounds call to <dir>/<name>.bounds.txt atomically. */
COOPMAN_API coopman_status coopman_scenario_write_bounds(const coopman_scenario* scenario, const char* directory);

/* Runs to completion. Run failures (funnel exit, blow-up) are recorded in the
   run handle; only setup failures return an error status. */
COOPMAN_API coopman_status coopman_run_scenario(const coopman_scenario* scenario, coopman_run** out);
COOPMAN_API void coopman_run_free(coopman_run* run);
COOPMAN_API int coopman_run_passed(const coopman_run* run);
COOPMAN_API int coopman_run_completed(const coopman_run* run);
COOPMAN_API long coopman_run_funnel_violations(const coopman_run* run);
COOPMAN_API long coopman_run_saturation_violations(const coopman_run* run);
/* Status code of the run's hard failure, COOPMAN_OK when none. */
COOPMAN_API coopman_status coopman_run_failure(const coopman_run* run);
/* Message of the run's hard failure; empty when none. */
COOPMAN_API const char* coopman_run_failure_message(const coopman_run* run);
COOPMAN_API const char* coopman_run_report_json(const coopman_run* run);
/* Writes <dir>/<name>.csv, <name>.report.json and <name>.metrics.json atomically. */
COOPMAN_API coopman_status coopman_run_write(const coopman_run* run, const char* directory);

#ifdef __cplusplus
}
#endif

#endif
