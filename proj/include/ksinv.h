/* C interface to the lattice Kohn-Sham potential-reconstruction library.
 *
 * All objects are opaque handles created and destroyed by this API; every
 * function returns a ksinv_status, with KSINV_OK meaning success.  On failure
 * a human-readable message is available from ksinv_last_error() until the
 * next API call on the same thread.  Status values double as the CLI exit
 * codes (0 ok, 2 bad config, 3 representability breakdown, 4 rate budget
 * exhausted, 5 bound/validation failure).
 */
#ifndef KSINV_H
#define KSINV_H

#include <stddef.h>

#if defined(_WIN32)
#define KSINV_API __declspec(dllexport)
#else
#define KSINV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ksinv_status {
  KSINV_OK = 0,
  KSINV_ERR_INTERNAL = 1,
  KSINV_ERR_CONFIG = 2,
  KSINV_ERR_BREAKDOWN = 3,
  KSINV_ERR_RATE_BUDGET = 4,
  KSINV_ERR_BOUND_VIOLATION = 5,
  KSINV_ERR_INCONSISTENT_INITIAL = 6,
  KSINV_ERR_INCONSISTENT_SOURCE = 7,
  KSINV_ERR_IO = 8,
  KSINV_ERR_INVALID_ARGUMENT = 9,
  KSINV_ERR_CONSTRUCTION = 10
} ksinv_status;

typedef struct ksinv_config ksinv_config;
typedef struct ksinv_trace ksinv_trace;
typedef struct ksinv_result ksinv_result;

KSINV_API const char* ksinv_version(void);
KSINV_API const char* ksinv_status_name(ksinv_status status);
/* Message from the most recent failing call on this thread ("" if none). */
KSINV_API const char* ksinv_last_error(void);
/* Frees any string returned through a char** out-parameter. */
KSINV_API void ksinv_string_free(char* text);

/* -- configuration ------------------------------------------------------- */

KSINV_API ksinv_status ksinv_config_create(ksinv_config** out);
KSINV_API ksinv_status ksinv_config_parse(const char* text, ksinv_config** out);
KSINV_API ksinv_status ksinv_config_load(const char* path, ksinv_config** out);
/* Sets one dotted key, e.g. ("march.dt", "0.0025"). */
KSINV_API ksinv_status ksinv_config_set(ksinv_config* config, const char* key,
                                        const char* value);
/* Canonical text with every key explicit; free with ksinv_string_free. */
KSINV_API ksinv_status ksinv_config_serialize(const ksinv_config* config, char** out_text);
KSINV_API void ksinv_config_free(ksinv_config* config);

/* -- density traces ------------------------------------------------------ */

KSINV_API ksinv_status ksinv_trace_load_json(const char* path, ksinv_trace** out);
KSINV_API ksinv_status ksinv_trace_save_json(const ksinv_trace* trace, const char* path);
KSINV_API ksinv_status ksinv_trace_save_csv(const ksinv_trace* trace, const char* path);
KSINV_API size_t ksinv_trace_samples(const ksinv_trace* trace);
KSINV_API int ksinv_trace_sites(const ksinv_trace* trace);
/* Copies one sample; density_out must hold ksinv_trace_sites() doubles. */
KSINV_API ksinv_status ksinv_trace_sample(const ksinv_trace* trace, size_t index,
                                          double* time_out, double* density_out);
KSINV_API void ksinv_trace_free(ksinv_trace* trace);

/* -- pipeline ------------------------------------------------------------ */

/* Generates the measured density trace into out_dir (density.csv/json +
 * manifest.json).  out_trace may be NULL when only the files are wanted. */
KSINV_API ksinv_status ksinv_generate(const ksinv_config* config, const char* out_dir,
                                      ksinv_trace** out_trace);

/* Reconstructs the time-dependent potential.  trace is required for
 * stencil-mode configs and ignored in exact mode.  Writes potentials.csv,
 * density.csv, diagnostics.csv, bound_report.json, manifest.json. */
KSINV_API ksinv_status ksinv_reconstruct(const ksinv_config* config, const ksinv_trace* trace,
                                         const char* out_dir, ksinv_result** out_result);

KSINV_API long ksinv_result_steps(const ksinv_result* result);
KSINV_API int ksinv_result_sites(const ksinv_result* result);
KSINV_API int ksinv_result_restarts(const ksinv_result* result);
/* Potential at one step; v_out must hold ksinv_result_sites() doubles. */
KSINV_API ksinv_status ksinv_result_potential(const ksinv_result* result, long step,
                                              double* time_out, double* v_out);
/* Grid density error |n_ks - n_target|_1 at grid point 0..steps. */
KSINV_API ksinv_status ksinv_result_density_error(const ksinv_result* result, long grid_point,
                                                  double* time_out, double* l1_out);
KSINV_API ksinv_status ksinv_result_diagnostics(const ksinv_result* result, long step,
                                                double* kappa, double* local_energy,
                                                double* stiffness, double* sigma_min,
                                                double* residual);
KSINV_API void ksinv_result_free(ksinv_result* result);

/* -- auditing and planning ------------------------------------------------ */

/* Re-checks a finished run directory from its files; report_out (optional)
 * receives the rendered check table.  Returns KSINV_OK when every check
 * passes (warnings allowed), KSINV_ERR_BOUND_VIOLATION otherwise. */
KSINV_API ksinv_status ksinv_validate(const char* run_dir, int* warnings_out,
                                      char** report_out);

/* Planning report (required steps, admissible noise, cost estimates) as a
 * JSON string; free with ksinv_string_free. */
KSINV_API ksinv_status ksinv_bounds_report(const ksinv_config* config, char** json_out);

#ifdef __cplusplus
}
#endif

#endif /* KSINV_H */
