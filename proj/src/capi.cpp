#include "ksinv.h"

#include <cstring>
#include <new>
#include <optional>
#include <string>

#include "ksinv/errors.hpp"
#include "ksinv/runner.hpp"

struct ksinv_config {
  ksinv::config_map map;
};

struct ksinv_trace {
  ksinv::density_trace trace;
};

struct ksinv_result {
  ksinv::reconstruction_result run;
};

namespace {

thread_local std::string g_last_error;

ksinv_status to_status(ksinv::status code) { return static_cast<ksinv_status>(code); }

ksinv_status fail(ksinv_status code, const char* message) {
  g_last_error = message ? message : "";
  return code;
}

// Runs the body, translating exceptions to status codes.
template <typename Fn>
ksinv_status guarded(Fn&& body) {
  try {
    g_last_error.clear();
    body();
    return KSINV_OK;
  } catch (const ksinv::error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return KSINV_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return KSINV_ERR_INTERNAL;
  }
}

char* copy_string(const std::string& text) {
  char* out = new char[text.size() + 1];
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* ksinv_version(void) { return ksinv::library_version(); }

const char* ksinv_status_name(ksinv_status status) {
  return ksinv::status_name(static_cast<ksinv::status>(status));
}

const char* ksinv_last_error(void) { return g_last_error.c_str(); }

void ksinv_string_free(char* text) { delete[] text; }

/* -- configuration --------------------------------------------------------- */

ksinv_status ksinv_config_create(ksinv_config** out) {
  if (!out) return fail(KSINV_ERR_INVALID_ARGUMENT, "out must not be null");
  return guarded([&]() { *out = new ksinv_config(); });
}

ksinv_status ksinv_config_parse(const char* text, ksinv_config** out) {
  if (!text || !out) return fail(KSINV_ERR_INVALID_ARGUMENT, "text and out must not be null");
  return guarded([&]() { *out = new ksinv_config{ksinv::config_map::parse(text)}; });
}

ksinv_status ksinv_config_load(const char* path, ksinv_config** out) {
  if (!path || !out) return fail(KSINV_ERR_INVALID_ARGUMENT, "path and out must not be null");
  return guarded([&]() { *out = new ksinv_config{ksinv::config_map::load(path)}; });
}

ksinv_status ksinv_config_set(ksinv_config* config, const char* key, const char* value) {
  if (!config || !key || !value)
    return fail(KSINV_ERR_INVALID_ARGUMENT, "config, key, and value must not be null");
  return guarded([&]() { config->map.set(key, value); });
}

ksinv_status ksinv_config_serialize(const ksinv_config* config, char** out_text) {
  if (!config || !out_text)
    return fail(KSINV_ERR_INVALID_ARGUMENT, "config and out_text must not be null");
  return guarded([&]() {
    const ksinv::experiment exp = ksinv::parse_experiment(config->map);
    *out_text = copy_string(exp.canonical().serialize());
  });
}

void ksinv_config_free(ksinv_config* config) { delete config; }

/* -- density traces -------------------------------------------------------- */

ksinv_status ksinv_trace_load_json(const char* path, ksinv_trace** out) {
  if (!path || !out) return fail(KSINV_ERR_INVALID_ARGUMENT, "path and out must not be null");
  return guarded([&]() {
    *out = new ksinv_trace{ksinv::trace_from_json(ksinv::read_text_file(path))};
  });
}

ksinv_status ksinv_trace_save_json(const ksinv_trace* trace, const char* path) {
  if (!trace || !path)
    return fail(KSINV_ERR_INVALID_ARGUMENT, "trace and path must not be null");
  return guarded([&]() {
    ksinv::write_text_file(path, ksinv::trace_to_json(trace->trace));
  });
}

ksinv_status ksinv_trace_save_csv(const ksinv_trace* trace, const char* path) {
  if (!trace || !path)
    return fail(KSINV_ERR_INVALID_ARGUMENT, "trace and path must not be null");
  return guarded([&]() {
    ksinv::csv_write(path, ksinv::trace_to_csv(trace->trace));
  });
}

size_t ksinv_trace_samples(const ksinv_trace* trace) {
  return trace ? trace->trace.samples() : 0;
}

int ksinv_trace_sites(const ksinv_trace* trace) { return trace ? trace->trace.sites : 0; }

ksinv_status ksinv_trace_sample(const ksinv_trace* trace, size_t index, double* time_out,
                                double* density_out) {
  if (!trace || !time_out || !density_out)
    return fail(KSINV_ERR_INVALID_ARGUMENT, "trace and outputs must not be null");
  if (index >= trace->trace.samples())
    return fail(KSINV_ERR_INVALID_ARGUMENT, "sample index out of range");
  *time_out = trace->trace.times[index];
  const Eigen::VectorXd& v = trace->trace.values[index];
  for (int j = 0; j < trace->trace.sites; ++j) density_out[j] = v(j);
  g_last_error.clear();
  return KSINV_OK;
}

void ksinv_trace_free(ksinv_trace* trace) { delete trace; }

/* -- pipeline --------------------------------------------------------------- */

ksinv_status ksinv_generate(const ksinv_config* config, const char* out_dir,
                            ksinv_trace** out_trace) {
  if (!config || !out_dir)
    return fail(KSINV_ERR_INVALID_ARGUMENT, "config and out_dir must not be null");
  return guarded([&]() {
    const ksinv::experiment exp = ksinv::parse_experiment(config->map);
    ksinv::generate_outcome outcome = ksinv::run_generate(exp, out_dir);
    if (out_trace) *out_trace = new ksinv_trace{std::move(outcome.trace)};
  });
}

ksinv_status ksinv_reconstruct(const ksinv_config* config, const ksinv_trace* trace,
                               const char* out_dir, ksinv_result** out_result) {
  if (!config || !out_dir)
    return fail(KSINV_ERR_INVALID_ARGUMENT, "config and out_dir must not be null");
  return guarded([&]() {
    const ksinv::experiment exp = ksinv::parse_experiment(config->map);
    std::optional<ksinv::density_trace> maybe_trace;
    if (trace) maybe_trace = trace->trace;
    ksinv::reconstruct_outcome outcome = ksinv::run_reconstruct(exp, maybe_trace, out_dir);
    if (out_result) *out_result = new ksinv_result{std::move(outcome.run)};
  });
}

long ksinv_result_steps(const ksinv_result* result) {
  return result ? static_cast<long>(result->run.steps.size()) : 0;
}

int ksinv_result_sites(const ksinv_result* result) {
  if (!result || result->run.steps.empty()) return 0;
  return static_cast<int>(result->run.steps.front().potential.size());
}

int ksinv_result_restarts(const ksinv_result* result) {
  return result ? result->run.restarts : 0;
}

ksinv_status ksinv_result_potential(const ksinv_result* result, long step, double* time_out,
                                    double* v_out) {
  if (!result || !time_out || !v_out)
    return fail(KSINV_ERR_INVALID_ARGUMENT, "result and outputs must not be null");
  if (step < 0 || static_cast<std::size_t>(step) >= result->run.steps.size())
    return fail(KSINV_ERR_INVALID_ARGUMENT, "step index out of range");
  const ksinv::march_step_record& record = result->run.steps[static_cast<std::size_t>(step)];
  *time_out = record.t;
  for (Eigen::Index j = 0; j < record.potential.size(); ++j) v_out[j] = record.potential(j);
  g_last_error.clear();
  return KSINV_OK;
}

ksinv_status ksinv_result_density_error(const ksinv_result* result, long grid_point,
                                        double* time_out, double* l1_out) {
  if (!result || !time_out || !l1_out)
    return fail(KSINV_ERR_INVALID_ARGUMENT, "result and outputs must not be null");
  if (grid_point < 0 ||
      static_cast<std::size_t>(grid_point) >= result->run.grid_times.size())
    return fail(KSINV_ERR_INVALID_ARGUMENT, "grid point out of range");
  *time_out = result->run.grid_times[static_cast<std::size_t>(grid_point)];
  *l1_out = result->run.density_error_l1[static_cast<std::size_t>(grid_point)];
  g_last_error.clear();
  return KSINV_OK;
}

ksinv_status ksinv_result_diagnostics(const ksinv_result* result, long step, double* kappa,
                                      double* local_energy, double* stiffness,
                                      double* sigma_min, double* residual) {
  if (!result) return fail(KSINV_ERR_INVALID_ARGUMENT, "result must not be null");
  if (step < 0 || static_cast<std::size_t>(step) >= result->run.steps.size())
    return fail(KSINV_ERR_INVALID_ARGUMENT, "step index out of range");
  const ksinv::solve_diagnostics& d =
      result->run.steps[static_cast<std::size_t>(step)].diagnostics;
  if (kappa) *kappa = d.kappa;
  if (local_energy) *local_energy = d.local_energy;
  if (stiffness) *stiffness = d.stiffness;
  if (sigma_min) *sigma_min = d.sigma_min;
  if (residual) *residual = d.residual_inf;
  g_last_error.clear();
  return KSINV_OK;
}

void ksinv_result_free(ksinv_result* result) { delete result; }

/* -- auditing and planning --------------------------------------------------- */

ksinv_status ksinv_validate(const char* run_dir, int* warnings_out, char** report_out) {
  if (!run_dir) return fail(KSINV_ERR_INVALID_ARGUMENT, "run_dir must not be null");
  ksinv::validation_report report;
  const ksinv_status status = guarded([&]() { report = ksinv::run_validate(run_dir); });
  if (status != KSINV_OK) return status;
  if (warnings_out) *warnings_out = report.warnings;
  if (report_out) *report_out = copy_string(report.render());
  if (!report.passed) {
    g_last_error = "validation failed";
    return KSINV_ERR_BOUND_VIOLATION;
  }
  return KSINV_OK;
}

ksinv_status ksinv_bounds_report(const ksinv_config* config, char** json_out) {
  if (!config || !json_out)
    return fail(KSINV_ERR_INVALID_ARGUMENT, "config and json_out must not be null");
  return guarded([&]() {
    const ksinv::experiment exp = ksinv::parse_experiment(config->map);
    *json_out = copy_string(ksinv::bounds_report(exp));
  });
}

}  // extern "C"
