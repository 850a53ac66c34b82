// Command-line front end for the lattice Kohn-Sham potential reconstruction
// library.  Subcommands: generate, reconstruct, validate, sweep, bounds.
// Every config key can be overridden with --set key=value; exit codes match
// ksinv_status (0 ok, 2 config error, 3 representability breakdown, 4 rate
// budget exhausted, 5 bound/validation failure).
#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "ksinv.h"

namespace {

struct config_handle {
  ksinv_config* ptr = nullptr;
  ~config_handle() { ksinv_config_free(ptr); }
};

struct trace_handle {
  ksinv_trace* ptr = nullptr;
  ~trace_handle() { ksinv_trace_free(ptr); }
};

int report(ksinv_status status, const char* what) {
  if (status != KSINV_OK)
    std::fprintf(stderr, "error: %s: %s (%s)\n", what, ksinv_last_error(),
                 ksinv_status_name(status));
  return static_cast<int>(status);
}

int load_config(const std::string& path, const std::vector<std::string>& overrides,
                config_handle& config) {
  ksinv_status status = ksinv_config_load(path.c_str(), &config.ptr);
  if (status != KSINV_OK) return report(status, "loading config");
  for (const std::string& assignment : overrides) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: override `%s` is not key=value\n", assignment.c_str());
      return static_cast<int>(KSINV_ERR_CONFIG);
    }
    status = ksinv_config_set(config.ptr, assignment.substr(0, eq).c_str(),
                              assignment.substr(eq + 1).c_str());
    if (status != KSINV_OK) return report(status, "applying override");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lattice Kohn-Sham potential reconstruction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ksinv_version()));

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::string trace_path;
  std::string run_dir;
  std::string sweep_key;
  std::vector<std::string> sweep_values;

  auto add_config_options = [&](CLI::App* cmd, bool need_out) {
    cmd->add_option("--config", config_path, "experiment config file")->required();
    cmd->add_option("--set", overrides, "override a config key (key=value)");
    if (need_out) cmd->add_option("--out", out_dir, "output directory");
  };

  CLI::App* generate = app.add_subcommand("generate", "propagate and measure the density");
  add_config_options(generate, true);

  CLI::App* reconstruct =
      app.add_subcommand("reconstruct", "march the Kohn-Sham potential reconstruction");
  add_config_options(reconstruct, true);
  reconstruct->add_option("--trace", trace_path, "measured density trace (json)");

  CLI::App* validate = app.add_subcommand("validate", "re-check a finished run directory");
  validate->add_option("run_dir", run_dir, "run directory")->required();

  CLI::App* sweep = app.add_subcommand("sweep", "fan one key over several values");
  add_config_options(sweep, true);
  sweep->add_option("--key", sweep_key, "config key to sweep")->required();
  sweep->add_option("--value", sweep_values, "value for one sweep entry")->required();

  CLI::App* bounds = app.add_subcommand("bounds", "planning report from the closed forms");
  add_config_options(bounds, false);

  CLI11_PARSE(app, argc, argv);

  if (generate->parsed()) {
    config_handle config;
    if (int rc = load_config(config_path, overrides, config)) return rc;
    char* text = nullptr;
    if (ksinv_config_serialize(config.ptr, &text) == KSINV_OK) ksinv_string_free(text);
    std::string dir = out_dir;
    if (dir.empty()) dir = "out";
    const ksinv_status status = ksinv_generate(config.ptr, dir.c_str(), nullptr);
    if (status == KSINV_OK) std::printf("trace written to %s\n", dir.c_str());
    return report(status, "generate");
  }

  if (reconstruct->parsed()) {
    config_handle config;
    if (int rc = load_config(config_path, overrides, config)) return rc;
    trace_handle trace;
    if (!trace_path.empty()) {
      const ksinv_status status = ksinv_trace_load_json(trace_path.c_str(), &trace.ptr);
      if (status != KSINV_OK) return report(status, "loading trace");
    }
    std::string dir = out_dir;
    if (dir.empty()) dir = "out";
    ksinv_result* result = nullptr;
    const ksinv_status status = ksinv_reconstruct(config.ptr, trace.ptr, dir.c_str(), &result);
    if (status == KSINV_OK) {
      std::printf("reconstructed %ld steps (%d restarts) into %s\n",
                  ksinv_result_steps(result), ksinv_result_restarts(result), dir.c_str());
      ksinv_result_free(result);
    }
    return report(status, "reconstruct");
  }

  if (validate->parsed()) {
    int warnings = 0;
    char* table = nullptr;
    const ksinv_status status = ksinv_validate(run_dir.c_str(), &warnings, &table);
    if (table) {
      std::fputs(table, stdout);
      ksinv_string_free(table);
    }
    if (status != KSINV_OK && status != KSINV_ERR_BOUND_VIOLATION)
      return report(status, "validate");
    return static_cast<int>(status);
  }

  if (sweep->parsed()) {
    // one independent generate+reconstruct per value; failures are recorded
    // and do not stop the remaining entries
    config_handle base;
    if (int rc = load_config(config_path, overrides, base)) return rc;
    std::string root = out_dir;
    if (root.empty()) root = "sweep";
    int worst = 0;
    for (std::size_t i = 0; i < sweep_values.size(); ++i) {
      config_handle entry;
      char* text = nullptr;
      ksinv_status status = ksinv_config_serialize(base.ptr, &text);
      if (status != KSINV_OK) return report(status, "sweep config");
      status = ksinv_config_parse(text, &entry.ptr);
      ksinv_string_free(text);
      if (status != KSINV_OK) return report(status, "sweep config");
      status = ksinv_config_set(entry.ptr, sweep_key.c_str(), sweep_values[i].c_str());
      if (status != KSINV_OK) return report(status, "sweep override");

      const std::string dir = root + "/run_" + std::to_string(i);
      trace_handle trace;
      status = ksinv_generate(entry.ptr, (dir + "/trace").c_str(), &trace.ptr);
      if (status == KSINV_OK)
        status = ksinv_reconstruct(entry.ptr, trace.ptr, dir.c_str(), nullptr);
      std::printf("%s %s=%s -> %s\n", status == KSINV_OK ? "ok  " : "FAIL",
                  sweep_key.c_str(), sweep_values[i].c_str(),
                  status == KSINV_OK ? dir.c_str() : ksinv_status_name(status));
      if (status != KSINV_OK && !worst) worst = static_cast<int>(status);
    }
    return worst;
  }

  if (bounds->parsed()) {
    config_handle config;
    if (int rc = load_config(config_path, overrides, config)) return rc;
    char* json = nullptr;
    const ksinv_status status = ksinv_bounds_report(config.ptr, &json);
    if (json) {
      std::fputs(json, stdout);
      ksinv_string_free(json);
    }
    return report(status, "bounds");
  }

  return 0;
}
