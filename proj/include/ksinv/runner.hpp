#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ksinv/bounds.hpp"
#include "ksinv/config.hpp"
#include "ksinv/io.hpp"
#include "ksinv/marcher.hpp"
#include "ksinv/model.hpp"
#include "ksinv/oracle.hpp"

namespace ksinv {

enum class initial_state_kind {
  ground,     // lowest orbitals of T + diag(V(t0))
  localized,  // unit orbitals on the listed sites
  fitted,     // density/rate fit against the trace (stencil mode)
};

// Fully resolved experiment: model, schedule, noise, marching parameters.
struct experiment {
  lattice_model model;
  march_config march;
  noise_spec noise;
  initial_state_kind initial = initial_state_kind::ground;
  std::vector<int> initial_sites;
  std::string output_dir = "out";
  bool rescale_time = false;
  double stiffness_warn = 1.0;

  // Planning assumptions for the bounds report (no run data exists yet):
  // kappa to assume, and an E override (0 derives E from the bare lattice).
  double plan_kappa = 1.0;
  double plan_local_energy = 0.0;

  // Every key made explicit with canonical formatting (defaults included).
  config_map canonical() const;
};

// Validates and resolves a raw key-value map; unknown keys are rejected with
// the offending key path in the message.
experiment parse_experiment(const config_map& raw);

struct generate_outcome {
  density_trace trace;
  std::string trace_json_path;
  std::string trace_csv_path;
};

// Propagates the interacting model on the marching grid (plus the stencil
// margin), measures densities, writes density.csv / density.json / manifest.json.
generate_outcome run_generate(const experiment& exp, const std::string& out_dir);

struct reconstruct_outcome {
  reconstruction_result run;
  bound_comparison bounds;
  std::string bound_report_json;
};

// Runs the marching reconstruction and writes potentials.csv, density.csv,
// diagnostics.csv, bound_report.json, manifest.json.  Stencil mode requires a
// trace; exact mode ignores it.
reconstruct_outcome run_reconstruct(const experiment& exp,
                                    const std::optional<density_trace>& trace,
                                    const std::string& out_dir);

struct validation_check {
  std::string name;
  std::string detail;
  bool passed = true;
  bool warning = false;  // warnings do not fail validation
};

struct validation_report {
  std::vector<validation_check> checks;
  bool passed = true;
  int warnings = 0;
  std::string render() const;
};

// Re-checks invariants of a finished run directory from its persisted files
// only: mean-zero potentials, rate budget, density normalization, diagnostic
// identities, and recorded bound dominance.  High stiffness yields a warning.
validation_report run_validate(const std::string& run_dir);

// Planning report (steps, admissible noise, cost estimates) as a JSON string.
std::string bounds_report(const experiment& exp);

struct sweep_entry {
  std::string value;
  std::string dir;
  int status_code = 0;
  std::string message;
};

// Fans the pipeline out over one axis: for each value the key is overridden,
// generate runs when the source is a stencil, then reconstruct.  Entries are
// independent; a failure is recorded and the sweep continues.
std::vector<sweep_entry> run_sweep(const config_map& base, const std::string& key,
                                   const std::vector<std::string>& values,
                                   const std::string& out_root);

const char* library_version();

}  // namespace ksinv
