#pragma once

#include <stdexcept>
#include <string>

namespace ksinv {

// Stable numeric codes for every failure class.  The CLI maps these directly
// to process exit codes, and the C API returns them unchanged.
enum class status : int {
  ok = 0,
  internal = 1,
  config_error = 2,
  representability_breakdown = 3,
  lipschitz_budget_exceeded = 4,
  bound_violation = 5,
  inconsistent_initial_state = 6,
  inconsistent_source = 7,
  io_error = 8,
  invalid_argument = 9,
  construction_fault = 10,
};

inline const char* status_name(status s) {
  switch (s) {
    case status::ok: return "ok";
    case status::internal: return "internal";
    case status::config_error: return "config_error";
    case status::representability_breakdown: return "representability_breakdown";
    case status::lipschitz_budget_exceeded: return "lipschitz_budget_exceeded";
    case status::bound_violation: return "bound_violation";
    case status::inconsistent_initial_state: return "inconsistent_initial_state";
    case status::inconsistent_source: return "inconsistent_source";
    case status::io_error: return "io_error";
    case status::invalid_argument: return "invalid_argument";
    case status::construction_fault: return "construction_fault";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(status code, const std::string& what) : std::runtime_error(what), code_(code) {}
  status code() const { return code_; }

 private:
  status code_;
};

// Restricted solve is singular below the floor: the density trajectory has no
// reconstructible potential at this step.
class v_representability_breakdown : public error {
 public:
  explicit v_representability_breakdown(const std::string& what)
      : error(status::representability_breakdown, what) {}
};

// Source vector has weight on the null direction of the force-balance system.
class inconsistent_source : public error {
 public:
  explicit inconsistent_source(const std::string& what)
      : error(status::inconsistent_source, what) {}
};

// Initial orbitals fail to reproduce the target density or its first derivative.
class inconsistent_initial_state : public error {
 public:
  explicit inconsistent_initial_state(const std::string& what)
      : error(status::inconsistent_initial_state, what) {}
};

// Potential stepped faster than the declared rate budget even after the
// allowed number of restarts.
class lipschitz_budget_exceeded : public error {
 public:
  explicit lipschitz_budget_exceeded(const std::string& what)
      : error(status::lipschitz_budget_exceeded, what) {}
};

// An a-priori error bound was exceeded by an observed error.
class bound_violation : public error {
 public:
  explicit bound_violation(const std::string& what) : error(status::bound_violation, what) {}
};

// An operator or matrix failed a structural self-check during assembly.
class construction_fault : public error {
 public:
  explicit construction_fault(const std::string& what)
      : error(status::construction_fault, what) {}
};

class config_error : public error {
 public:
  explicit config_error(const std::string& what) : error(status::config_error, what) {}
};

class io_error : public error {
 public:
  explicit io_error(const std::string& what) : error(status::io_error, what) {}
};

class invalid_argument : public error {
 public:
  explicit invalid_argument(const std::string& what) : error(status::invalid_argument, what) {}
};

}  // namespace ksinv
