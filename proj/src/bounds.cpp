#include "ksinv/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ksinv/errors.hpp"

namespace ksinv {

double unitary_error_bound(const std::vector<Eigen::VectorXd>& v1,
                           const std::vector<Eigen::VectorXd>& v2, double t0, double t1) {
  if (v1.size() != v2.size() || v1.empty())
    throw invalid_argument("unitary_error_bound: potential samples must align");
  if (!(t1 >= t0)) throw invalid_argument("unitary_error_bound: t1 must be >= t0");
  double worst = 0.0;
  for (std::size_t i = 0; i < v1.size(); ++i) {
    if (v1[i].size() != v2[i].size())
      throw invalid_argument("unitary_error_bound: sample size mismatch");
    worst = std::max(worst, (v1[i] - v2[i]).cwiseAbs().maxCoeff());
  }
  return (t1 - t0) * worst;
}

double linear_solve_error_bound(double alpha, double rhs_error, double matrix_error,
                                double solution_norm) {
  if (alpha < 0 || rhs_error < 0 || matrix_error < 0 || solution_norm < 0)
    throw invalid_argument("linear_solve_error_bound: arguments must be nonnegative");
  return alpha * (rhs_error + matrix_error * solution_norm);
}

double second_difference_bound(double curvature_bound, double delta_n) {
  return stencil_error_limit(curvature_bound, delta_n);
}

namespace {

void check_recursion_inputs(const recursion_inputs& in) {
  if (in.rate_budget < 0 || in.kappa <= 0 || in.local_energy <= 0 || in.delta_curvature < 0)
    throw invalid_argument("recursion bound: inputs out of range");
  if (in.steps < 1) throw invalid_argument("recursion bound: steps must be >= 1");
  if (!(in.horizon > 0)) throw invalid_argument("recursion bound: horizon must be positive");
}

}  // namespace

double recursion_bound(const recursion_inputs& in, long k) {
  check_recursion_inputs(in);
  if (k < 0 || k > in.steps) throw invalid_argument("recursion bound: k out of range");
  if (k == 0) return 0.0;
  const double a = 16.0 * in.kappa * in.local_energy * in.local_energy;
  const double dt = in.horizon / static_cast<double>(in.steps);
  const double drive = in.rate_budget * dt + in.kappa * in.delta_curvature;
  // ((1 + a dt)^k - 1) evaluated stably
  const double growth = std::expm1(static_cast<double>(k) * std::log1p(a * dt));
  return drive / a * growth;
}

horizon_bound recursion_bound_at_horizon(const recursion_inputs& in) {
  check_recursion_inputs(in);
  horizon_bound out;
  const double a = 16.0 * in.kappa * in.local_energy * in.local_energy;
  out.exponent = a * in.horizon;
  out.closed_form = recursion_bound(in, in.steps);
  if (out.exponent > 700.0) {
    out.overflow = true;
    out.exponential_form = std::numeric_limits<double>::infinity();
    return out;
  }
  const double dt = in.horizon / static_cast<double>(in.steps);
  out.exponential_form =
      (in.rate_budget * dt / a + in.delta_curvature / (16.0 * in.local_energy * in.local_energy)) *
      std::expm1(out.exponent);
  return out;
}

double density_error_bound(int sites, double state_error) {
  if (sites < 1 || state_error < 0)
    throw invalid_argument("density_error_bound: arguments out of range");
  return 2.0 * sites * state_error;
}

scaled_parameters rescale_to_unit_horizon(double rate_budget, double kappa,
                                          double local_energy, double curvature_bound,
                                          double horizon) {
  if (!(horizon > 0)) throw invalid_argument("rescale_to_unit_horizon: horizon must be positive");
  scaled_parameters out;
  out.rate_budget = rate_budget * horizon * horizon;
  out.kappa = kappa / horizon;
  out.local_energy = local_energy * horizon;
  out.curvature_bound = curvature_bound * horizon * horizon * horizon * horizon;
  return out;
}

cost_report cost_estimates(double rate_budget, int sites, double eps, double kappa,
                           double local_energy, double curvature_bound, long repetitions) {
  cost_report report;
  report.steps = required_steps(rate_budget, sites, eps, kappa, local_energy);
  report.admissible_noise = required_precision(sites, eps, curvature_bound, kappa, local_energy);
  report.exponent_base = 16.0 * kappa * local_energy * local_energy;
  report.classical_exponent_derived = report.exponent_base;
  report.classical_exponent_printed = 4.0 * report.exponent_base;
  report.measurement_exponent_derived = 4.0 * report.exponent_base;
  report.measurement_exponent_printed = report.exponent_base;
  report.note =
      "classical marching cost z M^3 grows like exp(16 kappa E^2) through z, while the "
      "measurement cost r z delta_n^(-3/2) grows like exp(64 kappa E^2) through the "
      "delta_n^(-3/2) factor; the headline forms in the source analysis state these two "
      "exponents the other way around, so both variants are reported";

  const double m3 = static_cast<double>(sites) * sites * sites;
  report.classical_ops.exponent = report.steps.exponent;
  report.classical_ops.overflow = report.steps.overflow;
  report.classical_ops.value =
      report.steps.overflow ? std::numeric_limits<double>::infinity()
                            : report.steps.value * m3;

  report.measurement_ops.exponent = 4.0 * report.steps.exponent;
  report.measurement_ops.overflow = report.steps.overflow || report.admissible_noise.overflow;
  if (report.measurement_ops.overflow) {
    report.measurement_ops.value = std::numeric_limits<double>::infinity();
  } else {
    report.measurement_ops.value = static_cast<double>(repetitions) * report.steps.value *
                                   std::pow(report.admissible_noise.value, -1.5);
  }
  return report;
}

bound_comparison compare_bounds(const reconstruction_result& run, double rate_budget,
                                double delta_curvature) {
  bound_comparison out;
  const long z = static_cast<long>(run.steps.size());
  if (z < 1) throw invalid_argument("compare_bounds: empty run");
  if (run.reference_state_error.size() != static_cast<std::size_t>(z) + 1)
    throw invalid_argument("compare_bounds: run is not instrumented");

  double kappa = 0.0;
  double local_energy = 0.0;
  for (const auto& step : run.steps) {
    kappa = std::max(kappa, step.diagnostics.kappa);
    local_energy = std::max(local_energy, step.diagnostics.local_energy);
  }
  for (double k : run.reference_kappa) kappa = std::max(kappa, k);
  for (const auto& v : run.reference_potential)
    local_energy = std::max(local_energy, v.cwiseAbs().maxCoeff());
  out.kappa_used = kappa;
  out.local_energy_used = local_energy;

  recursion_inputs in;
  in.rate_budget = rate_budget;
  in.kappa = kappa;
  in.local_energy = local_energy;
  in.delta_curvature = delta_curvature;
  in.steps = z;
  in.horizon = run.grid_times.back() - run.grid_times.front();

  out.predicted.resize(static_cast<std::size_t>(z) + 1);
  out.observed = run.reference_state_error;
  for (long k = 0; k <= z; ++k)
    out.predicted[static_cast<std::size_t>(k)] = recursion_bound(in, k);
  for (long k = 0; k <= z; ++k) {
    if (out.observed[static_cast<std::size_t>(k)] >
        out.predicted[static_cast<std::size_t>(k)] + 1e-13) {
      out.ok = false;
      out.first_violation = k;
      break;
    }
  }
  out.final_density_error = run.density_error_l1.back();
  out.final_density_bound =
      density_error_bound(static_cast<int>(run.ks_density.front().size()), out.predicted.back());
  if (out.ok && out.final_density_error > out.final_density_bound + 1e-13) {
    out.ok = false;
    out.first_violation = z;
  }
  return out;
}

}  // namespace ksinv
