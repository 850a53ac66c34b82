#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "ksinv/forcebalance.hpp"
#include "ksinv/model.hpp"
#include "ksinv/oracle.hpp"
#include "ksinv/propagator.hpp"

namespace ksinv {

enum class source_mode {
  exact,    // density curvature from the co-propagated many-body state
  stencil,  // density curvature from finite differences on a measured trace
};

struct march_config {
  double t0 = 0.0;
  double t1 = 1.0;
  double dt = 0.0;  // step size; steps = (t1 - t0) / dt must be integral

  source_mode mode = source_mode::exact;

  // Declared rate budget for the reconstructed potential.  When a step moves
  // the potential by more than rate * dt * (1 + rel slack) + abs slack, the
  // march restarts from t0 with the budget scaled by restart_growth, at most
  // max_restarts times, then fails with lipschitz_budget_exceeded.
  double rate_budget = 1.0;
  double restart_growth = 2.0;
  int max_restarts = 8;
  double guard_rel_slack = 0.25;
  double guard_abs_slack = 1e-12;

  double target_accuracy = 0.1;  // epsilon entering step/precision planning

  // Initial-state consistency gate; infinity disables.
  double consistency_tol = 1e-8;

  // Substeps per dt for any interacting co-propagation.
  int substeps = 8;

  solve_options solver;

  // Stencil-mode controls: explicit half-width (0 = derive from noise + c4)
  // and curvature bound used to derive it.
  double stencil_width = 0.0;
  double curvature_bound = 0.0;

  // Record the exact single-particle trajectory alongside the reconstruction
  // (only meaningful for non-interacting models); enables bound comparison.
  bool instrument = false;

  long steps() const;  // validates dt divides the horizon
};

struct march_step_record {
  double t = 0.0;
  Eigen::VectorXd potential;
  solve_diagnostics diagnostics;
};

struct reconstruction_result {
  // One record per step, at the step start (size z).
  std::vector<march_step_record> steps;
  // Grid times and densities including both endpoints (size z + 1).
  std::vector<double> grid_times;
  std::vector<Eigen::VectorXd> ks_density;
  std::vector<Eigen::VectorXd> target_density;
  std::vector<double> density_error_l1;

  int restarts = 0;
  double rate_budget_final = 0.0;
  double stencil_width_used = 0.0;
  long stencil_stride = 0;  // grid points per stencil half-width (stencil mode)
  double max_kernel_mass = 0.0;

  // Instrumented runs: reference trajectory data (size z + 1 / z).
  std::vector<double> reference_state_error;       // |Phi_ref - Phi_marched|_2 in Fock space
  std::vector<Eigen::VectorXd> reference_potential; // true mean-zero potential per step
  std::vector<double> reference_kappa;              // kappa along the reference trajectory

  determinant_state final_state;
};

struct consistency_report {
  double density_residual_inf = 0.0;
  double rate_residual_inf = 0.0;
  bool pass = true;
};

// Compares the determinant's density and density rate against a many-body
// state (exact) or against a trace (central difference for the rate).
consistency_report check_initial_consistency(const determinant_state& phi,
                                             const many_body_state& psi,
                                             const fock_basis& basis,
                                             const Eigen::MatrixXd& hopping, double tol);
consistency_report check_initial_consistency(const determinant_state& phi,
                                             const density_trace& trace,
                                             const Eigen::MatrixXd& hopping, double tol);

// Explicit potential-reconstruction march.  Exact mode co-propagates psi0
// under the model's scheduled potential; stencil mode differentiates the
// supplied trace.  Throws the error classes from errors.hpp on failure.
reconstruction_result march(const determinant_state& phi0, const lattice_model& model,
                            const many_body_state& psi0, const march_config& config);
reconstruction_result march(const determinant_state& phi0, const lattice_model& model,
                            const density_trace& trace, const march_config& config);

// Builds initial orbitals reproducing a target density and density rate:
// reference orbital amplitudes are rescaled site-wise to match the density,
// then one global phase field (a discrete velocity potential) is fitted to
// the rate by Gauss-Newton.  Exact density match for N = 1; heuristic and
// flagged experimental for N > 1.
Eigen::MatrixXcd fit_initial_orbitals(const Eigen::MatrixXcd& reference_orbitals,
                                      const Eigen::VectorXd& density_target,
                                      const Eigen::VectorXd& rate_target,
                                      const Eigen::MatrixXd& hopping);

// A bound or count that may exceed what a double (or the step budget) can hold.
struct planned_quantity {
  double value = 0.0;    // valid when finite
  bool overflow = false; // exponential factor left the double range
  double exponent = 0.0; // raw exponent 16 kappa E^2 driving the growth
};

// Smallest step count z with (M L / (4 eps kappa E^2)) (e^(16 kappa E^2) - 1) <= z.
planned_quantity required_steps(double rate_budget, int sites, double eps, double kappa,
                                double local_energy);

// Largest measurement tolerance delta_n admissible for accuracy eps:
// delta_n <= [ (sqrt(2) M sqrt(c4) / (4 eps E^2)) (e^(16 kappa E^2) - 1) ]^(-2).
planned_quantity required_precision(int sites, double eps, double curvature_bound,
                                    double kappa, double local_energy);

}  // namespace ksinv
