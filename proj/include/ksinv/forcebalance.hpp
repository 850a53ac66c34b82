#pragma once

#include <Eigen/Dense>

#include "ksinv/model.hpp"
#include "ksinv/propagator.hpp"

namespace ksinv {

// Per-solve health report of the force-balance system.
struct solve_diagnostics {
  double kappa = 0.0;        // inf-norm of the inverse restricted to mean-zero vectors
  double local_energy = 0.0; // E = max(degree * max|T|, |V|_inf)
  double stiffness = 0.0;    // kappa * E^2, the growth-rate driver of the error recursion
  double sigma_min = 0.0;    // smallest restricted singular value
  double sigma_max = 0.0;
  double cond_two = 0.0;     // sigma_max / sigma_min
  double cond_inf = 0.0;     // |K|_inf * kappa
  double residual_inf = 0.0; // |K V - P S|_inf after the solve
  double kernel_mass = 0.0;  // |<S, 1/sqrt(M)>|, weight of S on the null direction
};

// K(j,k) = -T(k,j) <G_jk> + delta_jk sum_m T(m,j) <G_jm>.
// Symmetric with zero row sums by construction.
Eigen::MatrixXd balance_matrix(const Eigen::MatrixXd& exchange, const Eigen::MatrixXd& hopping);
Eigen::MatrixXd balance_matrix(const determinant_state& state, const Eigen::MatrixXd& hopping);

// <Q_j> = ([T, G] T)_jj contracted with the numeric exchange matrix.
Eigen::VectorXd stress_expectation(const determinant_state& state,
                                   const Eigen::MatrixXd& hopping);

// S_j = d2n_target_j - <Q_j>.
Eigen::VectorXd source_vector(const Eigen::VectorXd& density_curvature_target,
                              const determinant_state& state, const Eigen::MatrixXd& hopping);

// Hop-rate weights w(n,n') = -T(n,n') <G_nn'>; satisfies
// K(n,n') = w(n,n') - delta_nn' sum_m w(m,n).
Eigen::MatrixXd hop_rate_weights(const determinant_state& state,
                                 const Eigen::MatrixXd& hopping);

struct solve_options {
  // Restricted spectrum floor: breakdown when sigma_min <= rel_floor * sigma_max.
  double sigma_rel_floor = 1e-10;
  // Tolerance for S leaking onto the null direction, relative to |S|_2.
  // Exceeding it throws inconsistent_source unless project_kernel is set.
  double kernel_rel_tol = 1e-8;
  // Project the kernel component away and record it instead of failing
  // (used with noisy finite-difference sources).
  bool project_kernel = false;
};

struct solve_result {
  Eigen::VectorXd potential;  // mean-zero
  solve_diagnostics diagnostics;
};

// Solves K V = S on the mean-zero subspace via the restricted eigendecomposition.
// diagnostics.local_energy / stiffness are filled by the caller, which knows
// the hopping structure and the accepted potential.
solve_result solve_potential(const Eigen::MatrixXd& balance, const Eigen::VectorXd& source,
                             const solve_options& options = {});

// E = max(degree * max|T|, |V|_inf).
double local_energy_bound(const Eigen::MatrixXd& hopping, const Eigen::VectorXd& potential);
double local_energy_bound(int max_row_degree, double max_abs_hopping,
                          const Eigen::VectorXd& potential);

// The kappa diagnostic alone: inf-norm of the mean-zero-restricted inverse.
// Throws v_representability_breakdown when the restriction is singular.
double restricted_inverse_norm(const Eigen::MatrixXd& balance, double sigma_rel_floor = 1e-10);

}  // namespace ksinv
