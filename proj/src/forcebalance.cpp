#include "ksinv/forcebalance.hpp"

#include <cmath>

#include "ksinv/errors.hpp"

namespace ksinv {

Eigen::MatrixXd balance_matrix(const Eigen::MatrixXd& exchange, const Eigen::MatrixXd& hopping) {
  const int m = static_cast<int>(exchange.rows());
  Eigen::MatrixXd k(m, m);
  for (int j = 0; j < m; ++j) {
    for (int c = 0; c < m; ++c) k(j, c) = -hopping(c, j) * exchange(j, c);
    double diag = 0.0;
    for (int row = 0; row < m; ++row) diag += hopping(row, j) * exchange(j, row);
    k(j, j) += diag;
  }
  return k;
}

Eigen::MatrixXd balance_matrix(const determinant_state& state, const Eigen::MatrixXd& hopping) {
  return balance_matrix(exchange_matrix(state), hopping);
}

Eigen::VectorXd stress_expectation(const determinant_state& state,
                                   const Eigen::MatrixXd& hopping) {
  const Eigen::MatrixXd g = exchange_matrix(state);
  return ((hopping * g - g * hopping) * hopping).diagonal();
}

Eigen::VectorXd source_vector(const Eigen::VectorXd& density_curvature_target,
                              const determinant_state& state, const Eigen::MatrixXd& hopping) {
  return density_curvature_target - stress_expectation(state, hopping);
}

Eigen::MatrixXd hop_rate_weights(const determinant_state& state,
                                 const Eigen::MatrixXd& hopping) {
  const Eigen::MatrixXd g = exchange_matrix(state);
  return (-hopping.array() * g.array()).matrix();
}

namespace {

// Orthonormal basis of the mean-zero subspace, fixed per dimension: columns
// 2..M of the Householder reflection carrying e_1 onto the constant vector.
Eigen::MatrixXd mean_zero_frame(int m) {
  Eigen::VectorXd ones = Eigen::VectorXd::Constant(m, 1.0 / std::sqrt(double(m)));
  Eigen::VectorXd w = ones;
  w(0) -= 1.0;
  double norm = w.norm();
  Eigen::MatrixXd frame(m, m - 1);
  if (norm < 1e-14) {
    frame = Eigen::MatrixXd::Identity(m, m).rightCols(m - 1);
    return frame;
  }
  w /= norm;
  Eigen::MatrixXd reflect = Eigen::MatrixXd::Identity(m, m) - 2.0 * w * w.transpose();
  return reflect.rightCols(m - 1);
}

}  // namespace

solve_result solve_potential(const Eigen::MatrixXd& balance, const Eigen::VectorXd& source,
                             const solve_options& options) {
  const int m = static_cast<int>(balance.rows());
  if (balance.cols() != m || source.size() != m)
    throw invalid_argument("solve_potential: shape mismatch");
  if (m < 2) throw invalid_argument("solve_potential: need at least two sites");
  double scale = std::max(1.0, balance.cwiseAbs().maxCoeff());
  if ((balance - balance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw construction_fault("solve_potential: balance matrix is not symmetric");

  solve_result out;
  auto& d = out.diagnostics;

  const Eigen::MatrixXd frame = mean_zero_frame(m);
  const Eigen::MatrixXd restricted = frame.transpose() * balance * frame;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(restricted);
  if (eigs.info() != Eigen::Success)
    throw construction_fault("solve_potential: eigendecomposition failed");

  const Eigen::VectorXd lambda = eigs.eigenvalues();
  d.sigma_min = lambda.cwiseAbs().minCoeff();
  d.sigma_max = lambda.cwiseAbs().maxCoeff();
  if (d.sigma_max <= 0.0 || d.sigma_min <= options.sigma_rel_floor * d.sigma_max)
    throw v_representability_breakdown(
        "restricted force-balance spectrum is singular (sigma_min = " +
        std::to_string(d.sigma_min) + ", sigma_max = " + std::to_string(d.sigma_max) + ")");
  d.cond_two = d.sigma_max / d.sigma_min;

  // weight of the source on the null direction
  const double mean_component = source.sum() / std::sqrt(double(m));
  d.kernel_mass = std::abs(mean_component);
  const double source_norm = source.norm();
  if (!options.project_kernel &&
      d.kernel_mass > options.kernel_rel_tol * std::max(source_norm, 1e-300))
    throw inconsistent_source("source has weight " + std::to_string(d.kernel_mass) +
                              " on the null direction (|S|_2 = " +
                              std::to_string(source_norm) + ")");

  const Eigen::VectorXd reduced = frame.transpose() * source;
  const Eigen::VectorXd modes = eigs.eigenvectors().transpose() * reduced;
  const Eigen::VectorXd solved = modes.array() / lambda.array();
  Eigen::VectorXd v = frame * (eigs.eigenvectors() * solved);
  v.array() -= v.mean();
  out.potential = v;

  const Eigen::MatrixXd inverse_restricted =
      frame * (eigs.eigenvectors() *
               lambda.cwiseInverse().asDiagonal() *
               eigs.eigenvectors().transpose()) *
      frame.transpose();
  d.kappa = inverse_restricted.cwiseAbs().rowwise().sum().maxCoeff();
  d.cond_inf = balance.cwiseAbs().rowwise().sum().maxCoeff() * d.kappa;

  const Eigen::VectorXd projected =
      source - Eigen::VectorXd::Constant(m, source.sum() / double(m));
  d.residual_inf = (balance * v - projected).cwiseAbs().maxCoeff();
  return out;
}

double local_energy_bound(int max_row_degree, double max_abs_hopping,
                          const Eigen::VectorXd& potential) {
  double v_inf = potential.size() ? potential.cwiseAbs().maxCoeff() : 0.0;
  return std::max(max_row_degree * max_abs_hopping, v_inf);
}

double restricted_inverse_norm(const Eigen::MatrixXd& balance, double sigma_rel_floor) {
  const int m = static_cast<int>(balance.rows());
  const Eigen::MatrixXd frame = mean_zero_frame(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(frame.transpose() * balance * frame);
  if (eigs.info() != Eigen::Success)
    throw construction_fault("restricted_inverse_norm: eigendecomposition failed");
  const Eigen::VectorXd lambda = eigs.eigenvalues();
  const double sigma_min = lambda.cwiseAbs().minCoeff();
  const double sigma_max = lambda.cwiseAbs().maxCoeff();
  if (sigma_max <= 0.0 || sigma_min <= sigma_rel_floor * sigma_max)
    throw v_representability_breakdown("restricted balance matrix is singular");
  const Eigen::MatrixXd inverse_restricted =
      frame * (eigs.eigenvectors() * lambda.cwiseInverse().asDiagonal() *
               eigs.eigenvectors().transpose()) *
      frame.transpose();
  return inverse_restricted.cwiseAbs().rowwise().sum().maxCoeff();
}

double local_energy_bound(const Eigen::MatrixXd& hopping, const Eigen::VectorXd& potential) {
  const int m = static_cast<int>(hopping.rows());
  int degree = 0;
  double tmax = 0.0;
  for (int i = 0; i < m; ++i) {
    int row = 0;
    for (int j = 0; j < m; ++j) {
      tmax = std::max(tmax, std::abs(hopping(i, j)));
      if (i != j && hopping(i, j) != 0.0) ++row;
    }
    degree = std::max(degree, row);
  }
  return local_energy_bound(degree, tmax, potential);
}

}  // namespace ksinv
