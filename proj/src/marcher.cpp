#include "ksinv/marcher.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "ksinv/errors.hpp"

namespace ksinv {

long march_config::steps() const {
  if (!(dt > 0)) throw config_error("march.dt must be positive");
  if (!(t1 > t0)) throw config_error("march horizon must satisfy t1 > t0");
  const double raw = (t1 - t0) / dt;
  const long z = std::lround(raw);
  if (z < 1 || std::abs(z * dt - (t1 - t0)) > 1e-9 * (t1 - t0))
    throw config_error("march.dt must divide the horizon into whole steps");
  return z;
}

consistency_report check_initial_consistency(const determinant_state& phi,
                                             const many_body_state& psi,
                                             const fock_basis& basis,
                                             const Eigen::MatrixXd& hopping, double tol) {
  consistency_report report;
  const Eigen::VectorXd n_phi = determinant_density(phi);
  const Eigen::VectorXd n_psi = measure_density(psi, basis);
  report.density_residual_inf = (n_phi - n_psi).cwiseAbs().maxCoeff();
  const Eigen::VectorXd rate_phi = density_rate(phi, hopping);
  const auto rate_ops = build_density_rate_ops(hopping, basis);
  Eigen::VectorXd rate_psi(basis.sites);
  for (int j = 0; j < basis.sites; ++j)
    rate_psi(j) = rate_ops[static_cast<std::size_t>(j)].expectation(psi.amplitudes).real();
  report.rate_residual_inf = (rate_phi - rate_psi).cwiseAbs().maxCoeff();
  report.pass = report.density_residual_inf <= tol && report.rate_residual_inf <= tol;
  return report;
}

consistency_report check_initial_consistency(const determinant_state& phi,
                                             const density_trace& trace,
                                             const Eigen::MatrixXd& hopping, double tol) {
  consistency_report report;
  const std::int64_t center = trace.index_at(phi.time);
  if (center < 0)
    throw invalid_argument("check_initial_consistency: trace has no sample at t0");
  const Eigen::VectorXd n_phi = determinant_density(phi);
  report.density_residual_inf =
      (n_phi - trace.values[static_cast<std::size_t>(center)]).cwiseAbs().maxCoeff();
  // central difference needs one neighbor on each side
  if (center == 0 || static_cast<std::size_t>(center + 1) >= trace.samples())
    throw invalid_argument("check_initial_consistency: trace lacks samples around t0");
  const double spacing = trace.times[static_cast<std::size_t>(center + 1)] -
                         trace.times[static_cast<std::size_t>(center - 1)];
  const Eigen::VectorXd rate_trace = (trace.values[static_cast<std::size_t>(center + 1)] -
                                      trace.values[static_cast<std::size_t>(center - 1)]) /
                                     spacing;
  const Eigen::VectorXd rate_phi = density_rate(phi, hopping);
  report.rate_residual_inf = (rate_phi - rate_trace).cwiseAbs().maxCoeff();
  report.pass = report.density_residual_inf <= tol && report.rate_residual_inf <= tol;
  return report;
}

namespace {

// private restart signal for the rate guard
struct rate_guard_tripped {
  double observed;
  double allowed;
  long step;
};

struct march_source {
  std::function<void()> reset;
  std::function<Eigen::VectorXd(long step, double t)> curvature;
  std::function<void(double t_next)> advance;
  std::function<Eigen::VectorXd(long grid_index, double t)> target_density;
  double stencil_width_used = 0.0;
  long stencil_stride = 0;
};

Eigen::VectorXd mean_zero(const Eigen::VectorXd& v) {
  return v - Eigen::VectorXd::Constant(v.size(), v.mean());
}

reconstruction_result march_impl(const determinant_state& phi0, const lattice_model& model,
                                 march_source& source, const march_config& config) {
  model.validate();
  if (phi0.sites() != model.sites || phi0.electrons() != model.electrons)
    throw invalid_argument("march: initial orbitals do not match the model");
  if (gram_deviation(phi0.orbitals) > 1e-8)
    throw inconsistent_initial_state("march: initial orbitals are not orthonormal");
  const long z = config.steps();
  const double dt = config.dt;
  const int degree = model.max_row_degree();
  const double tmax = model.max_abs_hopping();

  const bool instrument = config.instrument;
  if (instrument && model.interacting())
    throw invalid_argument("march: instrumented runs require a non-interacting model");
  fock_basis instr_basis;
  if (instrument) instr_basis = build_basis(model.sites, model.electrons);

  double rate_budget = config.rate_budget;
  int attempt = 0;
  while (true) {
    try {
      reconstruction_result result;
      result.rate_budget_final = rate_budget;
      result.stencil_width_used = source.stencil_width_used;
      result.stencil_stride = source.stencil_stride;
      source.reset();

      determinant_state phi = phi0;
      phi.time = config.t0;
      determinant_state phi_ref = phi;  // instrumented reference under the true potential

      auto record_grid = [&](long grid_index, const determinant_state& state) {
        const double t = config.t0 + grid_index * dt;
        result.grid_times.push_back(t);
        result.ks_density.push_back(determinant_density(state));
        result.target_density.push_back(source.target_density(grid_index, t));
        result.density_error_l1.push_back(
            (result.ks_density.back() - result.target_density.back()).cwiseAbs().sum());
        if (instrument) {
          const Eigen::VectorXcd a = determinant_to_fock(instr_basis, state.orbitals);
          const Eigen::VectorXcd b = determinant_to_fock(instr_basis, phi_ref.orbitals);
          result.reference_state_error.push_back((a - b).norm());
        }
      };

      record_grid(0, phi);

      Eigen::VectorXd previous_potential;
      for (long q = 0; q < z; ++q) {
        const double t = config.t0 + q * dt;
        const Eigen::VectorXd d2n = source.curvature(q, t);
        const Eigen::MatrixXd k = balance_matrix(phi, model.hopping);
        const Eigen::VectorXd s = source_vector(d2n, phi, model.hopping);
        solve_result solved = solve_potential(k, s, config.solver);
        solved.diagnostics.local_energy = local_energy_bound(degree, tmax, solved.potential);
        solved.diagnostics.stiffness =
            solved.diagnostics.kappa * solved.diagnostics.local_energy *
            solved.diagnostics.local_energy;
        result.max_kernel_mass = std::max(result.max_kernel_mass,
                                          solved.diagnostics.kernel_mass);

        if (previous_potential.size()) {
          const double moved = (solved.potential - previous_potential).cwiseAbs().maxCoeff();
          const double allowed =
              rate_budget * dt * (1.0 + config.guard_rel_slack) + config.guard_abs_slack;
          if (moved > allowed) throw rate_guard_tripped{moved, allowed, q};
        }
        previous_potential = solved.potential;

        if (instrument) {
          result.reference_potential.push_back(mean_zero(
              Eigen::Map<const Eigen::VectorXd>(model.potential_at(t).data(), model.sites)));
          result.reference_kappa.push_back(
              restricted_inverse_norm(balance_matrix(phi_ref, model.hopping),
                                      config.solver.sigma_rel_floor));
        }

        result.steps.push_back({t, solved.potential, solved.diagnostics});

        std::vector<double> v(solved.potential.data(),
                              solved.potential.data() + solved.potential.size());
        phi = evolve_determinant(phi, model.hopping, v, dt);
        if (instrument) {
          // reference orbitals under the scheduled potential, substep midpoints
          const double ds = dt / config.substeps;
          for (int i = 0; i < config.substeps; ++i) {
            const double t_mid = t + (i + 0.5) * ds;
            phi_ref = evolve_determinant(phi_ref, model.hopping,
                                         model.potential_at(t_mid), ds);
          }
        }
        source.advance(t + dt);
        record_grid(q + 1, phi);
      }
      result.restarts = attempt;
      result.final_state = phi;
      return result;
    } catch (const rate_guard_tripped& trip) {
      ++attempt;
      if (attempt > config.max_restarts)
        throw lipschitz_budget_exceeded(
            "potential moved " + std::to_string(trip.observed) + " at step " +
            std::to_string(trip.step) + " (allowed " + std::to_string(trip.allowed) +
            "); rate budget exhausted after " + std::to_string(attempt - 1) + " restarts");
      rate_budget *= config.restart_growth;
    }
  }
}

}  // namespace

reconstruction_result march(const determinant_state& phi0, const lattice_model& model,
                            const many_body_state& psi0, const march_config& config) {
  if (config.mode != source_mode::exact)
    throw invalid_argument("march: this overload provides an exact curvature source");
  const fock_basis basis = build_basis(model.sites, model.electrons);
  if (psi0.amplitudes.size() != static_cast<Eigen::Index>(basis.dim()))
    throw invalid_argument("march: psi0 dimension does not match the model sector");
  const interacting_propagator propagator(model, basis);
  const curvature_evaluator curvature(model, basis);

  many_body_state psi;
  march_source source;
  source.reset = [&]() {
    psi = psi0;
    psi.time = config.t0;
  };
  source.curvature = [&](long, double t) { return curvature.at(psi, t); };
  source.advance = [&](double t_next) { propagator.advance(psi, t_next, config.substeps); };
  source.target_density = [&](long, double) { return measure_density(psi, basis); };
  return march_impl(phi0, model, source, config);
}

reconstruction_result march(const determinant_state& phi0, const lattice_model& model,
                            const density_trace& trace, const march_config& config) {
  if (config.mode != source_mode::stencil)
    throw invalid_argument("march: this overload provides a stencil curvature source");
  trace.check_consistent();
  if (trace.sites != model.sites)
    throw invalid_argument("march: trace site count does not match the model");
  const long z = config.steps();
  const double dt = config.dt;

  // width selection: explicit > derived from noise > one grid step
  double width = config.stencil_width;
  if (width <= 0) {
    const double delta_n = trace.noise ? trace.noise->delta_n : 0.0;
    double c4 = config.curvature_bound;
    if (c4 <= 0 && trace.curvature_bound_estimate) c4 = *trace.curvature_bound_estimate;
    if (delta_n > 0 && c4 > 0) width = choose_stencil_width(delta_n, c4);
  }
  long stride = width > 0 ? std::max(1l, std::lround(width / dt)) : 1;
  const double h = stride * dt;

  // every stencil evaluation time must be present in the trace
  for (long q = 0; q < z; q += stride) {
    const double t = config.t0 + q * dt;
    if (trace.index_at(t - h) < 0 || trace.index_at(t) < 0 || trace.index_at(t + h) < 0)
      throw invalid_argument("march: trace does not cover the stencil at t = " +
                             std::to_string(t));
  }

  march_source source;
  source.stencil_width_used = h;
  source.stencil_stride = stride;
  Eigen::VectorXd held;
  long held_for = -1;
  source.reset = [&]() { held_for = -1; };
  source.curvature = [&](long q, double) {
    const long anchor = (q / stride) * stride;
    if (anchor != held_for) {
      const double t_anchor = config.t0 + anchor * dt;
      held = second_difference(trace, t_anchor, h);
      held_for = anchor;
    }
    return held;
  };
  source.advance = [](double) {};
  source.target_density = [&](long, double t) {
    const std::int64_t i = trace.index_at(t);
    if (i < 0) throw invalid_argument("march: trace has no sample at t = " + std::to_string(t));
    return trace.values[static_cast<std::size_t>(i)];
  };
  return march_impl(phi0, model, source, config);
}

Eigen::MatrixXcd fit_initial_orbitals(const Eigen::MatrixXcd& reference_orbitals,
                                      const Eigen::VectorXd& density_target,
                                      const Eigen::VectorXd& rate_target,
                                      const Eigen::MatrixXd& hopping) {
  const int m = static_cast<int>(reference_orbitals.rows());
  const int n = static_cast<int>(reference_orbitals.cols());
  if (density_target.size() != m || rate_target.size() != m)
    throw invalid_argument("fit_initial_orbitals: target size mismatch");

  for (int j = 0; j < m; ++j)
    if (density_target(j) < -1e-12)
      throw invalid_argument("fit_initial_orbitals: negative target density");

  // Site-wise amplitude morph onto the target density.  One pass is exact for
  // N = 1; for N > 1 re-orthonormalization perturbs the density, so scaling
  // and QR alternate until the density settles on the target.
  Eigen::MatrixXcd orbitals = reference_orbitals;
  for (int pass = 0; pass < 256; ++pass) {
    const Eigen::VectorXd n_cur = determinant_density({orbitals, 0.0});
    for (int j = 0; j < m; ++j) {
      const double target = std::max(density_target(j), 0.0);
      if (n_cur(j) > 1e-14) {
        orbitals.row(j) *= std::sqrt(target / n_cur(j));
      } else if (target > 1e-10) {
        throw invalid_argument(
            "fit_initial_orbitals: reference has no weight on a populated site");
      }
    }
    if (n == 1) {
      orbitals /= orbitals.norm();
      break;
    }
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(orbitals);
    orbitals = qr.householderQ() * Eigen::MatrixXcd::Identity(m, n);
    if ((determinant_density({orbitals, 0.0}) - density_target).cwiseAbs().maxCoeff() < 1e-13)
      break;
  }

  // one phase per site, exp(i theta_j), fitted to the rate target (discrete
  // velocity potential); Gauss-Newton with theta_0 pinned to zero
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
  const std::complex<double> imag{0.0, 1.0};
  auto phased = [&](const Eigen::VectorXd& angles) {
    Eigen::MatrixXcd out = orbitals;
    for (int j = 0; j < m; ++j) out.row(j) *= std::exp(imag * angles(j));
    return out;
  };
  for (int iter = 0; iter < 64; ++iter) {
    determinant_state state{phased(theta), 0.0};
    const Eigen::MatrixXcd d = one_body_matrix(state);
    const Eigen::VectorXd residual = density_rate(state, hopping) - rate_target;
    if (residual.cwiseAbs().maxCoeff() < 1e-13) break;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, m);
    for (int j = 0; j < m; ++j) {
      for (int l = 0; l < m; ++l) {
        if (l == j) continue;
        if (hopping(l, j) == 0.0) continue;
        const double term = 2.0 * hopping(l, j) * d(l, j).real();
        jac(j, l) += term;
        jac(j, j) -= term;
      }
    }
    const Eigen::MatrixXd reduced = jac.rightCols(m - 1);
    const Eigen::VectorXd step =
        reduced.colPivHouseholderQr().solve(-residual);
    theta.tail(m - 1) += step;
    if (step.cwiseAbs().maxCoeff() < 1e-14) break;
  }
  return phased(theta);
}

planned_quantity required_steps(double rate_budget, int sites, double eps, double kappa,
                                double local_energy) {
  if (rate_budget <= 0 || sites < 1 || eps <= 0 || kappa <= 0 || local_energy <= 0)
    throw invalid_argument("required_steps: all parameters must be positive");
  planned_quantity out;
  out.exponent = 16.0 * kappa * local_energy * local_energy;
  if (out.exponent > 700.0) {
    out.overflow = true;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  const double prefactor = sites * rate_budget / (4.0 * eps * kappa * local_energy * local_energy);
  out.value = std::ceil(prefactor * std::expm1(out.exponent));
  return out;
}

planned_quantity required_precision(int sites, double eps, double curvature_bound,
                                    double kappa, double local_energy) {
  if (sites < 1 || eps <= 0 || curvature_bound <= 0 || kappa <= 0 || local_energy <= 0)
    throw invalid_argument("required_precision: all parameters must be positive");
  planned_quantity out;
  out.exponent = 16.0 * kappa * local_energy * local_energy;
  if (out.exponent > 700.0) {
    out.overflow = true;
    out.value = 0.0;
    return out;
  }
  const double denom = std::sqrt(2.0) * sites * std::sqrt(curvature_bound) /
                       (4.0 * eps * local_energy * local_energy) * std::expm1(out.exponent);
  out.value = 1.0 / (denom * denom);
  return out;
}

}  // namespace ksinv
