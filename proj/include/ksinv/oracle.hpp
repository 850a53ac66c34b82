#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ksinv/fock.hpp"
#include "ksinv/model.hpp"
#include "ksinv/propagator.hpp"

namespace ksinv {

// Bounded measurement-noise model: each density sample receives an independent
// uniform perturbation in [-delta_n, delta_n].  Draws are counter-based on
// (seed, sample index, site), so a trace is replayable in any order.
struct noise_spec {
  double delta_n = 0.0;
  std::uint64_t seed = 0;
  // Metadata only: emulated repetition count entering the quantum cost model
  // r * z * delta_n^(-3/2); no circuit is simulated.
  long repetitions = 1;
};

double bounded_noise_draw(const noise_spec& spec, std::int64_t sample_index, int site);

// Tabulated site densities on an ordered time grid.
struct density_trace {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;  // one vector of size M per time
  std::optional<noise_spec> noise;      // present when samples are noisy
  std::optional<double> curvature_bound_estimate;  // heuristic c4, if estimated
  int sites = 0;
  int electrons = 0;

  std::size_t samples() const { return times.size(); }
  // Index of the sample at time t (within tol), or -1.
  std::int64_t index_at(double t, double tol = 1e-9) const;
  void check_consistent() const;  // shapes, ordering; throws invalid_argument
};

// Exact site densities <n_j> of a many-body state.
Eigen::VectorXd measure_density(const many_body_state& state, const fock_basis& basis);

// Exact densities plus one bounded-noise draw per site.
Eigen::VectorXd measure_density_noisy(const many_body_state& state, const fock_basis& basis,
                                      const noise_spec& spec, std::int64_t sample_index);

// Second time derivative of the density, evaluated as the expectation of the
// nested commutator of H(t) with the density-rate operators.  Exact up to
// floating point; no finite differencing.
class curvature_evaluator {
 public:
  curvature_evaluator(const lattice_model& model, const fock_basis& basis);
  Eigen::VectorXd at(const many_body_state& state, double t) const;

 private:
  const lattice_model* model_;
  const fock_basis* basis_;
  std::vector<sparse_operator> rate_ops_;
  bool static_hamiltonian_;
  mutable bool have_cached_h_ = false;
  mutable sparse_operator cached_h_;
};

// Three-point second difference (f(t+h) - 2 f(t) + f(t-h)) / h^2 per site.
// All three sample times must be present in the trace exactly.
Eigen::VectorXd second_difference(const density_trace& trace, double t, double h);

// Noise-optimal half-width h = (48 delta_n / c4)^(1/4).
double choose_stencil_width(double delta_n, double c4);

// Worst-case second-difference error with the optimal width: sqrt(2 c4 delta_n).
double stencil_error_limit(double c4, double delta_n);

// Heuristic bound on max |d^4 n_j / dt^4| from five-point differencing of a
// fine noiseless trace, inflated by a safety factor.  Flagged as an estimate
// wherever it is reported.
double estimate_curvature_bound(const density_trace& fine_trace, double safety = 2.0);

}  // namespace ksinv
