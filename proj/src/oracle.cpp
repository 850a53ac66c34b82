#include "ksinv/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "ksinv/errors.hpp"

namespace ksinv {

namespace {

// splitmix64: the whole draw is a pure function of (seed, sample, site), so
// any subset of the trace can be regenerated independently and in any order.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

double bounded_noise_draw(const noise_spec& spec, std::int64_t sample_index, int site) {
  if (spec.delta_n == 0.0) return 0.0;
  std::uint64_t key = spec.seed;
  key = mix64(key ^ mix64(static_cast<std::uint64_t>(sample_index)));
  key = mix64(key ^ mix64(static_cast<std::uint64_t>(site) + 0x51ull));
  // 53 uniform bits in [0, 1); maps to (-delta_n, delta_n)
  double u = static_cast<double>(key >> 11) * 0x1.0p-53;
  return spec.delta_n * (2.0 * u - 1.0);
}

std::int64_t density_trace::index_at(double t, double tol) const {
  auto it = std::lower_bound(times.begin(), times.end(), t - tol);
  if (it == times.end()) return -1;
  std::size_t i = static_cast<std::size_t>(it - times.begin());
  if (std::abs(times[i] - t) <= tol) return static_cast<std::int64_t>(i);
  return -1;
}

void density_trace::check_consistent() const {
  if (times.size() != values.size())
    throw invalid_argument("density_trace: times/values size mismatch");
  for (std::size_t i = 0; i + 1 < times.size(); ++i)
    if (!(times[i] < times[i + 1]))
      throw invalid_argument("density_trace: times must be strictly increasing");
  for (const auto& v : values)
    if (v.size() != sites) throw invalid_argument("density_trace: sample size mismatch");
}

Eigen::VectorXd measure_density(const many_body_state& state, const fock_basis& basis) {
  if (state.amplitudes.size() != static_cast<Eigen::Index>(basis.dim()))
    throw invalid_argument("measure_density: state dimension does not match basis");
  Eigen::VectorXd n = Eigen::VectorXd::Zero(basis.sites);
  for (std::size_t a = 0; a < basis.dim(); ++a) {
    const double w = std::norm(state.amplitudes(static_cast<Eigen::Index>(a)));
    if (w == 0.0) continue;
    std::uint64_t pattern = basis.states[a];
    while (pattern) {
      int site = std::countr_zero(pattern);
      n(site) += w;
      pattern &= pattern - 1;
    }
  }
  return n;
}

Eigen::VectorXd measure_density_noisy(const many_body_state& state, const fock_basis& basis,
                                      const noise_spec& spec, std::int64_t sample_index) {
  Eigen::VectorXd n = measure_density(state, basis);
  for (int j = 0; j < basis.sites; ++j) n(j) += bounded_noise_draw(spec, sample_index, j);
  return n;
}

curvature_evaluator::curvature_evaluator(const lattice_model& model, const fock_basis& basis)
    : model_(&model),
      basis_(&basis),
      rate_ops_(build_density_rate_ops(model.hopping, basis)),
      static_hamiltonian_(model.potential.time_independent()) {}

Eigen::VectorXd curvature_evaluator::at(const many_body_state& state, double t) const {
  if (!have_cached_h_ || !static_hamiltonian_) {
    cached_h_ = build_hamiltonian(*model_, *basis_, t);
    have_cached_h_ = true;
  }
  // d2n_j = <i [H, D_j]> = -2 Im <H psi | D_j | psi>
  const Eigen::VectorXcd h_psi = cached_h_.apply(state.amplitudes);
  Eigen::VectorXd out(basis_->sites);
  for (int j = 0; j < basis_->sites; ++j) {
    const Eigen::VectorXcd d_psi = rate_ops_[static_cast<std::size_t>(j)].apply(state.amplitudes);
    out(j) = -2.0 * h_psi.dot(d_psi).imag();
  }
  return out;
}

Eigen::VectorXd second_difference(const density_trace& trace, double t, double h) {
  if (h <= 0) throw invalid_argument("second_difference: width must be positive");
  const std::int64_t il = trace.index_at(t - h);
  const std::int64_t ic = trace.index_at(t);
  const std::int64_t ir = trace.index_at(t + h);
  if (il < 0 || ic < 0 || ir < 0)
    throw invalid_argument("second_difference: trace lacks a sample at t or t +/- h");
  const auto& fl = trace.values[static_cast<std::size_t>(il)];
  const auto& fc = trace.values[static_cast<std::size_t>(ic)];
  const auto& fr = trace.values[static_cast<std::size_t>(ir)];
  return (fr - 2.0 * fc + fl) / (h * h);
}

double choose_stencil_width(double delta_n, double c4) {
  if (delta_n <= 0 || c4 <= 0)
    throw invalid_argument("choose_stencil_width: delta_n and c4 must be positive");
  return std::pow(48.0 * delta_n / c4, 0.25);
}

double stencil_error_limit(double c4, double delta_n) {
  if (delta_n < 0 || c4 < 0)
    throw invalid_argument("stencil_error_limit: arguments must be nonnegative");
  return std::sqrt(2.0 * c4 * delta_n);
}

double estimate_curvature_bound(const density_trace& fine_trace, double safety) {
  fine_trace.check_consistent();
  if (fine_trace.samples() < 5)
    throw invalid_argument("estimate_curvature_bound: need at least five samples");
  if (fine_trace.noise && fine_trace.noise->delta_n > 0)
    throw invalid_argument("estimate_curvature_bound: trace must be noiseless");
  const double g = fine_trace.times[1] - fine_trace.times[0];
  for (std::size_t i = 0; i + 1 < fine_trace.times.size(); ++i) {
    double step = fine_trace.times[i + 1] - fine_trace.times[i];
    if (std::abs(step - g) > 1e-9 * std::max(1.0, std::abs(g)))
      throw invalid_argument("estimate_curvature_bound: trace must be uniformly spaced");
  }
  double worst = 0.0;
  const double g4 = g * g * g * g;
  for (std::size_t i = 2; i + 2 < fine_trace.samples(); ++i) {
    const Eigen::VectorXd d4 = (fine_trace.values[i - 2] - 4.0 * fine_trace.values[i - 1] +
                                6.0 * fine_trace.values[i] - 4.0 * fine_trace.values[i + 1] +
                                fine_trace.values[i + 2]) /
                               g4;
    worst = std::max(worst, d4.cwiseAbs().maxCoeff());
  }
  return safety * worst;
}

}  // namespace ksinv
