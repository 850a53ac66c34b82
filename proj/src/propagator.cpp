#include "ksinv/propagator.hpp"

#include <cmath>
#include <complex>

#include "ksinv/errors.hpp"

namespace ksinv {

namespace {

constexpr std::complex<double> kImag{0.0, 1.0};

Eigen::MatrixXcd single_particle_hamiltonian(const Eigen::MatrixXd& hopping,
                                             const std::vector<double>& site_potential) {
  Eigen::MatrixXcd h = hopping.cast<std::complex<double>>();
  for (Eigen::Index j = 0; j < h.rows(); ++j)
    h(j, j) += site_potential[static_cast<std::size_t>(j)];
  return h;
}

}  // namespace

interacting_propagator::interacting_propagator(const lattice_model& model,
                                               const fock_basis& basis)
    : model_(&model), basis_(&basis), static_hamiltonian_(model.potential.time_independent()) {}

void interacting_propagator::step_with(many_body_state& state, double t_mid, double dt) const {
  if (!have_cache_ || !static_hamiltonian_) {
    sparse_operator h = build_hamiltonian(*model_, *basis_, t_mid);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.dense());
    if (solver.info() != Eigen::Success)
      throw construction_fault("many-body eigendecomposition failed");
    cached_eigs_ = solver.eigenvalues();
    cached_vecs_ = solver.eigenvectors();
    have_cache_ = true;
  }
  Eigen::VectorXcd modes = cached_vecs_.adjoint() * state.amplitudes;
  for (Eigen::Index k = 0; k < modes.size(); ++k)
    modes(k) *= std::exp(-kImag * cached_eigs_(k) * dt);
  state.amplitudes = cached_vecs_ * modes;
  double norm = state.amplitudes.norm();
  if (std::abs(norm - 1.0) > 1e-10)
    throw construction_fault("propagation norm drift " + std::to_string(std::abs(norm - 1.0)));
  state.amplitudes /= norm;
}

void interacting_propagator::advance(many_body_state& state, double t1, int substeps) const {
  if (substeps < 1) throw invalid_argument("advance: substeps must be >= 1");
  if (state.amplitudes.size() != static_cast<Eigen::Index>(basis_->dim()))
    throw invalid_argument("advance: state dimension does not match basis");
  const double t0 = state.time;
  if (t1 == t0) return;
  const double ds = (t1 - t0) / substeps;
  for (int i = 0; i < substeps; ++i) {
    double t_mid = t0 + (i + 0.5) * ds;
    step_with(state, t_mid, ds);
  }
  state.time = t1;
}

double gram_deviation(const Eigen::MatrixXcd& orbitals) {
  Eigen::MatrixXcd gram = orbitals.adjoint() * orbitals;
  gram -= Eigen::MatrixXcd::Identity(gram.rows(), gram.cols());
  return gram.cwiseAbs().maxCoeff();
}

namespace {

// Thin QR with the R diagonal rotated positive, so re-orthonormalization of an
// almost-orthonormal frame is an O(drift) perturbation of each orbital.
Eigen::MatrixXcd reorthonormalize(const Eigen::MatrixXcd& orbitals) {
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(orbitals);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(orbitals.rows(),
                                                                      orbitals.cols());
  Eigen::MatrixXcd r = q.adjoint() * orbitals;
  for (Eigen::Index n = 0; n < orbitals.cols(); ++n) {
    std::complex<double> d = r(n, n);
    if (std::abs(d) > 0) q.col(n) *= d / std::abs(d);
  }
  return q;
}

}  // namespace

determinant_state evolve_determinant(const determinant_state& state,
                                     const Eigen::MatrixXd& hopping,
                                     const std::vector<double>& site_potential, double dt) {
  if (static_cast<int>(site_potential.size()) != state.sites())
    throw invalid_argument("evolve_determinant: potential size mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      single_particle_hamiltonian(hopping, site_potential));
  if (solver.info() != Eigen::Success)
    throw construction_fault("single-particle eigendecomposition failed");
  Eigen::VectorXcd phases(solver.eigenvalues().size());
  for (Eigen::Index k = 0; k < phases.size(); ++k)
    phases(k) = std::exp(-kImag * solver.eigenvalues()(k) * dt);
  determinant_state next;
  next.orbitals = solver.eigenvectors() * phases.asDiagonal() *
                  (solver.eigenvectors().adjoint() * state.orbitals);
  next.time = state.time + dt;
  if (gram_deviation(next.orbitals) > 1e-9) next.orbitals = reorthonormalize(next.orbitals);
  return next;
}

Eigen::VectorXd determinant_density(const determinant_state& state) {
  return state.orbitals.cwiseAbs2().rowwise().sum();
}

Eigen::MatrixXcd one_body_matrix(const determinant_state& state) {
  return state.orbitals * state.orbitals.adjoint();
}

Eigen::MatrixXd exchange_matrix(const determinant_state& state) {
  const Eigen::MatrixXcd d = one_body_matrix(state);
  const int m = state.sites();
  Eigen::MatrixXd g(m, m);
  for (int j = 0; j < m; ++j) {
    g(j, j) = 2.0 * d(j, j).real();
    for (int k = j + 1; k < m; ++k) {
      double value = 2.0 * d(j, k).real();
      g(j, k) = value;
      g(k, j) = value;
    }
  }
  return g;
}

Eigen::VectorXd density_rate(const determinant_state& state, const Eigen::MatrixXd& hopping) {
  const Eigen::MatrixXcd d = one_body_matrix(state);
  const int m = state.sites();
  Eigen::VectorXd rate = Eigen::VectorXd::Zero(m);
  for (int j = 0; j < m; ++j) {
    double acc = 0.0;
    for (int k = 0; k < m; ++k) {
      if (hopping(k, j) == 0.0) continue;
      acc += 2.0 * hopping(k, j) * d(k, j).imag();
    }
    rate(j) = acc;
  }
  return rate;
}

Eigen::VectorXcd determinant_to_fock(const fock_basis& basis, const Eigen::MatrixXcd& orbitals) {
  const int n = static_cast<int>(orbitals.cols());
  if (n != basis.electrons)
    throw invalid_argument("determinant_to_fock: orbital count does not match basis sector");
  Eigen::VectorXcd psi(static_cast<Eigen::Index>(basis.dim()));
  Eigen::MatrixXcd block(n, n);
  for (std::size_t a = 0; a < basis.dim(); ++a) {
    const std::uint64_t pattern = basis.states[a];
    int row = 0;
    for (int site = 0; site < basis.sites; ++site) {
      if ((pattern >> site) & 1ull) {
        block.row(row++) = orbitals.row(site);
      }
    }
    psi(static_cast<Eigen::Index>(a)) = block.determinant();
  }
  return psi;
}

Eigen::MatrixXcd ground_orbitals(const Eigen::MatrixXd& hopping,
                                 const std::vector<double>& site_potential, int electrons) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
      single_particle_hamiltonian(hopping, site_potential));
  if (solver.info() != Eigen::Success)
    throw construction_fault("single-particle eigendecomposition failed");
  return solver.eigenvectors().leftCols(electrons);
}

}  // namespace ksinv
