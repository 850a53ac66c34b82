#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ksinv/fock.hpp"
#include "ksinv/model.hpp"

namespace ksinv {

// Full many-body wavefunction in the Fock basis.
struct many_body_state {
  Eigen::VectorXcd amplitudes;
  double time = 0.0;
};

// Single-determinant state: orbitals are the columns (M x N), kept orthonormal.
struct determinant_state {
  Eigen::MatrixXcd orbitals;
  double time = 0.0;

  int sites() const { return static_cast<int>(orbitals.rows()); }
  int electrons() const { return static_cast<int>(orbitals.cols()); }
};

// Advances a many-body state by exact exponentials of the instantaneous
// Hamiltonian, one dense eigendecomposition per substep with the potential
// evaluated at the substep midpoint.  Norm is renormalized each substep and a
// drift beyond 1e-10 raises construction_fault.
class interacting_propagator {
 public:
  interacting_propagator(const lattice_model& model, const fock_basis& basis);

  void advance(many_body_state& state, double t1, int substeps) const;

  const fock_basis& basis() const { return *basis_; }
  const lattice_model& model() const { return *model_; }

 private:
  const lattice_model* model_;
  const fock_basis* basis_;
  bool static_hamiltonian_;
  // cached factorization for a time-independent Hamiltonian
  mutable bool have_cache_ = false;
  mutable Eigen::VectorXd cached_eigs_;
  mutable Eigen::MatrixXcd cached_vecs_;

  void step_with(many_body_state& state, double t_mid, double dt) const;
};

// One step of single-particle evolution under T + diag(V), V held constant.
// Orbitals are re-orthonormalized whenever the Gram matrix drifts from the
// identity by more than 1e-9.
determinant_state evolve_determinant(const determinant_state& state,
                                     const Eigen::MatrixXd& hopping,
                                     const std::vector<double>& site_potential, double dt);

// <n_j> for each site.
Eigen::VectorXd determinant_density(const determinant_state& state);

// D = Phi Phi^dagger (M x M); D(j,k) = sum_n phi_n(j) conj(phi_n(k)).
Eigen::MatrixXcd one_body_matrix(const determinant_state& state);

// <G_jk> = 2 Re D(j,k); exactly symmetric by construction.
Eigen::MatrixXd exchange_matrix(const determinant_state& state);

// <dn_j/dt> evaluated from the one-body matrix.
Eigen::VectorXd density_rate(const determinant_state& state, const Eigen::MatrixXd& hopping);

// Embeds the determinant into the Fock basis (amplitude of a pattern is the
// determinant of the corresponding orbital rows).
Eigen::VectorXcd determinant_to_fock(const fock_basis& basis, const Eigen::MatrixXcd& orbitals);

// Lowest-N orbitals of T + diag(V).
Eigen::MatrixXcd ground_orbitals(const Eigen::MatrixXd& hopping,
                                 const std::vector<double>& site_potential, int electrons);

double gram_deviation(const Eigen::MatrixXcd& orbitals);

}  // namespace ksinv
