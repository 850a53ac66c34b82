#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "ksinv/model.hpp"

namespace ksinv {

// Occupation-number basis conventions, used everywhere:
//  * site j occupies bit j of the pattern (site 0 = least significant bit);
//  * basis states are sorted by ascending integer value of the pattern;
//  * a pattern encodes the ordered product a+_{j1} ... a+_{jN} |vac> with
//    j1 < j2 < ... < jN, so a_j acting on a pattern picks up the parity of
//    the occupied sites below j.
// Physical outputs (densities, potentials) do not depend on these choices.
struct fock_basis {
  int sites = 0;
  int electrons = 0;
  std::vector<std::uint64_t> states;
  std::unordered_map<std::uint64_t, std::int64_t> position;

  std::size_t dim() const { return states.size(); }
  // -1 when the pattern is not in the sector.
  std::int64_t index_of(std::uint64_t pattern) const;
};

// Enumerates the N-particle sector.  Throws invalid_argument for M > 12 or a
// sector larger than dim_cap (keeps everything at desk scale).
fock_basis build_basis(int sites, int electrons, std::size_t dim_cap = 1000);

// Coalesced sparse matrix in the Fock basis, row-major sorted triplets.
class sparse_operator {
 public:
  sparse_operator() = default;
  explicit sparse_operator(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t nonzeros() const { return values_.size(); }
  bool is_hermitian_tagged() const { return hermitian_; }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;
  std::complex<double> expectation(const Eigen::VectorXcd& psi) const;
  Eigen::MatrixXcd dense() const;

  template <typename Visitor>  // Visitor(row, col, value)
  void for_each(Visitor&& visit) const {
    for (std::size_t k = 0; k < values_.size(); ++k) visit(rows_[k], cols_[k], values_[k]);
  }

  double max_abs_difference(const sparse_operator& other) const;

  // Verifies A == A+ entrywise within tol * max(1, max|A|); tags on success,
  // throws construction_fault otherwise.
  void assert_hermitian(double tol = 1e-12);

  class builder {
   public:
    explicit builder(std::size_t dim) : dim_(dim) {}
    void add(std::uint64_t row, std::uint64_t col, std::complex<double> value);
    sparse_operator finish(bool drop_zeros = true) const;

   private:
    std::size_t dim_;
    std::unordered_map<std::uint64_t, std::complex<double>> entries_;  // key = row*dim+col
  };

 private:
  std::size_t dim_ = 0;
  std::vector<std::uint32_t> rows_;
  std::vector<std::uint32_t> cols_;
  std::vector<std::complex<double>> values_;
  bool hermitian_ = false;
  friend class builder;
};

// a+_i a_j applied to a pattern; returns false when it annihilates.
bool apply_hop(std::uint64_t pattern, int i, int j, std::uint64_t* out, int* sign);

// H(V) = sum_ij T_ij a+_i a_j + sum_j V_j n_j + interactions.
sparse_operator build_hamiltonian(const lattice_model& model, const fock_basis& basis,
                                  const std::vector<double>& site_potential);
sparse_operator build_hamiltonian(const lattice_model& model, const fock_basis& basis, double t);

// n_j for every site (diagonal).
std::vector<sparse_operator> build_density_ops(const fock_basis& basis);

// dn_j/dt = -i sum_k T_kj (a+_j a_k - a+_k a_j), one operator per site.
std::vector<sparse_operator> build_density_rate_ops(const Eigen::MatrixXd& hopping,
                                                    const fock_basis& basis);

// G_ij = a+_i a_j + a+_j a_i (G_jj = 2 n_j); full M x M table.
std::vector<std::vector<sparse_operator>> build_exchange_ops(const fock_basis& basis);

// Kinetic-stress operators Q_j.  The production route contracts the exchange
// table with the hopping matrix, Q_j = ([T, G] T)_jj; the commutator route
// evaluates i[T, dn_j/dt] literally.  Both are exposed so one can check the
// other; build_stress_ops cross-validates them to 1e-10 at assembly time and
// throws construction_fault on mismatch.
std::vector<sparse_operator> build_stress_ops(const Eigen::MatrixXd& hopping,
                                              const fock_basis& basis);
std::vector<sparse_operator> build_stress_ops_commutator(const Eigen::MatrixXd& hopping,
                                                         const fock_basis& basis);

}  // namespace ksinv
