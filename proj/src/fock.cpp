#include "ksinv/fock.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "ksinv/errors.hpp"

namespace ksinv {

namespace {

constexpr std::complex<double> kImag{0.0, 1.0};

int parity_below(std::uint64_t pattern, int site) {
  std::uint64_t mask = (site == 0) ? 0ull : ((1ull << site) - 1ull);
  return (std::popcount(pattern & mask) & 1) ? -1 : 1;
}

}  // namespace

std::int64_t fock_basis::index_of(std::uint64_t pattern) const {
  auto it = position.find(pattern);
  return it == position.end() ? -1 : it->second;
}

fock_basis build_basis(int sites, int electrons, std::size_t dim_cap) {
  if (sites < 1 || sites > 12)
    throw invalid_argument("build_basis: sites must be in [1, 12]");
  if (electrons < 0 || electrons > sites)
    throw invalid_argument("build_basis: electrons must be in [0, sites]");
  fock_basis basis;
  basis.sites = sites;
  basis.electrons = electrons;
  const std::uint64_t limit = 1ull << sites;
  for (std::uint64_t pattern = 0; pattern < limit; ++pattern) {
    if (std::popcount(pattern) == electrons) basis.states.push_back(pattern);
  }
  if (basis.states.size() > dim_cap)
    throw invalid_argument("build_basis: sector dimension " +
                           std::to_string(basis.states.size()) + " exceeds cap " +
                           std::to_string(dim_cap));
  basis.position.reserve(basis.states.size() * 2);
  for (std::size_t i = 0; i < basis.states.size(); ++i)
    basis.position.emplace(basis.states[i], static_cast<std::int64_t>(i));
  return basis;
}

bool apply_hop(std::uint64_t pattern, int i, int j, std::uint64_t* out, int* sign) {
  if (!((pattern >> j) & 1ull)) return false;
  int s = parity_below(pattern, j);
  std::uint64_t mid = pattern & ~(1ull << j);
  if ((mid >> i) & 1ull) return false;
  s *= parity_below(mid, i);
  *out = mid | (1ull << i);
  *sign = s;
  return true;
}

// ---- sparse_operator --------------------------------------------------------

void sparse_operator::builder::add(std::uint64_t row, std::uint64_t col,
                                   std::complex<double> value) {
  if (value == std::complex<double>(0.0, 0.0)) return;
  entries_[row * dim_ + col] += value;
}

sparse_operator sparse_operator::builder::finish(bool drop_zeros) const {
  sparse_operator op(dim_);
  std::vector<std::pair<std::uint64_t, std::complex<double>>> sorted(entries_.begin(),
                                                                     entries_.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  op.rows_.reserve(sorted.size());
  op.cols_.reserve(sorted.size());
  op.values_.reserve(sorted.size());
  for (const auto& [key, value] : sorted) {
    if (drop_zeros && value == std::complex<double>(0.0, 0.0)) continue;
    op.rows_.push_back(static_cast<std::uint32_t>(key / dim_));
    op.cols_.push_back(static_cast<std::uint32_t>(key % dim_));
    op.values_.push_back(value);
  }
  return op;
}

Eigen::VectorXcd sparse_operator::apply(const Eigen::VectorXcd& x) const {
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dim_));
  for (std::size_t k = 0; k < values_.size(); ++k) y(rows_[k]) += values_[k] * x(cols_[k]);
  return y;
}

std::complex<double> sparse_operator::expectation(const Eigen::VectorXcd& psi) const {
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t k = 0; k < values_.size(); ++k)
    acc += std::conj(psi(rows_[k])) * values_[k] * psi(cols_[k]);
  return acc;
}

Eigen::MatrixXcd sparse_operator::dense() const {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim_),
                                              static_cast<Eigen::Index>(dim_));
  for (std::size_t k = 0; k < values_.size(); ++k) m(rows_[k], cols_[k]) += values_[k];
  return m;
}

double sparse_operator::max_abs_difference(const sparse_operator& other) const {
  if (other.dim_ != dim_) throw invalid_argument("max_abs_difference: dimension mismatch");
  std::unordered_map<std::uint64_t, std::complex<double>> acc;
  acc.reserve(values_.size() + other.values_.size());
  for (std::size_t k = 0; k < values_.size(); ++k)
    acc[static_cast<std::uint64_t>(rows_[k]) * dim_ + cols_[k]] += values_[k];
  for (std::size_t k = 0; k < other.values_.size(); ++k)
    acc[static_cast<std::uint64_t>(other.rows_[k]) * dim_ + other.cols_[k]] -= other.values_[k];
  double worst = 0.0;
  for (const auto& [key, value] : acc) worst = std::max(worst, std::abs(value));
  return worst;
}

void sparse_operator::assert_hermitian(double tol) {
  std::unordered_map<std::uint64_t, std::complex<double>> table;
  table.reserve(values_.size());
  double scale = 1.0;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    table[static_cast<std::uint64_t>(rows_[k]) * dim_ + cols_[k]] = values_[k];
    scale = std::max(scale, std::abs(values_[k]));
  }
  for (std::size_t k = 0; k < values_.size(); ++k) {
    std::uint64_t mirror = static_cast<std::uint64_t>(cols_[k]) * dim_ + rows_[k];
    auto it = table.find(mirror);
    std::complex<double> partner = it == table.end() ? std::complex<double>{} : it->second;
    if (std::abs(values_[k] - std::conj(partner)) > tol * scale)
      throw construction_fault("operator is not Hermitian (entry " +
                               std::to_string(rows_[k]) + "," + std::to_string(cols_[k]) + ")");
  }
  hermitian_ = true;
}

// ---- operator builders ------------------------------------------------------

sparse_operator build_hamiltonian(const lattice_model& model, const fock_basis& basis,
                                  const std::vector<double>& site_potential) {
  if (static_cast<int>(site_potential.size()) != model.sites)
    throw invalid_argument("build_hamiltonian: potential size mismatch");
  sparse_operator::builder b(basis.dim());
  const auto& t = model.hopping;
  for (std::size_t a = 0; a < basis.dim(); ++a) {
    const std::uint64_t pattern = basis.states[a];
    // kinetic
    for (int i = 0; i < model.sites; ++i) {
      for (int j = 0; j < model.sites; ++j) {
        if (t(i, j) == 0.0) continue;
        std::uint64_t target;
        int sign;
        if (!apply_hop(pattern, i, j, &target, &sign)) continue;
        std::int64_t row = basis.index_of(target);
        b.add(static_cast<std::uint64_t>(row), a, t(i, j) * static_cast<double>(sign));
      }
    }
    // on-site potential and density-density interaction (diagonal)
    double diag = 0.0;
    for (int j = 0; j < model.sites; ++j)
      if ((pattern >> j) & 1ull) diag += site_potential[static_cast<std::size_t>(j)];
    for (const auto& p : model.interaction_pairs) {
      if (((pattern >> p.i) & 1ull) && ((pattern >> p.j) & 1ull)) diag += p.value;
    }
    if (diag != 0.0) b.add(a, a, diag);
    // general two-body terms, applied right to left: a_l, a_k, a+_j, a+_i
    for (const auto& w : model.interaction_general) {
      if (w.value == 0.0) continue;
      std::uint64_t s = pattern;
      int sign = 1;
      if (!((s >> w.l) & 1ull)) continue;
      sign *= parity_below(s, w.l);
      s &= ~(1ull << w.l);
      if (!((s >> w.k) & 1ull)) continue;
      sign *= parity_below(s, w.k);
      s &= ~(1ull << w.k);
      if ((s >> w.j) & 1ull) continue;
      sign *= parity_below(s, w.j);
      s |= 1ull << w.j;
      if ((s >> w.i) & 1ull) continue;
      sign *= parity_below(s, w.i);
      s |= 1ull << w.i;
      std::int64_t row = basis.index_of(s);
      b.add(static_cast<std::uint64_t>(row), a, w.value * static_cast<double>(sign));
    }
  }
  sparse_operator h = b.finish();
  h.assert_hermitian(1e-12);
  return h;
}

sparse_operator build_hamiltonian(const lattice_model& model, const fock_basis& basis,
                                  double t) {
  return build_hamiltonian(model, basis, model.potential_at(t));
}

std::vector<sparse_operator> build_density_ops(const fock_basis& basis) {
  std::vector<sparse_operator> ops;
  ops.reserve(static_cast<std::size_t>(basis.sites));
  for (int j = 0; j < basis.sites; ++j) {
    sparse_operator::builder b(basis.dim());
    for (std::size_t a = 0; a < basis.dim(); ++a) {
      if ((basis.states[a] >> j) & 1ull) b.add(a, a, 1.0);
    }
    ops.push_back(b.finish());
  }
  return ops;
}

std::vector<sparse_operator> build_density_rate_ops(const Eigen::MatrixXd& hopping,
                                                    const fock_basis& basis) {
  const int sites = basis.sites;
  std::vector<sparse_operator> ops;
  ops.reserve(static_cast<std::size_t>(sites));
  for (int j = 0; j < sites; ++j) {
    sparse_operator::builder b(basis.dim());
    for (std::size_t a = 0; a < basis.dim(); ++a) {
      const std::uint64_t pattern = basis.states[a];
      for (int k = 0; k < sites; ++k) {
        if (hopping(k, j) == 0.0 || k == j) continue;
        std::uint64_t target;
        int sign;
        if (apply_hop(pattern, j, k, &target, &sign)) {
          b.add(static_cast<std::uint64_t>(basis.index_of(target)), a,
                -kImag * hopping(k, j) * static_cast<double>(sign));
        }
        if (apply_hop(pattern, k, j, &target, &sign)) {
          b.add(static_cast<std::uint64_t>(basis.index_of(target)), a,
                kImag * hopping(k, j) * static_cast<double>(sign));
        }
      }
    }
    ops.push_back(b.finish());
  }
  return ops;
}

std::vector<std::vector<sparse_operator>> build_exchange_ops(const fock_basis& basis) {
  const int sites = basis.sites;
  std::vector<std::vector<sparse_operator>> table(
      static_cast<std::size_t>(sites),
      std::vector<sparse_operator>(static_cast<std::size_t>(sites)));
  for (int i = 0; i < sites; ++i) {
    for (int j = i; j < sites; ++j) {
      sparse_operator::builder b(basis.dim());
      for (std::size_t a = 0; a < basis.dim(); ++a) {
        const std::uint64_t pattern = basis.states[a];
        if (i == j) {
          if ((pattern >> i) & 1ull) b.add(a, a, 2.0);
          continue;
        }
        std::uint64_t target;
        int sign;
        if (apply_hop(pattern, i, j, &target, &sign))
          b.add(static_cast<std::uint64_t>(basis.index_of(target)), a,
                static_cast<double>(sign));
        if (apply_hop(pattern, j, i, &target, &sign))
          b.add(static_cast<std::uint64_t>(basis.index_of(target)), a,
                static_cast<double>(sign));
      }
      sparse_operator op = b.finish();
      table[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = op;
      table[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = op;
    }
  }
  return table;
}

std::vector<sparse_operator> build_stress_ops_commutator(const Eigen::MatrixXd& hopping,
                                                         const fock_basis& basis) {
  // kinetic operator alone
  sparse_operator::builder tb(basis.dim());
  for (std::size_t a = 0; a < basis.dim(); ++a) {
    const std::uint64_t pattern = basis.states[a];
    for (int i = 0; i < basis.sites; ++i)
      for (int j = 0; j < basis.sites; ++j) {
        if (hopping(i, j) == 0.0) continue;
        std::uint64_t target;
        int sign;
        if (!apply_hop(pattern, i, j, &target, &sign)) continue;
        tb.add(static_cast<std::uint64_t>(basis.index_of(target)), a,
               hopping(i, j) * static_cast<double>(sign));
      }
  }
  sparse_operator kinetic = tb.finish();
  const Eigen::MatrixXcd kin = kinetic.dense();

  std::vector<sparse_operator> rate = build_density_rate_ops(hopping, basis);
  std::vector<sparse_operator> ops;
  ops.reserve(rate.size());
  for (auto& d : rate) {
    const Eigen::MatrixXcd dm = d.dense();
    const Eigen::MatrixXcd q = kImag * (kin * dm - dm * kin);
    sparse_operator::builder b(basis.dim());
    for (Eigen::Index r = 0; r < q.rows(); ++r)
      for (Eigen::Index c = 0; c < q.cols(); ++c)
        if (q(r, c) != std::complex<double>(0.0, 0.0))
          b.add(static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c), q(r, c));
    ops.push_back(b.finish());
  }
  return ops;
}

std::vector<sparse_operator> build_stress_ops(const Eigen::MatrixXd& hopping,
                                              const fock_basis& basis) {
  const int sites = basis.sites;
  const Eigen::MatrixXd t2 = hopping * hopping;
  const auto exchange = build_exchange_ops(basis);
  std::vector<sparse_operator> ops;
  ops.reserve(static_cast<std::size_t>(sites));
  for (int j = 0; j < sites; ++j) {
    sparse_operator::builder b(basis.dim());
    auto accumulate = [&b](double coeff, const sparse_operator& op) {
      op.for_each([&b, coeff](std::uint32_t r, std::uint32_t c, std::complex<double> v) {
        b.add(r, c, coeff * v);
      });
    };
    // Q_j = sum_{k,p} T(j,k) T(p,j) G_kp - sum_k (T^2)(k,j) G_jk
    for (int k = 0; k < sites; ++k) {
      for (int p = 0; p < sites; ++p) {
        double coeff = hopping(j, k) * hopping(p, j);
        if (coeff != 0.0)
          accumulate(coeff, exchange[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)]);
      }
      double coeff2 = -t2(k, j);
      if (coeff2 != 0.0)
        accumulate(coeff2, exchange[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]);
    }
    ops.push_back(b.finish());
  }
  // cross-check against the literal commutator route
  std::vector<sparse_operator> reference = build_stress_ops_commutator(hopping, basis);
  for (int j = 0; j < sites; ++j) {
    double gap = ops[static_cast<std::size_t>(j)].max_abs_difference(
        reference[static_cast<std::size_t>(j)]);
    if (gap > 1e-10)
      throw construction_fault("stress operator routes disagree at site " + std::to_string(j) +
                               " by " + std::to_string(gap));
  }
  return ops;
}

}  // namespace ksinv
