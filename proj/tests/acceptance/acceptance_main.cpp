// Acceptance gate for the reconstruction library.  Runs ten end-to-end
// criteria and prints exactly one PASS/FAIL line per criterion; exits 0 only
// when every criterion passes.
//
// Usage: acceptance [path-to-cli-binary]
// When the CLI path is given, the determinism criterion re-runs a seeded
// pipeline through separate processes; otherwise it runs in-process.
#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "ksinv/bounds.hpp"
#include "ksinv/config.hpp"
#include "ksinv/errors.hpp"
#include "ksinv/fock.hpp"
#include "ksinv/forcebalance.hpp"
#include "ksinv/io.hpp"
#include "ksinv/marcher.hpp"
#include "ksinv/model.hpp"
#include "ksinv/oracle.hpp"
#include "ksinv/propagator.hpp"
#include "ksinv/runner.hpp"
#include "../test_helpers.hpp"

using namespace ksinv;

namespace {

constexpr std::complex<double> I{0.0, 1.0};

struct criterion_result {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(3) << v;
  return out.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string scratch_dir(const std::string& name) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "ksinv_acceptance" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

// ---- criterion 1: the two kinetic-stress operator routes agree --------------
//
// For every sector with at most six sites and three particles, the contracted
// route ([T, G] T)_jj and the literal commutator route i[T, dn_j/dt] must give
// the same expectation on random states to 1e-10, in under a minute.
criterion_result criterion_operator_identities() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  long states_checked = 0;
  for (int sites = 1; sites <= 6; ++sites) {
    for (int electrons = 1; electrons <= std::min(3, sites); ++electrons) {
      const fock_basis basis = build_basis(sites, electrons);
      testutil::rng gen(0xA1000000ull + 97ull * static_cast<std::uint64_t>(sites) +
                        static_cast<std::uint64_t>(electrons));
      // a regular geometry and a dense random symmetric one
      std::vector<Eigen::MatrixXd> hoppings;
      hoppings.push_back(lattice_model::chain_hopping(sites, 0.9));
      Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(sites, sites);
      for (int r = 0; r < sites; ++r)
        for (int c = r + 1; c < sites; ++c) dense(r, c) = dense(c, r) = gen.next_sym();
      hoppings.push_back(dense);

      for (const Eigen::MatrixXd& hopping : hoppings) {
        const std::vector<sparse_operator> contracted = build_stress_ops(hopping, basis);
        const std::vector<sparse_operator> commutator =
            build_stress_ops_commutator(hopping, basis);
        for (int trial = 0; trial < 100; ++trial) {
          const Eigen::VectorXcd psi = testutil::random_state(gen, basis.dim());
          for (int j = 0; j < sites; ++j) {
            const std::complex<double> a = contracted[static_cast<std::size_t>(j)].expectation(psi);
            const std::complex<double> b = commutator[static_cast<std::size_t>(j)].expectation(psi);
            worst = std::max(worst, std::abs(a - b));
          }
          ++states_checked;
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  criterion_result r;
  r.pass = worst <= 1e-10 && elapsed < 60.0;
  r.detail = "max route difference " + fmt(worst) + " over " + std::to_string(states_checked) +
             " random states, " + fmt(elapsed) + " s";
  return r;
}

// ---- criterion 2: structure of the balance matrix ---------------------------
//
// On 1000+ random Slater states over chains and rings up to eight sites, K is
// symmetric with zero row sums, and K v reproduces the commutator expectation
// <i[V, dn/dt]> for a random mean-zero v, all to 1e-12.
criterion_result criterion_balance_structure() {
  double worst_symmetry = 0.0;
  double worst_row_sum = 0.0;
  double worst_identity = 0.0;
  long states_checked = 0;

  for (int geometry = 0; geometry < 2; ++geometry) {
    for (int sites = geometry == 0 ? 2 : 3; sites <= 8; ++sites) {
      const Eigen::MatrixXd hopping = geometry == 0
                                          ? lattice_model::chain_hopping(sites, 1.0)
                                          : lattice_model::ring_hopping(sites, 1.0);
      for (int electrons = 1; electrons < sites; ++electrons) {
        const fock_basis basis = build_basis(sites, electrons);
        const std::vector<sparse_operator> rate_ops = build_density_rate_ops(hopping, basis);
        testutil::rng gen(0xB2000000ull + 10007ull * static_cast<std::uint64_t>(sites) +
                          1009ull * static_cast<std::uint64_t>(electrons) +
                          static_cast<std::uint64_t>(geometry));
        for (int trial = 0; trial < 19; ++trial) {
          determinant_state state;
          state.orbitals = testutil::random_orbitals(gen, sites, electrons);
          const Eigen::MatrixXd k = balance_matrix(state, hopping);
          worst_symmetry = std::max(worst_symmetry, (k - k.transpose()).cwiseAbs().maxCoeff());
          worst_row_sum = std::max(
              worst_row_sum, (k * Eigen::VectorXd::Ones(sites)).cwiseAbs().maxCoeff());

          // the same state in the particle basis
          const Eigen::VectorXcd psi = determinant_to_fock(basis, state.orbitals);
          Eigen::VectorXd v(sites);
          for (int j = 0; j < sites; ++j) v(j) = gen.next_sym();
          v.array() -= v.mean();
          Eigen::VectorXcd occupation(static_cast<Eigen::Index>(basis.dim()));
          for (std::size_t s = 0; s < basis.dim(); ++s) {
            double w = 0.0;
            for (int j = 0; j < sites; ++j)
              if (basis.states[s] >> j & 1ull) w += v(j);
            occupation(static_cast<Eigen::Index>(s)) = w;
          }
          const Eigen::VectorXd lhs = k * v;
          for (int j = 0; j < sites; ++j) {
            const Eigen::VectorXcd rate_psi = rate_ops[static_cast<std::size_t>(j)].apply(psi);
            const Eigen::VectorXcd v_psi = occupation.cwiseProduct(psi);
            const std::complex<double> commutator =
                I * (psi.dot(occupation.cwiseProduct(rate_psi)) -
                     psi.dot(rate_ops[static_cast<std::size_t>(j)].apply(v_psi)));
            worst_identity = std::max(worst_identity, std::abs(commutator - lhs(j)));
          }
          ++states_checked;
        }
      }
    }
  }
  criterion_result r;
  r.pass = states_checked >= 1000 && worst_symmetry <= 1e-12 && worst_row_sum <= 1e-12 &&
           worst_identity <= 1e-12;
  r.detail = std::to_string(states_checked) + " states: symmetry " + fmt(worst_symmetry) +
             ", row sums " + fmt(worst_row_sum) + ", commutator identity " +
             fmt(worst_identity);
  return r;
}

// ---- criterion 3: worked two-site values ------------------------------------
//
// The bonding orbital (1,1)/sqrt(2) with unit hopping gives the balance matrix
// [[-1,1],[1,-1]] and restricted inverse norm 1/2, confirmed by an independent
// eigendecomposition in this file.
criterion_result criterion_worked_dimer() {
  determinant_state state;
  state.orbitals = Eigen::MatrixXcd(2, 1);
  state.orbitals << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const Eigen::MatrixXd hopping = lattice_model::chain_hopping(2, 1.0);
  const Eigen::MatrixXd k = balance_matrix(state, hopping);

  Eigen::MatrixXd expected(2, 2);
  expected << -1.0, 1.0, 1.0, -1.0;
  const double matrix_error = (k - expected).cwiseAbs().maxCoeff();

  const double kappa_library = restricted_inverse_norm(k);

  // independent oracle: eigendecompose, invert away from the null direction,
  // take the inf-norm of the restricted inverse
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
  const double scale = eig.eigenvalues().cwiseAbs().maxCoeff();
  Eigen::MatrixXd pseudo = Eigen::MatrixXd::Zero(2, 2);
  for (int i = 0; i < 2; ++i)
    if (std::abs(eig.eigenvalues()(i)) > 1e-12 * scale)
      pseudo += eig.eigenvectors().col(i) * eig.eigenvectors().col(i).transpose() /
                eig.eigenvalues()(i);
  const double kappa_oracle = pseudo.cwiseAbs().rowwise().sum().maxCoeff();

  criterion_result r;
  r.pass = matrix_error <= 1e-12 && std::abs(kappa_library - 0.5) <= 1e-12 &&
           std::abs(kappa_oracle - 0.5) <= 1e-12;
  r.detail = "matrix error " + fmt(matrix_error) + ", solver kappa " + fmt(kappa_library) +
             ", eigendecomposition kappa " + fmt(kappa_oracle);
  return r;
}

// ---- criteria 4 and 8 share a driven four-site single-particle model --------

lattice_model driven_chain4() {
  lattice_model m;
  m.sites = 4;
  m.electrons = 1;
  m.hopping = lattice_model::chain_hopping(4, 1.0);
  m.potential.shape = waveform::sinusoid;
  m.potential.profile = {0.8, -0.3, -0.5, 0.0};  // mean-zero spatial profile
  m.potential.amplitude = 0.6;
  m.potential.frequency = 2.0;
  m.potential.phase = 0.4;
  return m;
}

reconstruction_result run_chain4(double dt, bool instrument) {
  const lattice_model m = driven_chain4();
  const fock_basis basis = build_basis(m.sites, m.electrons);
  march_config cfg;
  cfg.t0 = 0.0;
  cfg.t1 = 1.0;
  cfg.dt = dt;
  cfg.mode = source_mode::exact;
  cfg.rate_budget = 1.0;  // schedule rate is 0.96
  cfg.instrument = instrument;

  determinant_state phi0;
  phi0.orbitals = ground_orbitals(m.hopping, m.potential_at(0.0), m.electrons);
  phi0.time = 0.0;
  many_body_state psi0;
  psi0.amplitudes = determinant_to_fock(basis, phi0.orbitals);
  psi0.time = 0.0;
  return march(phi0, m, psi0, cfg);
}

// criterion 4: exact-mode marching recovers a smooth driven potential up to
// the mean-zero gauge with first-order convergence in the step size.
criterion_result criterion_potential_round_trip() {
  const auto start = std::chrono::steady_clock::now();
  const lattice_model m = driven_chain4();
  const std::vector<double> dts = {1.0 / 50, 1.0 / 100, 1.0 / 200, 1.0 / 400};
  std::vector<double> errors;
  for (double dt : dts) {
    const reconstruction_result run = run_chain4(dt, false);
    double worst = 0.0;
    for (const auto& step : run.steps) {
      const std::vector<double> scheduled = m.potential_at(step.t);
      Eigen::VectorXd truth = Eigen::Map<const Eigen::VectorXd>(scheduled.data(), m.sites);
      truth.array() -= truth.mean();
      worst = std::max(worst, (step.potential - truth).cwiseAbs().maxCoeff());
    }
    errors.push_back(worst);
  }

  // least-squares slope of log(error) against log(dt)
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < dts.size(); ++i) {
    mean_x += std::log(dts[i]);
    mean_y += std::log(errors[i]);
  }
  mean_x /= static_cast<double>(dts.size());
  mean_y /= static_cast<double>(dts.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < dts.size(); ++i) {
    num += (std::log(dts[i]) - mean_x) * (std::log(errors[i]) - mean_y);
    den += (std::log(dts[i]) - mean_x) * (std::log(dts[i]) - mean_x);
  }
  const double order = num / den;
  const double elapsed = seconds_since(start);

  criterion_result r;
  r.pass = order >= 0.8 && order <= 1.2 && elapsed < 120.0;
  r.detail = "convergence order " + fmt(order) + ", finest max error " + fmt(errors.back()) +
             ", " + fmt(elapsed) + " s";
  return r;
}

// criterion 5: interacting four-site reconstruction tracks the target density
// within 0.05 in the site-summed absolute value at every grid point while the
// stiffness diagnostic stays finite.
criterion_result criterion_interacting_reconstruction() {
  const auto start = std::chrono::steady_clock::now();
  lattice_model m;
  m.sites = 4;
  m.electrons = 2;
  m.hopping = lattice_model::chain_hopping(4, 1.0);
  m.interaction_pairs = {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}};
  m.potential.shape = waveform::sinusoid;
  m.potential.profile = {1.0, -1.0, 0.5, -0.5};
  m.potential.amplitude = 0.5;
  m.potential.frequency = 2.0;

  const fock_basis basis = build_basis(m.sites, m.electrons);
  const sparse_operator h0 = build_hamiltonian(m, basis, m.potential_at(0.0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h0.dense());
  many_body_state psi0;
  psi0.amplitudes = eig.eigenvectors().col(0);
  psi0.time = 0.0;

  // initial orbitals fitted to the interacting density and its rate
  const Eigen::VectorXd density0 = measure_density(psi0, basis);
  const std::vector<sparse_operator> rate_ops = build_density_rate_ops(m.hopping, basis);
  Eigen::VectorXd rate0(m.sites);
  for (int j = 0; j < m.sites; ++j)
    rate0(j) = rate_ops[static_cast<std::size_t>(j)].expectation(psi0.amplitudes).real();
  determinant_state phi0;
  phi0.orbitals = fit_initial_orbitals(
      ground_orbitals(m.hopping, m.potential_at(0.0), m.electrons), density0, rate0, m.hopping);
  phi0.time = 0.0;

  march_config cfg;
  cfg.t0 = 0.0;
  cfg.t1 = 1.0;
  cfg.dt = 1.0 / 400;
  cfg.mode = source_mode::exact;
  cfg.rate_budget = 2.0;
  const reconstruction_result run = march(phi0, m, psi0, cfg);

  double worst_density = 0.0;
  for (double e : run.density_error_l1) worst_density = std::max(worst_density, e);
  bool stiffness_finite = true;
  double max_stiffness = 0.0;
  for (const auto& step : run.steps) {
    if (!std::isfinite(step.diagnostics.stiffness)) stiffness_finite = false;
    max_stiffness = std::max(max_stiffness, step.diagnostics.stiffness);
  }
  const double elapsed = seconds_since(start);

  criterion_result r;
  r.pass = worst_density <= 0.05 && stiffness_finite && elapsed < 600.0;
  r.detail = "max density error " + fmt(worst_density) + ", max stiffness " +
             fmt(max_stiffness) + (stiffness_finite ? " (finite)" : " (NOT finite)") + ", " +
             fmt(elapsed) + " s";
  return r;
}

// ---- criterion 6: noise-optimal stencil error limit --------------------------
//
// With the width chosen from the noise level and curvature bound, the stencil
// error against the analytic second derivative of a free two-site oscillation
// stays below sqrt(2 c4 delta) across 100 bounded-noise realizations.
criterion_result criterion_stencil_limit() {
  const double delta = 1e-6;
  const double c4 = 2.24;  // max |d4/dt4| of 0.5 + 0.14 cos(2t)
  const double h = std::pow(48.0 * delta / c4, 0.25);
  const double limit = std::sqrt(2.0 * c4 * delta);
  // the library must agree with both closed forms
  if (std::abs(choose_stencil_width(delta, c4) - h) > 1e-15 * h ||
      std::abs(stencil_error_limit(c4, delta) - limit) > 1e-15 * limit) {
    return {false, "library width or limit disagrees with the closed forms"};
  }

  const long grid_points = static_cast<long>(std::ceil(3.0 / h)) + 1;
  long violations = 0;
  double worst_ratio = 0.0;
  for (int realization = 0; realization < 100; ++realization) {
    noise_spec spec;
    spec.delta_n = delta;
    spec.seed = 0xC6000000ull + static_cast<std::uint64_t>(realization);
    density_trace trace;
    trace.sites = 2;
    trace.electrons = 1;
    for (long q = 0; q <= grid_points; ++q) {
      const double t = static_cast<double>(q) * h;
      const double n0 = 0.5 + 0.14 * std::cos(2.0 * t);
      Eigen::VectorXd v(2);
      v << n0 + bounded_noise_draw(spec, q, 0), (1.0 - n0) + bounded_noise_draw(spec, q, 1);
      trace.times.push_back(t);
      trace.values.push_back(v);
    }
    for (long q = 1; q < grid_points; ++q) {
      const double t = trace.times[static_cast<std::size_t>(q)];
      const Eigen::VectorXd estimate = second_difference(trace, t, h);
      Eigen::VectorXd exact(2);
      exact << -0.56 * std::cos(2.0 * t), 0.56 * std::cos(2.0 * t);
      const double err = (estimate - exact).cwiseAbs().maxCoeff();
      if (err > limit) ++violations;
      worst_ratio = std::max(worst_ratio, err / limit);
    }
  }
  criterion_result r;
  r.pass = violations == 0;
  r.detail = std::to_string(violations) + " violations, worst error at " + fmt(worst_ratio) +
             " of the limit " + fmt(limit);
  return r;
}

// ---- criterion 7: unitary distance bound ------------------------------------
//
// For piecewise-constant evolutions differing only in the on-site potential,
// the distance between the exact product unitaries is bounded by the horizon
// times the largest potential difference, with zero violations over 50 seeded
// families on two and three sites.
criterion_result criterion_unitary_bound() {
  long violations = 0;
  double worst_ratio = 0.0;
  for (int family = 0; family < 50; ++family) {
    testutil::rng gen(0xC7000000ull + static_cast<std::uint64_t>(family));
    const int sites = 2 + family % 2;
    const Eigen::MatrixXd hopping = lattice_model::chain_hopping(sites, 1.0);
    const double horizon = 0.5 + gen.next_unit();
    const long pieces = 400 + 300 * (family % 7);
    const double piece = horizon / static_cast<double>(pieces);

    Eigen::VectorXd profile_a(sites), profile_b(sites);
    for (int j = 0; j < sites; ++j) {
      profile_a(j) = gen.next_sym();
      profile_b(j) = 0.3 * gen.next_sym();
    }
    const double omega_a = 1.0 + 2.0 * gen.next_unit();
    const double omega_b = 1.0 + 2.0 * gen.next_unit();
    const double phase_a = gen.next_sym();

    const Eigen::Index dim = sites;
    Eigen::MatrixXcd u1 = Eigen::MatrixXcd::Identity(dim, dim);
    Eigen::MatrixXcd u2 = Eigen::MatrixXcd::Identity(dim, dim);
    std::vector<Eigen::VectorXd> v1_samples, v2_samples;
    for (long i = 0; i < pieces; ++i) {
      const double s = (static_cast<double>(i) + 0.5) * piece;
      const Eigen::VectorXd v1 = profile_a * std::sin(omega_a * s + phase_a);
      const Eigen::VectorXd v2 = v1 + profile_b * std::cos(omega_b * s);
      v1_samples.push_back(v1);
      v2_samples.push_back(v2);
      for (int which = 0; which < 2; ++which) {
        const Eigen::VectorXd& v = which == 0 ? v1 : v2;
        Eigen::MatrixXd h = hopping;
        h.diagonal() += v;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
        Eigen::VectorXcd phases(dim);
        for (Eigen::Index d = 0; d < dim; ++d)
          phases(d) = std::exp(-I * piece * eig.eigenvalues()(d));
        const Eigen::MatrixXcd step = eig.eigenvectors().cast<std::complex<double>>() *
                                      phases.asDiagonal() *
                                      eig.eigenvectors().transpose().cast<std::complex<double>>();
        if (which == 0)
          u1 = step * u1;
        else
          u2 = step * u2;
      }
    }
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(u1 - u2);
    const double observed = svd.singularValues()(0);
    const double bound = unitary_error_bound(v1_samples, v2_samples, 0.0, horizon);
    if (observed > bound + 1e-12) ++violations;
    if (bound > 0) worst_ratio = std::max(worst_ratio, observed / bound);
  }
  criterion_result r;
  r.pass = violations == 0;
  r.detail = std::to_string(violations) + " violations over 50 families, tightest ratio " +
             fmt(worst_ratio);
  return r;
}

// ---- criterion 8: recursion bound dominates instrumented runs ----------------
//
// Re-running the criterion-4 marches with ground-truth instrumentation, the
// observed state error stays below the per-step recursion bound, and the
// exponential closed form dominates the discrete one at every step count.
criterion_result criterion_recursion_dominance() {
  const lattice_model m = driven_chain4();
  double tightest = 0.0;
  for (double dt : {1.0 / 50, 1.0 / 100, 1.0 / 200, 1.0 / 400}) {
    const reconstruction_result run = run_chain4(dt, true);
    const double guard_rate = run.rate_budget_final * 1.25 + 1e-12 / dt;
    const double rate_used = std::max(guard_rate, m.potential.rate_bound(m.sites));
    const bound_comparison cmp = compare_bounds(run, rate_used, 0.0);
    if (!cmp.ok)
      return {false, "state error exceeded the recursion bound at step " +
                         std::to_string(cmp.first_violation) + " for dt " + fmt(dt)};
    for (std::size_t k = 0; k < cmp.predicted.size(); ++k)
      if (cmp.predicted[k] > 0)
        tightest = std::max(tightest, cmp.observed[k] / cmp.predicted[k]);

    recursion_inputs in;
    in.rate_budget = rate_used;
    in.kappa = cmp.kappa_used;
    in.local_energy = cmp.local_energy_used;
    in.delta_curvature = 0.0;
    const long z = static_cast<long>(run.steps.size());
    for (long k = 1; k <= z; ++k) {
      in.steps = k;
      in.horizon = static_cast<double>(k) * dt;
      const horizon_bound hb = recursion_bound_at_horizon(in);
      // an overflowed exponential form is infinite and dominates trivially
      if (!hb.overflow && hb.exponential_form < hb.closed_form)
        return {false, "exponential form fell below the closed form at k = " +
                           std::to_string(k) + " for dt " + fmt(dt)};
    }
  }
  criterion_result r;
  r.pass = true;
  r.detail = "all four instrumented runs bounded; observed error at most " + fmt(tightest) +
             " of the bound";
  return r;
}

// ---- criterion 9: breakdown surfaces as a typed failure ----------------------
//
// A start localized on one site makes the first balance solve singular: the
// reconstruction must raise the breakdown error every time and leave no
// potential artifact behind.
criterion_result criterion_breakdown_surfacing() {
  config_map cfg;
  cfg.set_long("model.sites", 2);
  cfg.set_long("model.electrons", 1);
  cfg.set("potential.shape", "sinusoid");
  cfg.set("potential.profile", "1 -1");
  cfg.set_double("potential.amplitude", 0.5);
  cfg.set_double("potential.frequency", 2.0);
  cfg.set_double("march.t1", 0.1);
  cfg.set_double("march.dt", 0.01);
  cfg.set("initial.kind", "localized");
  cfg.set("initial.sites", "0");
  const experiment exp = parse_experiment(cfg);

  int raised = 0;
  std::string dir;
  for (int attempt = 0; attempt < 3; ++attempt) {
    dir = scratch_dir("breakdown_" + std::to_string(attempt));
    try {
      run_reconstruct(exp, std::nullopt, dir);
    } catch (const v_representability_breakdown&) {
      ++raised;
    } catch (const std::exception&) {
      // wrong class: counted as a failure below
    }
  }
  const bool no_potential = !std::filesystem::exists(dir + "/potentials.csv");
  bool manifest_names_it = false;
  try {
    const std::string manifest = read_text_file(dir + "/manifest.json");
    manifest_names_it = manifest.find("representability_breakdown") != std::string::npos;
  } catch (const std::exception&) {
  }
  criterion_result r;
  r.pass = raised == 3 && no_potential && manifest_names_it;
  r.detail = std::to_string(raised) + "/3 runs raised the breakdown error; potential file " +
             (no_potential ? "absent" : "PRESENT") + "; failure manifest " +
             (manifest_names_it ? "names the error" : "MISSING");
  return r;
}

// ---- criterion 10: byte-identical reruns -------------------------------------
//
// A seeded noisy stencil pipeline (generate, then reconstruct from the trace)
// must produce byte-identical CSV artifacts when executed twice, preferably in
// separate processes through the CLI.
criterion_result criterion_determinism(const std::string& cli) {
  const std::string root = scratch_dir("determinism");
  const std::string config_path = root + "/exp.cfg";
  write_text_file(config_path,
                  "model.sites = 2\n"
                  "model.electrons = 1\n"
                  "potential.shape = sinusoid\n"
                  "potential.profile = 1 -1\n"
                  "potential.amplitude = 0.4\n"
                  "potential.frequency = 2.0\n"
                  "march.t1 = 0.2\n"
                  "march.dt = 0.02\n"
                  "march.mode = stencil\n"
                  "march.rate_budget = 8\n"
                  "march.consistency_tol = 1.0\n"
                  "solver.project_kernel = true\n"
                  "noise.delta_n = 0.001\n"
                  "noise.seed = 42\n"
                  "noise.repetitions = 10\n");

  const bool use_cli = !cli.empty() && std::filesystem::exists(cli);
  auto execute = [&](const std::string& run_dir) -> bool {
    if (use_cli) {
      const std::string log = " >> " + root + "/cli.log 2>&1";
      const std::string generate = cli + " generate --config " + config_path + " --out " +
                                   run_dir + "/trace" + log;
      if (std::system(generate.c_str()) != 0) return false;
      const std::string reconstruct = cli + " reconstruct --config " + config_path +
                                      " --trace " + run_dir + "/trace/density.json" +
                                      " --out " + run_dir + log;
      return std::system(reconstruct.c_str()) == 0;
    }
    const experiment exp = parse_experiment(config_map::load(config_path));
    const generate_outcome gen = run_generate(exp, run_dir + "/trace");
    run_reconstruct(exp, gen.trace, run_dir);
    return true;
  };

  try {
    const std::string dir_a = root + "/first";
    const std::string dir_b = root + "/second";
    if (!execute(dir_a) || !execute(dir_b))
      return {false, std::string("pipeline execution failed (") +
                         (use_cli ? "cli" : "in-process") + " mode)"};

    std::vector<std::string> mismatched;
    for (const char* name :
         {"/trace/density.csv", "/trace/density.json", "/potentials.csv", "/density.csv",
          "/diagnostics.csv", "/bound_report.json"}) {
      if (read_text_file(dir_a + name) != read_text_file(dir_b + name))
        mismatched.push_back(name);
    }
    criterion_result r;
    r.pass = mismatched.empty();
    if (r.pass) {
      r.detail = std::string("six artifacts byte-identical across two ") +
                 (use_cli ? "process-level" : "in-process") + " executions";
    } else {
      r.detail = "differing artifacts:";
      for (const std::string& name : mismatched) r.detail += " " + name;
    }
    return r;
  } catch (const std::exception& e) {
    return {false, std::string("pipeline failed: ") + e.what()};
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  int failures = 0;
  auto report = [&](int number, const std::string& description,
                    const std::function<criterion_result()>& body) {
    criterion_result result;
    try {
      result = body();
    } catch (const std::exception& e) {
      result.pass = false;
      result.detail = std::string("unexpected exception: ") + e.what();
    }
    if (!result.pass) ++failures;
    std::printf("criterion %2d: %s  %s (%s)\n", number, result.pass ? "PASS" : "FAIL",
                description.c_str(), result.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "kinetic-stress operator routes agree", criterion_operator_identities);
  report(2, "balance matrix symmetry, row sums, and commutator identity",
         criterion_balance_structure);
  report(3, "worked two-site balance matrix and restricted inverse norm",
         criterion_worked_dimer);
  report(4, "driven potential recovered with first-order convergence",
         criterion_potential_round_trip);
  report(5, "interacting reconstruction tracks the target density",
         criterion_interacting_reconstruction);
  report(6, "stencil error stays under the noise-optimal limit", criterion_stencil_limit);
  report(7, "unitary distance bounded by horizon times potential gap",
         criterion_unitary_bound);
  report(8, "recursion bound dominates instrumented marches", criterion_recursion_dominance);
  report(9, "singular balance solve raises a typed breakdown", criterion_breakdown_surfacing);
  report(10, "seeded pipeline reruns are byte-identical",
         [&]() { return criterion_determinism(cli); });

  std::printf("%d/10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
