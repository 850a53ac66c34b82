// Time evolution: exact two-level dynamics, unitarity, midpoint-rule
// convergence order, determinant embedding, and gauge invariance.

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "ksinv/errors.hpp"
#include "ksinv/fock.hpp"
#include "ksinv/model.hpp"
#include "ksinv/oracle.hpp"
#include "ksinv/propagator.hpp"
#include "test_helpers.hpp"

using namespace ksinv;
using testutil::rng;

TEST_CASE("two-site hopping produces the textbook population oscillation") {
  // H = [[0,-tau],[-tau,0]] starting from site 0: n_0(t) = cos^2(tau t).
  const double tau = 1.0;
  lattice_model m = testutil::chain_model(2, 1, tau);
  fock_basis basis = build_basis(2, 1);
  interacting_propagator prop(m, basis);

  many_body_state psi;
  psi.amplitudes = Eigen::VectorXcd::Zero(2);
  psi.amplitudes[0] = 1.0;  // pattern 0b01 = particle on site 0
  psi.time = 0.0;

  for (double t : {0.3, 0.7, 1.9}) {
    many_body_state s = psi;
    prop.advance(s, t, 1);  // static Hamiltonian: one exact exponential
    Eigen::VectorXd n = measure_density(s, basis);
    CHECK(n[0] == doctest::Approx(std::cos(tau * t) * std::cos(tau * t)).epsilon(1e-12));
    CHECK(n[1] == doctest::Approx(std::sin(tau * t) * std::sin(tau * t)).epsilon(1e-12));
    CHECK(s.amplitudes.norm() == doctest::Approx(1.0).epsilon(1e-13));
  }

  // The single-particle propagator reproduces the same curve.
  determinant_state phi;
  phi.orbitals = Eigen::MatrixXcd::Zero(2, 1);
  phi.orbitals(0, 0) = 1.0;
  double t = 0.0;
  const double dt = 1e-3;
  for (int k = 0; k < 700; ++k) {
    phi = evolve_determinant(phi, m.hopping, {0.0, 0.0}, dt);
    t += dt;
  }
  Eigen::VectorXd n = determinant_density(phi);
  // Static potential, so each step is exact regardless of dt.
  CHECK(n[0] == doctest::Approx(std::cos(t) * std::cos(t)).epsilon(1e-10));
}

TEST_CASE("midpoint substepping self-converges at second order") {
  // Driven interacting trimer; compare against a fine reference propagation.
  lattice_model m = testutil::chain_model(3, 2, 1.0);
  m.interaction_pairs.push_back({0, 1, 1.0});
  m.interaction_pairs.push_back({1, 2, 1.0});
  m.potential.shape = waveform::sinusoid;
  m.potential.profile = {1.0, 0.0, -1.0};
  m.potential.amplitude = 0.8;
  m.potential.frequency = 3.0;

  fock_basis basis = build_basis(3, 2);
  interacting_propagator prop(m, basis);
  rng gen(2024);
  many_body_state psi0;
  psi0.amplitudes = testutil::random_state(gen, basis.dim());
  psi0.time = 0.0;

  auto run = [&](int substeps) {
    many_body_state s = psi0;
    prop.advance(s, 0.5, substeps);
    return s.amplitudes;
  };
  Eigen::VectorXcd reference = run(512);
  double err4 = (run(4) - reference).norm();
  double err8 = (run(8) - reference).norm();
  double err16 = (run(16) - reference).norm();
  double order_a = std::log2(err4 / err8);
  double order_b = std::log2(err8 / err16);
  CHECK(order_a >= 1.8);
  CHECK(order_a <= 2.3);
  CHECK(order_b >= 1.8);
  CHECK(order_b <= 2.3);
}

TEST_CASE("determinant evolution conserves orthonormality over long runs") {
  rng gen(5150);
  lattice_model m = testutil::ring_model(5, 3, 1.0);
  determinant_state phi;
  phi.orbitals = testutil::random_orbitals(gen, 5, 3);
  double t = 0.0;
  const double dt = 0.01;
  for (int k = 0; k < 1000; ++k) {
    // Freshly drawn potential every step: a rough drive.
    auto v = testutil::random_potential(gen, 5, 2.0);
    phi = evolve_determinant(phi, m.hopping, v, dt);
    t += dt;
  }
  CHECK(gram_deviation(phi.orbitals) <= 1e-9);
  CHECK(phi.time == doctest::Approx(t).epsilon(1e-12));
  Eigen::VectorXd n = determinant_density(phi);
  CHECK(n.sum() == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(n.minCoeff() >= -1e-12);
}

TEST_CASE("determinant embedding into the particle sector is norm preserving") {
  rng gen(31);
  for (int sites : {3, 5}) {
    for (int n = 1; n < std::min(sites, 4); ++n) {
      fock_basis basis = build_basis(sites, n);
      for (int trial = 0; trial < 4; ++trial) {
        Eigen::MatrixXcd orbitals = testutil::random_orbitals(gen, sites, n);
        Eigen::VectorXcd psi = determinant_to_fock(basis, orbitals);
        CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));

        // The embedded state reproduces the one-body density.
        determinant_state phi;
        phi.orbitals = orbitals;
        many_body_state mb;
        mb.amplitudes = psi;
        Eigen::VectorXd n_orb = determinant_density(phi);
        Eigen::VectorXd n_fock = measure_density(mb, basis);
        CHECK((n_orb - n_fock).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
}

TEST_CASE("embedded determinant evolves identically to its orbitals (W = 0)") {
  // For a non-interacting model the determinant evolution and the full
  // sector evolution are the same physics; densities must agree.
  rng gen(88);
  lattice_model m = testutil::chain_model(4, 2, 1.0);
  m.potential.shape = waveform::sinusoid;
  m.potential.profile = {0.5, -0.5, 0.25, -0.25};
  m.potential.amplitude = 1.0;
  m.potential.frequency = 2.0;
  fock_basis basis = build_basis(4, 2);
  interacting_propagator prop(m, basis);

  determinant_state phi;
  phi.orbitals = testutil::random_orbitals(gen, 4, 2);
  many_body_state psi;
  psi.amplitudes = determinant_to_fock(basis, phi.orbitals);
  psi.time = 0.0;

  const double dt = 1.0 / 512;
  for (int k = 0; k < 256; ++k) {
    // Hold the potential at the midpoint over dt for both evolutions so they
    // integrate the same piecewise-constant Hamiltonian.
    auto v = m.potential_at(phi.time + 0.5 * dt);
    phi = evolve_determinant(phi, m.hopping, v, dt);
  }
  prop.advance(psi, 256 * dt, 256);  // same midpoint sampling internally
  Eigen::VectorXd n_det = determinant_density(phi);
  Eigen::VectorXd n_mb = measure_density(psi, basis);
  CHECK((n_det - n_mb).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("one-body matrix, exchange matrix, and density rate identities") {
  rng gen(404);
  lattice_model m = testutil::ring_model(5, 2, 0.9);
  fock_basis basis = build_basis(5, 2);
  auto rate_ops = build_density_rate_ops(m.hopping, basis);

  for (int trial = 0; trial < 10; ++trial) {
    determinant_state phi;
    phi.orbitals = testutil::random_orbitals(gen, 5, 2);

    Eigen::MatrixXcd d = one_body_matrix(phi);
    CHECK(testutil::max_abs(Eigen::MatrixXcd(d - d.adjoint())) <= 1e-14);
    CHECK(d.trace().real() == doctest::Approx(2.0).epsilon(1e-12));

    Eigen::MatrixXd g = exchange_matrix(phi);
    CHECK(testutil::max_abs(Eigen::MatrixXd(g - g.transpose())) == 0.0);  // exact mirror
    CHECK(testutil::max_abs(Eigen::MatrixXd(g - 2.0 * d.real())) <= 1e-14);

    Eigen::VectorXd r = density_rate(phi, m.hopping);
    CHECK(std::abs(r.sum()) <= 1e-12);

    // Same expectations through the full particle sector.
    Eigen::VectorXcd psi = determinant_to_fock(basis, phi.orbitals);
    for (int j = 0; j < 5; ++j) {
      double fock_rate = rate_ops[static_cast<std::size_t>(j)].expectation(psi).real();
      CHECK(std::abs(fock_rate - r[j]) <= 1e-10);
    }
  }
}

TEST_CASE("density rate matches the numerical derivative of the density") {
  lattice_model m = testutil::chain_model(3, 1, 1.0);
  rng gen(606);
  determinant_state phi;
  phi.orbitals = testutil::random_orbitals(gen, 3, 1);
  std::vector<double> v = {0.4, -0.1, -0.3};

  Eigen::VectorXd rate = density_rate(phi, m.hopping);
  const double h = 1e-6;
  determinant_state fwd = evolve_determinant(phi, m.hopping, v, h);
  determinant_state bwd = evolve_determinant(phi, m.hopping, v, -h);
  Eigen::VectorXd numeric =
      (determinant_density(fwd) - determinant_density(bwd)) / (2.0 * h);
  CHECK((rate - numeric).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("constant potential shifts leave the density untouched") {
  rng gen(777);
  lattice_model m = testutil::chain_model(4, 2, 1.0);
  determinant_state a;
  a.orbitals = testutil::random_orbitals(gen, 4, 2);
  determinant_state b = a;
  std::vector<double> v = {0.2, -0.9, 0.5, 0.1};
  std::vector<double> v_shift = v;
  for (auto& x : v_shift) x += 3.7;
  for (int k = 0; k < 50; ++k) {
    a = evolve_determinant(a, m.hopping, v, 0.02);
    b = evolve_determinant(b, m.hopping, v_shift, 0.02);
  }
  CHECK((determinant_density(a) - determinant_density(b)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("ground orbitals minimize the hopping energy") {
  Eigen::MatrixXd t = lattice_model::chain_hopping(2, 1.0);
  Eigen::MatrixXcd orbitals = ground_orbitals(t, {0.0, 0.0}, 1);
  REQUIRE(orbitals.cols() == 1);
  // Ground orbital of the symmetric dimer is the even combination.
  CHECK(std::abs(orbitals(0, 0)) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(std::abs(orbitals(1, 0)) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  double energy = (orbitals.adjoint() * t * orbitals)(0, 0).real();
  CHECK(energy == doctest::Approx(-1.0).epsilon(1e-12));

  // Rayleigh quotient of the N lowest orbitals equals the sum of the lowest
  // eigenvalues; cross-check against a direct eigendecomposition.
  Eigen::MatrixXd t5 = lattice_model::ring_hopping(5, 0.8);
  std::vector<double> v5 = {0.1, -0.2, 0.3, 0.0, -0.2};
  Eigen::MatrixXcd g5 = ground_orbitals(t5, v5, 2);
  Eigen::MatrixXd h5 = t5;
  for (int j = 0; j < 5; ++j) h5(j, j) += v5[static_cast<std::size_t>(j)];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h5);
  double expected = es.eigenvalues()[0] + es.eigenvalues()[1];
  double got = (g5.adjoint() * h5 * g5).trace().real();
  CHECK(got == doctest::Approx(expected).epsilon(1e-12));
  CHECK(gram_deviation(g5) <= 1e-13);
}

TEST_CASE("backward evolution inverts forward evolution") {
  rng gen(1234);
  lattice_model m = testutil::chain_model(3, 2, 1.0);
  m.interaction_pairs.push_back({0, 2, 0.6});
  fock_basis basis = build_basis(3, 2);
  interacting_propagator prop(m, basis);
  many_body_state psi;
  psi.amplitudes = testutil::random_state(gen, basis.dim());
  psi.time = 0.0;
  Eigen::VectorXcd original = psi.amplitudes;
  prop.advance(psi, 0.4, 32);
  prop.advance(psi, 0.0, 32);
  CHECK((psi.amplitudes - original).norm() <= 1e-12);
  CHECK(std::abs(psi.time) <= 1e-12);
}
