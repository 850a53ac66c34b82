#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace ksinv {

// Density-density interaction entry: value * n_i * n_j.
struct density_pair {
  int i = 0;
  int j = 0;
  double value = 0.0;
};

// General two-body entry: value * a+_i a+_j a_k a_l, applied exactly as given.
// No implicit symmetrization is performed; the assembled operator must come
// out Hermitian or construction fails.
struct four_index_term {
  int i = 0;
  int j = 0;
  int k = 0;
  int l = 0;
  double value = 0.0;
};

enum class waveform {
  constant,        // V_j(t) = amplitude * profile_j
  ramp,            // V_j(t) = amplitude * profile_j * (t - center)
  sinusoid,        // V_j(t) = amplitude * profile_j * sin(frequency * t + phase)
  gaussian_pulse,  // V_j(t) = amplitude * profile_j * exp(-(t-center)^2 / (2 width^2))
  tabulated,       // piecewise-constant rows sampled from a table
};

const char* waveform_name(waveform w);
waveform waveform_from_name(const std::string& name);

// Time-dependent on-site potential, one scalar per site.
struct potential_schedule {
  waveform shape = waveform::constant;
  std::vector<double> profile;  // spatial profile p_j; empty means all zero
  double amplitude = 0.0;
  double frequency = 0.0;  // angular frequency for sinusoid
  double phase = 0.0;
  double center = 0.0;  // ramp origin / pulse center
  double width = 1.0;   // gaussian width

  // tabulated samples; times must be strictly increasing, each row sized M.
  // Value at t is the row with the largest table time <= t (first row before).
  std::vector<double> table_times;
  std::vector<std::vector<double>> table_values;

  std::vector<double> at(double t, int sites) const;
  bool time_independent() const;
  // Upper bound on sup_t |dV/dt|_inf for the closed forms; for tabulated rows
  // the largest consecutive difference quotient is returned.
  double rate_bound(int sites) const;
};

// Lattice of M sites holding N spinless fermions.  T is the symmetric hopping
// matrix (site-basis); the interaction is density-density pairs plus optional
// general four-index terms.
struct lattice_model {
  int sites = 0;
  int electrons = 0;
  Eigen::MatrixXd hopping;  // M x M, symmetric
  std::vector<density_pair> interaction_pairs;
  std::vector<four_index_term> interaction_general;
  potential_schedule potential;

  bool interacting() const {
    return !interaction_pairs.empty() || !interaction_general.empty();
  }
  std::vector<double> potential_at(double t) const { return potential.at(t, sites); }

  // Largest count of nonzero off-diagonal hopping entries in any row.
  int max_row_degree() const;
  double max_abs_hopping() const;

  void validate() const;  // throws config_error on structural problems

  static Eigen::MatrixXd chain_hopping(int sites, double tau);
  static Eigen::MatrixXd ring_hopping(int sites, double tau);
};

}  // namespace ksinv
