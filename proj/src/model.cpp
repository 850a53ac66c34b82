#include "ksinv/model.hpp"

#include <algorithm>
#include <cmath>

#include "ksinv/errors.hpp"

namespace ksinv {

const char* waveform_name(waveform w) {
  switch (w) {
    case waveform::constant: return "constant";
    case waveform::ramp: return "ramp";
    case waveform::sinusoid: return "sinusoid";
    case waveform::gaussian_pulse: return "gaussian_pulse";
    case waveform::tabulated: return "tabulated";
  }
  return "constant";
}

waveform waveform_from_name(const std::string& name) {
  if (name == "constant") return waveform::constant;
  if (name == "ramp") return waveform::ramp;
  if (name == "sinusoid") return waveform::sinusoid;
  if (name == "gaussian_pulse") return waveform::gaussian_pulse;
  if (name == "tabulated") return waveform::tabulated;
  throw config_error("unknown waveform '" + name + "'");
}

std::vector<double> potential_schedule::at(double t, int sites) const {
  std::vector<double> v(static_cast<std::size_t>(sites), 0.0);
  if (shape == waveform::tabulated) {
    if (table_times.empty()) return v;
    auto it = std::upper_bound(table_times.begin(), table_times.end(), t);
    std::size_t row = it == table_times.begin() ? 0 : static_cast<std::size_t>(it - table_times.begin() - 1);
    const auto& sample = table_values[row];
    for (int j = 0; j < sites; ++j) v[static_cast<std::size_t>(j)] = sample[static_cast<std::size_t>(j)];
    return v;
  }
  double envelope = 0.0;
  switch (shape) {
    case waveform::constant: envelope = amplitude; break;
    case waveform::ramp: envelope = amplitude * (t - center); break;
    case waveform::sinusoid: envelope = amplitude * std::sin(frequency * t + phase); break;
    case waveform::gaussian_pulse: {
      double u = (t - center) / width;
      envelope = amplitude * std::exp(-0.5 * u * u);
      break;
    }
    case waveform::tabulated: break;
  }
  for (int j = 0; j < sites; ++j) {
    double p = static_cast<std::size_t>(j) < profile.size() ? profile[static_cast<std::size_t>(j)] : 0.0;
    v[static_cast<std::size_t>(j)] = envelope * p;
  }
  return v;
}

bool potential_schedule::time_independent() const {
  if (shape == waveform::constant) return true;
  if (shape == waveform::tabulated) return table_times.size() <= 1;
  if (amplitude == 0.0) return true;
  if (shape == waveform::sinusoid && frequency == 0.0) return true;
  double pmax = 0.0;
  for (double p : profile) pmax = std::max(pmax, std::abs(p));
  return pmax == 0.0;
}

double potential_schedule::rate_bound(int sites) const {
  double pmax = 0.0;
  for (int j = 0; j < sites; ++j) {
    double p = static_cast<std::size_t>(j) < profile.size() ? profile[static_cast<std::size_t>(j)] : 0.0;
    pmax = std::max(pmax, std::abs(p));
  }
  switch (shape) {
    case waveform::constant: return 0.0;
    case waveform::ramp: return std::abs(amplitude) * pmax;
    case waveform::sinusoid: return std::abs(amplitude * frequency) * pmax;
    case waveform::gaussian_pulse:
      // max of |d/dt exp(-u^2/2)| is exp(-1/2) at |u| = 1
      return std::abs(amplitude) * pmax * std::exp(-0.5) / std::abs(width);
    case waveform::tabulated: {
      double rate = 0.0;
      for (std::size_t i = 0; i + 1 < table_times.size(); ++i) {
        double dt = table_times[i + 1] - table_times[i];
        if (dt <= 0) continue;
        for (std::size_t j = 0; j < table_values[i].size(); ++j) {
          rate = std::max(rate, std::abs(table_values[i + 1][j] - table_values[i][j]) / dt);
        }
      }
      return rate;
    }
  }
  return 0.0;
}

int lattice_model::max_row_degree() const {
  int degree = 0;
  for (int i = 0; i < sites; ++i) {
    int row = 0;
    for (int j = 0; j < sites; ++j) {
      if (i != j && hopping(i, j) != 0.0) ++row;
    }
    degree = std::max(degree, row);
  }
  return degree;
}

double lattice_model::max_abs_hopping() const {
  double m = 0.0;
  for (int i = 0; i < sites; ++i)
    for (int j = 0; j < sites; ++j) m = std::max(m, std::abs(hopping(i, j)));
  return m;
}

void lattice_model::validate() const {
  if (sites < 1 || sites > 12) throw config_error("model.sites must be in [1, 12]");
  if (electrons < 1 || electrons > sites)
    throw config_error("model.electrons must be in [1, model.sites]");
  if (hopping.rows() != sites || hopping.cols() != sites)
    throw config_error("hopping matrix must be sites x sites");
  for (int i = 0; i < sites; ++i)
    for (int j = 0; j < i; ++j)
      if (hopping(i, j) != hopping(j, i)) throw config_error("hopping matrix must be symmetric");
  for (const auto& p : interaction_pairs) {
    if (p.i < 0 || p.i >= sites || p.j < 0 || p.j >= sites)
      throw config_error("interaction pair site index out of range");
  }
  for (const auto& w : interaction_general) {
    for (int s : {w.i, w.j, w.k, w.l})
      if (s < 0 || s >= sites) throw config_error("interaction term site index out of range");
  }
  if (potential.shape == waveform::tabulated) {
    if (potential.table_times.size() != potential.table_values.size())
      throw config_error("tabulated potential: times and rows disagree");
    for (std::size_t i = 0; i + 1 < potential.table_times.size(); ++i)
      if (!(potential.table_times[i] < potential.table_times[i + 1]))
        throw config_error("tabulated potential: times must be strictly increasing");
    for (const auto& row : potential.table_values)
      if (static_cast<int>(row.size()) != sites)
        throw config_error("tabulated potential: row size must equal model.sites");
  } else if (!potential.profile.empty() &&
             static_cast<int>(potential.profile.size()) != sites) {
    throw config_error("potential profile size must equal model.sites");
  }
}

Eigen::MatrixXd lattice_model::chain_hopping(int sites, double tau) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(sites, sites);
  for (int i = 0; i + 1 < sites; ++i) {
    t(i, i + 1) = -tau;
    t(i + 1, i) = -tau;
  }
  return t;
}

Eigen::MatrixXd lattice_model::ring_hopping(int sites, double tau) {
  Eigen::MatrixXd t = chain_hopping(sites, tau);
  if (sites > 2) {
    t(0, sites - 1) += -tau;
    t(sites - 1, 0) += -tau;
  }
  return t;
}

}  // namespace ksinv
