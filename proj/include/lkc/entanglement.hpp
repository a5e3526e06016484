#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "lkc/chain_spec.hpp"
#include "lkc/dynamics.hpp"
#include "lkc/errors.hpp"

namespace lkc {

inline constexpr double kEigenClamp = 1e-12;

/// -sum [z ln z + (1 - z) ln(1 - z)] with each z clamped into [eps, 1 - eps].
inline double entropy_from_spectrum(std::span<const double> zetas) noexcept {
  double s = 0.0;
  for (double z : zetas) {
    z = std::clamp(z, kEigenClamp, 1.0 - kEigenClamp);
    s -= z * std::log(z) + (1.0 - z) * std::log1p(-z);
  }
  return s;
}

/// Von Neumann entropy (nats) of sites 0..l-1 from the 2l x 2l restricted correlator.
inline double entanglement_entropy(const Correlator& c, int l) {
  if (l < 1 || l >= c.sites())
    throw std::invalid_argument("entanglement_entropy: need 1 <= l < L");
  const Eigen::MatrixXcd sub = c.principal_block(l);
  const double asym = (sub - sub.adjoint()).cwiseAbs().maxCoeff();
  if (asym > 1e-8) throw NonHermitianInput("entanglement_entropy: subsystem correlator is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("entanglement_entropy: eigen-solver failed");
  const Eigen::VectorXd& z = solver.eigenvalues();
  return entropy_from_spectrum(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
}

struct EETimeSeries {
  std::vector<double> times;
  std::vector<double> values;
  bool converged = false;
  double final_value = 0.0;
};

struct SteadyState {
  double entropy = 0.0;       // S(T)
  double half_entropy = 0.0;  // S(T/2)
  bool converged = false;     // |S(T) - S(T/2)| < steady_tol
};

inline EETimeSeries ee_time_series(const ChainSpec& spec, int L, int l, const std::vector<double>& times,
                                   double steady_tol = 1e-6) {
  if (times.empty() || times.front() != 0.0) throw std::invalid_argument("ee_time_series: times must start at 0");
  if (!std::is_sorted(times.begin(), times.end()) ||
      std::adjacent_find(times.begin(), times.end()) != times.end())
    throw std::invalid_argument("ee_time_series: times must be strictly ascending");
  EETimeSeries out;
  out.times = times;
  out.values.reserve(times.size());
  for (double t : times) out.values.push_back(entanglement_entropy(assemble_correlator(spec, L, t), l));
  out.final_value = out.values.back();
  const double half = 0.5 * times.back();
  const auto it = std::find(times.begin(), times.end(), half);
  const double s_half = it != times.end() ? out.values[static_cast<std::size_t>(it - times.begin())]
                                          : entanglement_entropy(assemble_correlator(spec, L, half), l);
  out.converged = std::abs(out.final_value - s_half) < steady_tol;
  return out;
}

/// Steady-state entropy for several subsystem sizes, sharing the two correlators at T and T/2.
inline std::vector<SteadyState> steady_state_profile(const ChainSpec& spec, int L, const std::vector<int>& l_values,
                                                     double T = 2000.0, double steady_tol = 1e-6) {
  if (!(T > 0.0)) throw std::invalid_argument("steady_state_ee: T must be positive");
  const auto at_end = assemble_correlator(spec, L, T);
  const auto at_half = assemble_correlator(spec, L, 0.5 * T);
  std::vector<SteadyState> out;
  out.reserve(l_values.size());
  for (int l : l_values) {
    SteadyState s;
    s.entropy = entanglement_entropy(at_end, l);
    s.half_entropy = entanglement_entropy(at_half, l);
    s.converged = std::abs(s.entropy - s.half_entropy) < steady_tol;
    out.push_back(s);
  }
  return out;
}

inline SteadyState steady_state_ee(const ChainSpec& spec, int L, int l, double T = 2000.0,
                                   double steady_tol = 1e-6) {
  return steady_state_profile(spec, L, {l}, T, steady_tol).front();
}

}  // namespace lkc
