#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lkc/chain_spec.hpp"
#include "lkc/entanglement.hpp"
#include "lkc/errors.hpp"
#include "lkc/parallel.hpp"
#include "lkc/topology.hpp"

namespace lkc {

/// Least-squares fit S(l) = g ln[sin(pi l / L)] + intercept.
struct ScalingFit {
  double g = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<int> l_values;
};

struct EntropySample {
  int l = 0;
  double entropy = 0.0;
};

inline double log_sine_abscissa(int l, int L) {
  return std::log(std::sin(std::numbers::pi * static_cast<double>(l) / static_cast<double>(L)));
}

/// l = round(L f) for f = 0.05, 0.10, ..., 0.50, raised to at least 8 and deduplicated.
inline std::vector<int> default_l_values(int L) {
  std::vector<int> out;
  for (int i = 1; i <= 10; ++i) {
    const int l = std::max(8, static_cast<int>(std::lround(L * 0.05 * i)));
    if (out.empty() || out.back() != l) out.push_back(l);
  }
  return out;
}

inline ScalingFit fit_log_law(const std::vector<EntropySample>& samples, int L) {
  if (samples.size() < 4) throw InsufficientSamples("fit_log_law: need at least 4 samples");
  for (const auto& s : samples) {
    const int l = s.l;
    if (l < 8 || 2 * l > L) throw std::invalid_argument("fit_log_law: subsystem sizes must lie in [8, L/2]");
  }

  const auto n = static_cast<double>(samples.size());
  std::vector<double> x;
  x.reserve(samples.size());
  double xm = 0.0, ym = 0.0;
  for (const auto& s : samples) {
    x.push_back(log_sine_abscissa(s.l, L));
    xm += x.back();
    ym += s.entropy;
  }
  xm /= n;
  ym /= n;

  double sxx = 0.0, sxy = 0.0, syy = 0.0, yscale = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double dx = x[i] - xm;
    const double dy = samples[i].entropy - ym;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
    yscale = std::max(yscale, std::abs(samples[i].entropy));
  }
  if (!(sxx > 0.0)) throw DegenerateAbscissa("fit_log_law: all abscissae coincide");

  ScalingFit fit;
  for (const auto& s : samples) fit.l_values.push_back(s.l);

  // Constant data to rounding: zero gradient, r^2 reported as 0 by convention.
  const double flat = 4.0 * std::numeric_limits<double>::epsilon() * std::max(yscale, 1e-300);
  if (syy <= n * flat * flat) {
    fit.g = 0.0;
    fit.intercept = ym;
    fit.r_squared = 0.0;
    return fit;
  }
  fit.g = sxy / sxx;
  fit.intercept = ym - fit.g * xm;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double r = samples[i].entropy - (fit.g * x[i] + fit.intercept);
    ss_res += r * r;
  }
  fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  return fit;
}

enum class EntanglementPhase { LogLaw, AreaLaw, Boundary };

inline const char* to_string(EntanglementPhase p) noexcept {
  switch (p) {
    case EntanglementPhase::LogLaw: return "log";
    case EntanglementPhase::AreaLaw: return "area";
    case EntanglementPhase::Boundary: return "boundary";
  }
  return "?";
}

inline constexpr double kDefaultGThreshold = 0.02;

inline EntanglementPhase classify_entanglement_phase(const ScalingFit& fit, double g_threshold = kDefaultGThreshold) {
  return std::abs(fit.g) < g_threshold ? EntanglementPhase::AreaLaw : EntanglementPhase::LogLaw;
}

struct EntanglementOptions {
  double T = 2000.0;
  double steady_tol = 1e-6;
  double g_threshold = kDefaultGThreshold;
  double gap_tol = 1e-8;
  int gap_grid = 256;
  int workers = 1;
};

struct EntanglementPhaseCell {
  double u = 0.0;
  double v = 0.0;
  double g = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double r_squared = std::numeric_limits<double>::quiet_NaN();
  EntanglementPhase phase = EntanglementPhase::Boundary;
  bool converged = false;  // every l reached |S(T) - S(T/2)| < steady_tol
  bool ok = true;
  std::string message;
};

/// Steady-state fit and classification at one (u, v). Cells where the PBC spectrum closes are
/// labelled Boundary; the fitted gradient is still reported for them.
inline EntanglementPhaseCell entanglement_cell(const ChainSpec& spec, int L, const std::vector<int>& l_values,
                                               const EntanglementOptions& opt) {
  EntanglementPhaseCell cell;
  cell.u = spec.chem_real();
  cell.v = spec.loss_rate();
  try {
    const auto profile = steady_state_profile(spec, L, l_values, opt.T, opt.steady_tol);
    std::vector<EntropySample> samples;
    cell.converged = true;
    for (std::size_t i = 0; i < l_values.size(); ++i) {
      samples.push_back({l_values[i], profile[i].entropy});
      cell.converged = cell.converged && profile[i].converged;
    }
    const auto fit = fit_log_law(samples, L);
    cell.g = fit.g;
    cell.intercept = fit.intercept;
    cell.r_squared = fit.r_squared;
    cell.phase = spectral_gap(spec, opt.gap_grid) < opt.gap_tol ? EntanglementPhase::Boundary
                                                                 : classify_entanglement_phase(fit, opt.g_threshold);
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.message = e.what();
  }
  return cell;
}

/// Kinks of g(v) along a loss-rate scan (v ascending).
///
/// Reported, sorted by v:
///  - transitions: each run of Boundary points (gap closes on the grid) at its mean v, and
///    each direct LogLaw/AreaLaw neighbour pair at its midpoint;
///  - inside each run of consecutive points not in the AreaLaw phase (g not pinned to zero),
///    jumps of the discrete derivative dg/dv whose magnitude exceeds 3x the median jump over
///    that run; consecutive flagged points form one kink located at the largest jump. A
///    candidate whose stencil [v_{i-1}, v_{i+1}] already contains a transition is dropped.
inline std::vector<double> detect_kinks(const std::vector<double>& v, const std::vector<double>& g,
                                        const std::vector<EntanglementPhase>& phase) {
  if (v.size() != g.size() || v.size() != phase.size())
    throw std::invalid_argument("detect_kinks: mismatched input lengths");
  using P = EntanglementPhase;
  const std::size_t n = v.size();
  std::vector<double> transitions;

  for (std::size_t i = 0; i < n;) {
    if (phase[i] != P::Boundary) {
      if (i + 1 < n && phase[i + 1] != P::Boundary && phase[i + 1] != phase[i])
        transitions.push_back(0.5 * (v[i] + v[i + 1]));
      ++i;
      continue;
    }
    std::size_t j = i;
    double sum = 0.0;
    while (j < n && phase[j] == P::Boundary) sum += v[j++];
    transitions.push_back(sum / static_cast<double>(j - i));
    i = j;
  }

  std::vector<double> kinks = transitions;
  auto free_run = [&](std::size_t i) { return phase[i] != P::AreaLaw && std::isfinite(g[i]); };
  std::size_t start = 0;
  while (start < n) {
    if (!free_run(start)) {
      ++start;
      continue;
    }
    std::size_t stop = start;
    while (stop + 1 < n && free_run(stop + 1)) ++stop;

    if (stop - start + 1 >= 5) {
      std::vector<double> jump;  // jump[i] sits at point start + 1 + i
      for (std::size_t i = start + 1; i < stop; ++i) {
        const double left = (g[i] - g[i - 1]) / (v[i] - v[i - 1]);
        const double right = (g[i + 1] - g[i]) / (v[i + 1] - v[i]);
        jump.push_back(std::abs(right - left));
      }
      auto sorted = jump;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t m = sorted.size();
      const double median = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
      const double threshold = std::max(3.0 * median, 1e-6);
      for (std::size_t i = 0; i < jump.size();) {
        if (!(jump[i] > threshold)) {
          ++i;
          continue;
        }
        std::size_t best = i, j = i;
        while (j < jump.size() && jump[j] > threshold) {
          if (jump[j] > jump[best]) best = j;
          ++j;
        }
        const std::size_t at = start + 1 + best;
        const bool covered = std::any_of(transitions.begin(), transitions.end(),
                                         [&](double t) { return t >= v[at - 1] && t <= v[at + 1]; });
        if (!covered) kinks.push_back(v[at]);
        i = j;
      }
    }
    start = stop + 1;
  }
  std::sort(kinks.begin(), kinks.end());
  return kinks;
}

struct LossScan {
  double u = 0.0;
  std::vector<EntanglementPhaseCell> points;  // one per v, in input order
  std::vector<double> kinks;
};

inline void require_lossy(const std::vector<double>& v_values, const char* who) {
  for (double v : v_values)
    if (!(v > 0.0))
      throw std::invalid_argument(std::string(who) + ": loss rates must be strictly positive (v = 0 has no "
                                                     "loss-induced steady state)");
}

inline LossScan scan_g_vs_loss(const ChainSpec& spec_template, double u, const std::vector<double>& v_values, int L,
                               const std::vector<int>& l_values, const EntanglementOptions& opt = {}) {
  require_lossy(v_values, "scan_g_vs_loss");
  LossScan out;
  out.u = u;
  out.points.resize(v_values.size());
  parallel_for(v_values.size(), opt.workers, [&](std::size_t i) {
    out.points[i] = entanglement_cell(spec_template.with_chemical(u, v_values[i]), L, l_values, opt);
  });

  std::vector<double> vs, gs;
  std::vector<EntanglementPhase> ps;
  for (const auto& p : out.points) {
    if (!p.ok) continue;
    vs.push_back(p.v);
    gs.push_back(p.g);
    ps.push_back(p.phase);
  }
  out.kinks = detect_kinks(vs, gs, ps);
  return out;
}

struct EntanglementDiagram {
  std::vector<double> u_grid;
  std::vector<double> v_grid;
  std::vector<EntanglementPhaseCell> cells;  // row-major over (u, v)

  const EntanglementPhaseCell& at(std::size_t iu, std::size_t iv) const { return cells[iu * v_grid.size() + iv]; }
};

inline EntanglementDiagram entanglement_phase_diagram(const ChainSpec& spec_template, const std::vector<double>& u_grid,
                                                      const std::vector<double>& v_grid, int L,
                                                      const std::vector<int>& l_values,
                                                      const EntanglementOptions& opt = {}) {
  require_lossy(v_grid, "entanglement_phase_diagram");
  EntanglementDiagram out{u_grid, v_grid, std::vector<EntanglementPhaseCell>(u_grid.size() * v_grid.size())};
  parallel_for(out.cells.size(), opt.workers, [&](std::size_t idx) {
    const double u = u_grid[idx / v_grid.size()];
    const double v = v_grid[idx % v_grid.size()];
    out.cells[idx] = entanglement_cell(spec_template.with_chemical(u, v), L, l_values, opt);
  });
  return out;
}

}  // namespace lkc
