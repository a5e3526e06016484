#pragma once

#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lkc/chain_spec.hpp"
#include "lkc/errors.hpp"
#include "lkc/model.hpp"
#include "lkc/parallel.hpp"

namespace lkc {

/// w = (n_plus - n_minus) / 2, where n_pm are the windings of q_pm(k) = h_z(k) pm i h_y(k)
/// around the origin as k runs once through the Brillouin zone.
struct WindingResult {
  double w = 0.0;
  int n_plus = 0;
  int n_minus = 0;
  int grid_points = 0;
  double min_gap = 0.0;  // min_k |q_+(k)| |q_-(k)| = min_k |E(k)|^2
};

struct WindingOptions {
  int initial_grid = 256;
  double gap_tol = 1e-8;
  int max_grid = 1 << 22;
};

namespace detail {

inline cplx factor(const BlochVector& b, int sign) noexcept {
  return b.h_z + cplx(0.0, static_cast<double>(sign)) * b.h_y;
}

/// Winding of q_sign over an N-point grid, or nullopt when some argument increment is not
/// resolved (|d arg| >= pi/2 between neighbours).
inline std::optional<int> factor_winding(const ChainSpec& spec, int sign, int N) {
  const double step = 2.0 * std::numbers::pi / N;
  cplx first = factor(bloch_field(spec, -std::numbers::pi), sign);
  cplx prev = first;
  double total = 0.0;
  for (int j = 1; j <= N; ++j) {
    const cplx cur = j == N ? first : factor(bloch_field(spec, -std::numbers::pi + step * j), sign);
    const double d = std::arg(cur * std::conj(prev));
    if (!(std::abs(d) < 0.5 * std::numbers::pi)) return std::nullopt;
    total += d;
    prev = cur;
  }
  const double turns = total / (2.0 * std::numbers::pi);
  const double rounded = std::round(turns);
  if (std::abs(turns - rounded) > 1e-6) return std::nullopt;
  return static_cast<int>(rounded);
}

}  // namespace detail

/// Minimum over the Brillouin zone of |E(k)|^2 = |q_+(k)| |q_-(k)|, evaluated on an N-point grid
/// and refined around each local grid minimum by solving d|E^2|^2/dk = 0 on the bracketing interval.
inline double spectral_gap(const ChainSpec& spec, int N = 256) {
  const double step = 2.0 * std::numbers::pi / N;
  auto gap_at = [&](double k) { return std::abs(energy_squared(bloch_field(spec, k))); };
  auto slope = [&](double k) {
    const auto b = bloch_field(spec, k);
    const auto [dhy, dhz] = bloch_field_derivative(spec, k);
    return std::real(std::conj(energy_squared(b)) * (b.h_y * dhy + b.h_z * dhz));
  };
  std::vector<double> mag(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) mag[static_cast<std::size_t>(j)] = gap_at(-std::numbers::pi + step * j);

  double gap = std::numeric_limits<double>::infinity();
  for (int j = 0; j < N; ++j) {
    const double here = mag[static_cast<std::size_t>(j)];
    gap = std::min(gap, here);
    if (here > mag[static_cast<std::size_t>((j + N - 1) % N)] || here > mag[static_cast<std::size_t>((j + 1) % N)])
      continue;
    const double a = -std::numbers::pi + step * (j - 1);
    const double b = -std::numbers::pi + step * (j + 1);
    const double fa = slope(a);
    const double fb = slope(b);
    if (!(fa < 0.0 && fb > 0.0)) continue;
    std::uintmax_t iters = 200;
    const auto root = boost::math::tools::toms748_solve(slope, a, b, fa, fb,
                                                        boost::math::tools::eps_tolerance<double>(52), iters);
    gap = std::min({gap, gap_at(root.first), gap_at(root.second)});
  }
  return gap;
}

inline WindingResult winding_number(const ChainSpec& spec, const WindingOptions& opt = {}) {
  if (opt.initial_grid < 2) throw std::invalid_argument("winding_number: initial grid too small");
  WindingResult res;
  res.min_gap = spectral_gap(spec, opt.initial_grid);
  if (res.min_gap < opt.gap_tol)
    throw GaplessError("winding_number: spectrum is gapless (min |E|^2 = " + std::to_string(res.min_gap) + ")",
                       res.min_gap);

  // Accept once the factor windings agree on N, 2N and 4N.
  std::vector<std::pair<int, int>> history;
  for (long long n = opt.initial_grid; n <= opt.max_grid; n *= 2) {
    const int N = static_cast<int>(n);
    const auto plus = detail::factor_winding(spec, +1, N);
    const auto minus = detail::factor_winding(spec, -1, N);
    if (!plus || !minus) {
      history.clear();
      continue;
    }
    if (!history.empty() && history.back() != std::pair{*plus, *minus}) history.clear();
    history.emplace_back(*plus, *minus);
    if (history.size() == 3) {
      res.n_plus = *plus;
      res.n_minus = *minus;
      res.w = 0.5 * (res.n_plus - res.n_minus);
      res.grid_points = N;
      return res;
    }
  }
  throw NonConvergence("winding_number: factor windings did not stabilise below 2^22 grid points");
}

inline WindingResult winding_number(const ChainSpec& spec, int initial_grid) {
  WindingOptions opt;
  opt.initial_grid = initial_grid;
  return winding_number(spec, opt);
}

enum class ModelTag { NN, NNN };

struct PhaseBoundaries {
  ModelTag model = ModelTag::NN;
  double u = 0.0;
  std::vector<double> critical_rates;  // ascending, strictly positive

  double v_min() const { return critical_rates.empty() ? 0.0 : critical_rates.front(); }
  double v_max() const { return critical_rates.empty() ? 0.0 : critical_rates.back(); }
};

/// Loss rate at which the nearest-neighbour chain closes its gap: u^2/J^2 + v^2/Delta^2 = 1.
inline PhaseBoundaries nn_critical_loss(double hop, double pair, double u) {
  if (hop == 0.0 || pair == 0.0)
    throw std::invalid_argument("nn_critical_loss: J and Delta must be non-zero");
  PhaseBoundaries out{ModelTag::NN, u, {}};
  const double ratio = u / hop;
  if (std::abs(ratio) < 1.0) out.critical_rates.push_back(std::abs(pair) * std::sqrt(1.0 - ratio * ratio));
  return out;
}

/// Second-neighbour chain: the bands can only touch at cos k0 = [-J1 pm sqrt(J1^2 + 8 J2 (J2 - u))]/(4 J2),
/// and the touching happens at v = |sin k0 (Delta1 + 2 Delta2 cos k0)| = |h_y(k0)|.
inline PhaseBoundaries nnn_boundaries(double hop1, double hop2, double pair1, double pair2, double u) {
  if (hop2 == 0.0) throw std::invalid_argument("nnn_boundaries: J2 must be non-zero");
  PhaseBoundaries out{ModelTag::NNN, u, {}};
  const double disc = hop1 * hop1 + 8.0 * hop2 * (hop2 - u);
  if (disc < 0.0) return out;
  const double root = std::sqrt(disc);
  for (double s : {+1.0, -1.0}) {
    const double c = (-hop1 + s * root) / (4.0 * hop2);
    if (c < -1.0 || c > 1.0) continue;
    const double k0 = std::acos(c);
    const double v = std::abs(std::sin(k0) * (pair1 + 2.0 * pair2 * c));
    if (v > 0.0) out.critical_rates.push_back(v);
  }
  std::sort(out.critical_rates.begin(), out.critical_rates.end());
  out.critical_rates.erase(std::unique(out.critical_rates.begin(), out.critical_rates.end(),
                                       [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(1.0, b); }),
                           out.critical_rates.end());
  return out;
}

enum class CellStatus { Ok, Gapless, NonConvergence };

inline const char* to_string(CellStatus s) noexcept {
  switch (s) {
    case CellStatus::Ok: return "ok";
    case CellStatus::Gapless: return "gapless";
    case CellStatus::NonConvergence: return "non_convergence";
  }
  return "?";
}

struct TopoCell {
  double u = 0.0;
  double v = 0.0;
  CellStatus status = CellStatus::Ok;
  double w = std::numeric_limits<double>::quiet_NaN();
  double min_gap = 0.0;
  std::string message;
};

/// Row-major over (u, v): cell (i, j) sits at index i * v_grid.size() + j.
struct TopoDiagram {
  std::vector<double> u_grid;
  std::vector<double> v_grid;
  std::vector<TopoCell> cells;

  const TopoCell& at(std::size_t iu, std::size_t iv) const { return cells[iu * v_grid.size() + iv]; }
};

inline TopoCell topo_cell(const ChainSpec& spec, const WindingOptions& opt) {
  TopoCell cell{spec.chem_real(), spec.loss_rate()};
  try {
    const auto r = winding_number(spec, opt);
    cell.w = r.w;
    cell.min_gap = r.min_gap;
  } catch (const GaplessError& e) {
    cell.status = CellStatus::Gapless;
    cell.min_gap = e.min_gap();
  } catch (const NonConvergence& e) {
    cell.status = CellStatus::NonConvergence;
    cell.min_gap = spectral_gap(spec, opt.initial_grid);
    cell.message = e.what();
  }
  return cell;
}

/// Winding number over a (u, v) grid. Gapless cells are reported as boundary markers and
/// non-converged cells are recorded without aborting the sweep.
inline TopoDiagram topological_phase_diagram(const ChainSpec& spec_template, const std::vector<double>& u_grid,
                                             const std::vector<double>& v_grid, const WindingOptions& opt = {},
                                             int workers = 1) {
  TopoDiagram out{u_grid, v_grid, std::vector<TopoCell>(u_grid.size() * v_grid.size())};
  parallel_for(out.cells.size(), workers, [&](std::size_t idx) {
    const double u = u_grid[idx / v_grid.size()];
    const double v = v_grid[idx % v_grid.size()];
    out.cells[idx] = topo_cell(spec_template.with_chemical(u, v), opt);
  });
  return out;
}

}  // namespace lkc
