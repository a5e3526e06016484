#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "lkc/chain_spec.hpp"
#include "lkc/errors.hpp"
#include "lkc/model.hpp"

namespace lkc {

/// Normalized two-component state of one momentum mode.
struct ModeState {
  double k = 0.0;
  Eigen::Vector2cd amplitudes = Eigen::Vector2cd::Zero();
  double time = 0.0;
};

using InitialState = std::function<ModeState(double k)>;

/// (1, e^{ik/2}) / sqrt(2). The phase is taken literally at the given k, so the state is
/// not 2 pi periodic in k; it is only ever evaluated on the fixed momentum grid.
inline ModeState default_initial_state(double k) {
  ModeState s;
  s.k = k;
  s.amplitudes << cplx(std::numbers::sqrt2 / 2.0, 0.0), std::polar(std::numbers::sqrt2 / 2.0, 0.5 * k);
  return s;
}

/// e^{-iH(k)t} x represented as vector * exp(log_scale).
struct ScaledVector {
  Eigen::Vector2cd vector;
  double log_scale = 0.0;

  double norm() const { return vector.norm() * std::exp(log_scale); }
};

/// Rescaled cos(E t) and t sinc(E t), both multiplied by exp(-|Im E| t) so that neither exceeds
/// O(1) in magnitude (up to the polynomial growth t at an exceptional point).
struct ScaledTrig {
  cplx cos_part;
  cplx t_sinc_part;
  double log_scale = 0.0;
};

inline ScaledTrig scaled_trig(cplx energy, double t) noexcept {
  const cplx x = energy * t;
  const double damp = std::abs(x.imag());
  ScaledTrig out;
  out.log_scale = damp;
  if (std::abs(x) < 1e-4) {
    const cplx x2 = x * x;
    const double s = std::exp(-damp);
    out.cos_part = s * (1.0 - x2 / 2.0 + x2 * x2 / 24.0 - x2 * x2 * x2 / 720.0);
    out.t_sinc_part = s * t * (1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0);
    return out;
  }
  // e^{ix} and e^{-ix} with the common factor e^{|Im x|} removed from both.
  const cplx ep = std::exp(cplx(-x.imag() - damp, x.real()));
  const cplx em = std::exp(cplx(x.imag() - damp, -x.real()));
  out.cos_part = 0.5 * (ep + em);
  out.t_sinc_part = (ep - em) / (cplx(0.0, 2.0) * energy);
  return out;
}

/// e^{-iH(k)t} = cos(Et) I - i t sinc(Et) H(k), valid because H(k)^2 = E^2 I.
inline ScaledVector propagate_mode(const ChainSpec& spec, double k, const Eigen::Vector2cd& amplitudes, double t) {
  const auto field = bloch_field(spec, k);
  const cplx energy = std::sqrt(energy_squared(field));
  const auto trig = scaled_trig(energy, t);
  const Eigen::Matrix2cd h = bloch_hamiltonian(field);
  ScaledVector out;
  out.vector = trig.cos_part * amplitudes - cplx(0.0, 1.0) * trig.t_sinc_part * (h * amplitudes);
  out.log_scale = trig.log_scale;
  return out;
}

inline ModeState evolve_mode(const ChainSpec& spec, const ModeState& state, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("evolve_mode: t must be non-negative");
  const auto raw = propagate_mode(spec, state.k, state.amplitudes, t);
  const double n = raw.vector.norm();
  if (!(n >= 1e-300)) throw DegenerateState("evolve_mode: evolved mode vanished before normalization");
  return {state.k, raw.vector / n, state.time + t};
}

/// Pure-state projector of one mode, laid out as
/// 1/2 [[1 + <sz>, <sx> + i<sy>], [<sx> - i<sy>, 1 - <sz>]].
struct CorrelationGenerator {
  double k = 0.0;
  Eigen::Matrix2cd entries = Eigen::Matrix2cd::Zero();
};

inline CorrelationGenerator correlation_generator(const ModeState& state) {
  const cplx a = state.amplitudes(0);
  const cplx b = state.amplitudes(1);
  const double sz = std::norm(a) - std::norm(b);
  const cplx ab = std::conj(a) * b;
  const double sx = 2.0 * ab.real();
  const double sy = 2.0 * ab.imag();
  CorrelationGenerator g;
  g.k = state.k;
  g.entries << 0.5 * (1.0 + sz), 0.5 * cplx(sx, sy),
               0.5 * cplx(sx, -sy), 0.5 * (1.0 - sz);
  return g;
}

namespace detail {

/// Pairwise summation in index order; the reduction tree depends only on the length.
inline cplx pairwise_sum(std::span<const cplx> xs) noexcept {
  if (xs.size() <= 8) {
    cplx s = 0.0;
    for (const auto& x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

}  // namespace detail

/// Real-space correlation matrix of a translation-invariant two-orbital chain.
///
/// Stored either as L separation blocks (block(m, n) = blocks[(m - n) mod L]) or, for the
/// dense oracle path, as an explicit 2L x 2L matrix.
class Correlator {
 public:
  static Correlator from_blocks(std::vector<Eigen::Matrix2cd> blocks) {
    Correlator c;
    c.sites_ = static_cast<int>(blocks.size());
    c.blocks_ = std::move(blocks);
    return c;
  }

  static Correlator from_dense(Eigen::MatrixXcd matrix) {
    if (matrix.rows() != matrix.cols() || matrix.rows() % 2 != 0)
      throw std::invalid_argument("Correlator: dense matrix must be 2L x 2L");
    Correlator c;
    c.sites_ = static_cast<int>(matrix.rows() / 2);
    c.dense_ = std::move(matrix);
    return c;
  }

  int sites() const noexcept { return sites_; }
  bool block_toeplitz() const noexcept { return !blocks_.empty(); }
  const std::vector<Eigen::Matrix2cd>& separation_blocks() const noexcept { return blocks_; }

  Eigen::Matrix2cd block(int m, int n) const {
    if (block_toeplitz()) return blocks_[static_cast<std::size_t>(((m - n) % sites_ + sites_) % sites_)];
    return dense_.block<2, 2>(2 * m, 2 * n);
  }

  /// Restriction to sites 0..l-1, both orbitals: a 2l x 2l matrix.
  Eigen::MatrixXcd principal_block(int l) const {
    if (l < 1 || l > sites_) throw std::invalid_argument("Correlator: subsystem size out of range");
    if (!block_toeplitz()) return dense_.topLeftCorner(2 * l, 2 * l);
    Eigen::MatrixXcd out(2 * l, 2 * l);
    for (int m = 0; m < l; ++m)
      for (int n = 0; n < l; ++n) out.block<2, 2>(2 * m, 2 * n) = block(m, n);
    return out;
  }

  Eigen::MatrixXcd assembled() const { return principal_block(sites_); }

 private:
  int sites_ = 0;
  std::vector<Eigen::Matrix2cd> blocks_;
  Eigen::MatrixXcd dense_;
};

/// Per-mode generators C_k(t) for every k on the grid.
inline std::vector<CorrelationGenerator> mode_generators(const ChainSpec& spec, int L, double t,
                                                         const InitialState& initial = default_initial_state) {
  std::vector<CorrelationGenerator> out;
  out.reserve(static_cast<std::size_t>(L));
  for (int j = 0; j < L; ++j) {
    const double k = grid_momentum(j, L);
    out.push_back(correlation_generator(evolve_mode(spec, initial(k), t)));
  }
  return out;
}

/// C_{m,n}(t) = (1/L) sum_k e^{ik(m-n)} C_k(t) from normalized per-mode evolution.
inline Correlator assemble_correlator(const ChainSpec& spec, int L, double t,
                                      const InitialState& initial = default_initial_state) {
  if (L < 2 || L % 2 != 0) throw std::invalid_argument("assemble_correlator: L must be even and positive");
  if (!(t >= 0.0)) throw std::invalid_argument("assemble_correlator: t must be non-negative");

  const auto gens = mode_generators(spec, L, t, initial);

  // e^{i k_j d} = (-1)^d w^{jd mod L} with w = e^{2 pi i / L}.
  std::vector<cplx> roots(static_cast<std::size_t>(L));
  for (int m = 0; m < L; ++m) roots[static_cast<std::size_t>(m)] = std::polar(1.0, 2.0 * std::numbers::pi * m / L);

  std::vector<Eigen::Matrix2cd> blocks(static_cast<std::size_t>(L));
  std::vector<cplx> terms(static_cast<std::size_t>(L));
  for (int d = 0; d <= L / 2; ++d) {
    const double sign = d % 2 == 0 ? 1.0 : -1.0;
    Eigen::Matrix2cd blk;
    for (int e = 0; e < 4; ++e) {
      for (int j = 0; j < L; ++j) {
        const auto p = static_cast<std::size_t>((static_cast<long long>(j) * d) % L);
        terms[static_cast<std::size_t>(j)] = roots[p] * gens[static_cast<std::size_t>(j)].entries(e / 2, e % 2);
      }
      blk(e / 2, e % 2) = sign * detail::pairwise_sum(terms) / static_cast<double>(L);
    }
    blocks[static_cast<std::size_t>(d)] = blk;
    if (d != 0 && 2 * d != L) blocks[static_cast<std::size_t>(L - d)] = blk.adjoint();
  }
  return Correlator::from_blocks(std::move(blocks));
}

/// Independent dense construction of the same correlator, for L <= 16.
///
/// Embeds the occupied mode of each grid momentum in real space, evolves the occupied
/// columns with the dense exponential of the real-space matrix, re-orthonormalizes after
/// every step, and forms P = Phi Phi^dagger. Block (m, n) of the result is the orbital
/// transpose of P's block, which is the index layout produced by assemble_correlator.
inline Correlator real_space_oracle(const ChainSpec& spec, int L, double t,
                                    const InitialState& initial = default_initial_state) {
  if (L > 16) throw std::invalid_argument("real_space_oracle: dense path limited to L <= 16");
  if (L < 2 || L % 2 != 0) throw std::invalid_argument("real_space_oracle: L must be even and positive");
  const Eigen::MatrixXcd m = real_space_matrix(spec, L, Boundary::Periodic);

  Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(2 * L, L);
  for (int j = 0; j < L; ++j) {
    const double k = grid_momentum(j, L);
    const auto psi = initial(k).amplitudes;
    for (int n = 0; n < L; ++n)
      phi.block<2, 1>(2 * n, j) = std::polar(1.0 / std::sqrt(static_cast<double>(L)), k * n) * psi;
  }

  auto orthonormalize = [L](const Eigen::MatrixXcd& a) {
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
    return Eigen::MatrixXcd(qr.householderQ() * Eigen::MatrixXcd::Identity(2 * L, L));
  };

  const int steps = std::max(1, static_cast<int>(std::ceil(t / 0.5)));
  const double dt = t / steps;
  const Eigen::MatrixXcd step = (cplx(0.0, -dt) * m).exp();
  for (int s = 0; s < steps; ++s) phi = orthonormalize(step * phi);

  const Eigen::MatrixXcd p = phi * phi.adjoint();
  Eigen::MatrixXcd out(2 * L, 2 * L);
  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b) out.block<2, 2>(2 * a, 2 * b) = p.block<2, 2>(2 * a, 2 * b).transpose();
  return Correlator::from_dense(std::move(out));
}

}  // namespace lkc
