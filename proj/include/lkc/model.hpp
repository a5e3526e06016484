#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstddef>
#include <iostream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "lkc/chain_spec.hpp"

namespace lkc {

enum class Boundary { Periodic, Open };

inline const char* to_string(Boundary b) noexcept { return b == Boundary::Periodic ? "PBC" : "OBC"; }

/// Components of H(k) = h_y sigma_y + h_z sigma_z at one quasimomentum.
struct BlochVector {
  double k = 0.0;
  cplx h_y;
  cplx h_z;
};

/// k_j = -pi + 2 pi j / L, j = 0..L-1.
inline double grid_momentum(int j, int L) noexcept {
  return -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(L);
}

inline std::vector<double> momentum_grid(int L) {
  if (L < 1) throw std::invalid_argument("momentum_grid: L must be positive");
  std::vector<double> ks(static_cast<std::size_t>(L));
  for (int j = 0; j < L; ++j) ks[static_cast<std::size_t>(j)] = grid_momentum(j, L);
  return ks;
}

inline BlochVector bloch_field(const ChainSpec& spec, double k) noexcept {
  double hy = 0.0;
  double hz_couplings = 0.0;
  for (const auto& c : spec.couplings()) {
    hy += c.pair * std::sin(k * c.range);
    hz_couplings += c.hop * std::cos(k * c.range);
  }
  return {k, cplx(hy, 0.0), spec.mu() + hz_couplings};
}

/// d/dk of (h_y, h_z); both derivatives are real.
inline std::pair<double, double> bloch_field_derivative(const ChainSpec& spec, double k) noexcept {
  double dhy = 0.0;
  double dhz = 0.0;
  for (const auto& c : spec.couplings()) {
    dhy += c.pair * c.range * std::cos(k * c.range);
    dhz -= c.hop * c.range * std::sin(k * c.range);
  }
  return {dhy, dhz};
}

/// h_y^2 + h_z^2 with a signed-zero imaginary part mapped to +0, so that a negative real
/// square lands on the upper side of the principal-branch cut (sqrt(-1) = +i).
inline cplx energy_squared(const BlochVector& b) noexcept {
  cplx e2 = b.h_y * b.h_y + b.h_z * b.h_z;
  if (e2.imag() == 0.0) e2 = cplx(e2.real(), 0.0);
  return e2;
}

/// Principal square root of h_y^2 + h_z^2. Every consumer is invariant under E -> -E.
inline cplx band_energy(const ChainSpec& spec, double k) noexcept {
  return std::sqrt(energy_squared(bloch_field(spec, k)));
}

inline Eigen::Matrix2cd bloch_hamiltonian(const BlochVector& b) {
  const cplx i(0.0, 1.0);
  Eigen::Matrix2cd h;
  h << b.h_z, -i * b.h_y,
       i * b.h_y, -b.h_z;
  return h;
}

inline Eigen::Matrix2cd bloch_hamiltonian(const ChainSpec& spec, double k) {
  return bloch_hamiltonian(bloch_field(spec, k));
}

/// Two-orbital real-space single-particle matrix, 2L x 2L, site-major ordering
/// (row 2n + a is orbital a of site n).
///
/// Diagonal block mu sigma_z; the block coupling site n to n + r is (J sigma_z - i Delta sigma_y)/2
/// and its partner from n + r back to n is (J sigma_z + i Delta sigma_y)/2. The complex mu is not
/// conjugated, so the Fourier transform of the blocks is exactly H(k).
inline Eigen::MatrixXcd real_space_matrix(const ChainSpec& spec, int L, Boundary boundary) {
  if (L <= 2 * spec.max_range())
    throw std::invalid_argument("real_space_matrix: L = " + std::to_string(L) +
                                " must exceed twice the maximum coupling range");
  const cplx i(0.0, 1.0);
  const Eigen::Matrix2cd sz = (Eigen::Matrix2cd() << 1, 0, 0, -1).finished();
  const Eigen::Matrix2cd sy = (Eigen::Matrix2cd() << 0, -i, i, 0).finished();

  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2 * L, 2 * L);
  for (int n = 0; n < L; ++n) m.block<2, 2>(2 * n, 2 * n) = spec.mu() * sz;

  for (const auto& c : spec.couplings()) {
    const Eigen::Matrix2cd forward = 0.5 * (c.hop * sz - i * c.pair * sy);
    const Eigen::Matrix2cd backward = 0.5 * (c.hop * sz + i * c.pair * sy);
    for (int n = 0; n < L; ++n) {
      int partner = n + c.range;
      if (partner >= L) {
        if (boundary == Boundary::Open) continue;
        partner -= L;
      }
      m.block<2, 2>(2 * n, 2 * partner) += forward;
      m.block<2, 2>(2 * partner, 2 * n) += backward;
    }
  }
  return m;
}

struct ZeroMode {
  std::size_t index = 0;   // position in ComplexSpectrum::eigenvalues
  double edge_weight = 0;  // eigenvector weight on the outer sites, in [0, 1]
};

struct ComplexSpectrum {
  Boundary boundary = Boundary::Open;
  std::vector<cplx> eigenvalues;
  std::vector<double> edge_weights;  // one per eigenvalue
  std::vector<ZeroMode> zero_modes;
  double max_residual = 0.0;
};

struct SpectrumOptions {
  double zero_tol = 1e-4;
  /// Fraction of the chain counted as "edge", split evenly between both ends.
  double edge_fraction = 0.1;
  double edge_weight_min = 0.5;
  double residual_warn = 1e-8;
};

/// Dense complex eigen-decomposition of the real-space matrix with zero-mode detection.
inline ComplexSpectrum complex_spectrum(const ChainSpec& spec, int L, Boundary boundary,
                                        const SpectrumOptions& opt = {}) {
  const Eigen::MatrixXcd m = real_space_matrix(spec, L, boundary);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(m, /*computeEigenvectors=*/true);
  if (solver.info() != Eigen::Success) throw std::runtime_error("complex_spectrum: eigen-solver failed");

  const auto& vals = solver.eigenvalues();
  const auto& vecs = solver.eigenvectors();
  const int edge_sites = std::max(1, static_cast<int>(std::lround(0.5 * opt.edge_fraction * L)));

  ComplexSpectrum out;
  out.boundary = boundary;
  out.eigenvalues.assign(vals.data(), vals.data() + vals.size());
  out.edge_weights.resize(out.eigenvalues.size());
  for (Eigen::Index c = 0; c < vals.size(); ++c) {
    const auto v = vecs.col(c);
    const double total = v.squaredNorm();
    double edge = 0.0;
    for (int n = 0; n < L; ++n)
      if (n < edge_sites || n >= L - edge_sites) edge += v.segment<2>(2 * n).squaredNorm();
    out.edge_weights[static_cast<std::size_t>(c)] = total > 0.0 ? edge / total : 0.0;

    const double residual = (m * v - vals(c) * v).norm() / std::max(1e-300, std::sqrt(total));
    out.max_residual = std::max(out.max_residual, residual);

    if (std::abs(vals(c)) < opt.zero_tol && out.edge_weights[static_cast<std::size_t>(c)] > opt.edge_weight_min)
      out.zero_modes.push_back({static_cast<std::size_t>(c), out.edge_weights[static_cast<std::size_t>(c)]});
  }
  if (out.max_residual > opt.residual_warn)
    std::cerr << "warning: complex_spectrum residual " << out.max_residual << " exceeds "
              << opt.residual_warn << '\n';
  return out;
}

inline ComplexSpectrum obc_spectrum(const ChainSpec& spec, int L, double zero_tol = 1e-4) {
  SpectrumOptions opt;
  opt.zero_tol = zero_tol;
  return complex_spectrum(spec, L, Boundary::Open, opt);
}

}  // namespace lkc
