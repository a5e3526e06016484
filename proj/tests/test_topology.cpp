#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lkc/topology.hpp"
#include "test_support.hpp"

using namespace lkc;

namespace {

ChainSpec nn(double u, double v) { return ChainSpec::nearest_neighbour(1.0, 1.0, u, v); }
ChainSpec nnn(double u, double v) { return ChainSpec::next_nearest_neighbour(1.0, 1.0, 1.5, 1.5, u, v); }

// Closed-form critical loss rates at u = 1 for J1 = Delta1 = 1, J2 = Delta2 = 1.5, cross-checked
// against a brute-force scan of min_k |E(k)|^2 over v (0.654 and 1.753 on a 1e-3 v-grid).
constexpr double kNnnLower = 0.6535475074298003;
constexpr double kNnnUpper = 1.752961966367866;

}  // namespace

TEST(Winding, NearestNeighbourTopological) {
  const auto r = winding_number(nn(0.8, 0.1), 256);
  EXPECT_EQ(r.w, 1.0);
  EXPECT_EQ(r.w, 0.5 * (r.n_plus - r.n_minus));
  EXPECT_GT(r.min_gap, 1e-8);
  EXPECT_GE(r.grid_points, 256);
}

TEST(Winding, NoPairingNoWinding) {
  const ChainSpec spec({{1, 1.0, 0.0}, {2, 0.3, 0.0}}, 0.4, 0.7);
  EXPECT_EQ(winding_number(spec, 256).w, 0.0);
}

TEST(Winding, NextNearestNeighbourPhases) {
  EXPECT_EQ(winding_number(nnn(1.0, 0.1), 256).w, 2.0);
  EXPECT_EQ(winding_number(nnn(1.0, 1.1), 256).w, 1.0);
  EXPECT_EQ(winding_number(nnn(1.0, 2.5), 256).w, 0.0);
}

TEST(Winding, GaplessOnPhaseBoundary) {
  EXPECT_THROW(winding_number(nn(0.8, 0.6), 256), GaplessError);
  try {
    winding_number(nn(0.6, 0.8), 256);
    FAIL() << "expected GaplessError";
  } catch (const GaplessError& e) {
    EXPECT_LT(e.min_gap(), 1e-8);
  }
}

TEST(Winding, NonConvergenceWhenGridCapped) {
  WindingOptions opt;
  opt.initial_grid = 256;
  opt.max_grid = 512;  // only two grid levels available, three are needed
  EXPECT_THROW(winding_number(nn(0.8, 0.1), opt), NonConvergence);
}

TEST(Winding, RejectsTinyGrid) { EXPECT_THROW(winding_number(nn(0.8, 0.1), 1), std::invalid_argument); }

TEST(Winding, QuantizedAntisymmetricAndGridStable) {
  std::mt19937_64 rng(17);
  int gapped = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto spec = lkc::testing::random_spec(rng, 3);
    WindingResult r;
    try {
      r = winding_number(spec, 256);
    } catch (const GaplessError&) {
      continue;
    }
    ++gapped;
    EXPECT_LT(std::abs(2 * r.w - std::round(2 * r.w)), 1e-3);
    EXPECT_EQ(winding_number(spec.with_negated_pairing(), 256).w, -r.w);
    EXPECT_NEAR(winding_number(spec, 512).w, r.w, 1e-3);
    EXPECT_NEAR(winding_number(spec, 2 * r.grid_points).w, r.w, 1e-3);
  }
  EXPECT_GT(gapped, 40);
}

TEST(Winding, AnisotropicEllipse) {
  // q_pm = mu + 0.2 cos k pm i sin k: an ellipse centred at mu with semi-axes 0.2 and 1.
  EXPECT_EQ(winding_number(ChainSpec({{1, 0.2, 1.0}}, 0.5, 0.3), 256).w, 0.0);
  EXPECT_EQ(winding_number(ChainSpec({{1, 0.2, 1.0}}, 0.1, 0.3), 256).w, 1.0);
}

TEST(SpectralGap, MatchesBandEnergyMinimum) {
  const auto spec = nn(0.3, 0.4);
  double brute = 1e9;
  for (int j = 0; j < 200000; ++j) brute = std::min(brute, std::norm(band_energy(spec, grid_momentum(j, 200000))));
  EXPECT_NEAR(spectral_gap(spec), brute, 1e-8);
}

TEST(Boundaries, NearestNeighbour) {
  auto b = nn_critical_loss(1.0, 1.0, 0.8);
  ASSERT_EQ(b.critical_rates.size(), 1u);
  EXPECT_NEAR(b.critical_rates[0], 0.6, 1e-15);
  EXPECT_TRUE(nn_critical_loss(1.0, 1.0, 1.0).critical_rates.empty());
  b = nn_critical_loss(1.0, 2.0, 0.0);
  ASSERT_EQ(b.critical_rates.size(), 1u);
  EXPECT_EQ(b.critical_rates[0], 2.0);
  EXPECT_THROW(nn_critical_loss(0.0, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(nn_critical_loss(1.0, 0.0, 0.0), std::invalid_argument);
}

TEST(Boundaries, NextNearestNeighbour) {
  const auto b = nnn_boundaries(1.0, 1.5, 1.0, 1.5, 1.0);
  ASSERT_EQ(b.critical_rates.size(), 2u);
  EXPECT_NEAR(b.critical_rates[0], kNnnLower, 1e-12);
  EXPECT_NEAR(b.critical_rates[1], kNnnUpper, 1e-12);
  EXPECT_EQ(b.v_min(), b.critical_rates[0]);
  EXPECT_EQ(b.v_max(), b.critical_rates[1]);

  // The gap closes at each rate and is open just beside it.
  for (double v : b.critical_rates) {
    EXPECT_LT(spectral_gap(nnn(1.0, v)), 1e-8);
    EXPECT_GT(spectral_gap(nnn(1.0, v + 0.01)), 1e-6);
    EXPECT_GT(spectral_gap(nnn(1.0, v - 0.01)), 1e-6);
  }

  EXPECT_TRUE(nnn_boundaries(1.0, 1.5, 0.0, 0.0, 1.0).critical_rates.empty());
  // J1^2 + 8 J2 (J2 - u) < 0.
  EXPECT_TRUE(nnn_boundaries(1.0, 1.5, 1.0, 1.5, 10.0).critical_rates.empty());
  EXPECT_THROW(nnn_boundaries(1.0, 0.0, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST(Boundaries, WindingJumpsWhereFormulasSay) {
  const double step = 0.05;
  auto jumps = [&](const ChainSpec& tmpl, double u) {
    std::vector<double> out;
    double prev_w = std::nan("");
    double prev_v = 0.0;
    for (int i = 1; i * step <= 3.0 + 1e-12; ++i) {
      const double v = i * step;
      const auto cell = topo_cell(tmpl.with_chemical(u, v), {});
      if (cell.status != CellStatus::Ok) continue;
      if (!std::isnan(prev_w) && cell.w != prev_w) out.push_back(0.5 * (v + prev_v));
      prev_w = cell.w;
      prev_v = v;
    }
    return out;
  };

  for (double u : {-0.5, 0.2, 0.8}) {
    const auto j = jumps(nn(0.0, 0.1), u);
    const auto b = nn_critical_loss(1.0, 1.0, u);
    ASSERT_EQ(j.size(), b.critical_rates.size());
    for (std::size_t i = 0; i < j.size(); ++i) EXPECT_NEAR(j[i], b.critical_rates[i], step);
  }

  const auto j = jumps(nnn(0.0, 0.1), 1.0);
  ASSERT_EQ(j.size(), 2u);
  EXPECT_NEAR(j[0], kNnnLower, step);
  EXPECT_NEAR(j[1], kNnnUpper, step);
}

TEST(PhaseDiagram, SingleCells) {
  auto d = topological_phase_diagram(nn(0.0, 0.0), {0.8}, {0.1});
  ASSERT_EQ(d.cells.size(), 1u);
  EXPECT_EQ(d.cells[0].status, CellStatus::Ok);
  EXPECT_EQ(d.cells[0].w, 1.0);

  d = topological_phase_diagram(ChainSpec::nearest_neighbour(1.0, 0.0, 0.0, 0.0), {0.8}, {0.1});
  EXPECT_EQ(d.cells[0].w, 0.0);
}

TEST(PhaseDiagram, BoundaryCellsMarkedAndOrderIndependent) {
  std::vector<double> us, vs;
  for (int i = -10; i <= 10; ++i) us.push_back(std::round(i * 0.1 * 1e12) / 1e12);
  for (int i = 1; i <= 12; ++i) vs.push_back(std::round(i * 0.1 * 1e12) / 1e12);
  const auto serial = topological_phase_diagram(nn(0.0, 0.0), us, vs, {}, 1);
  const auto parallel = topological_phase_diagram(nn(0.0, 0.0), us, vs, {}, 4);
  ASSERT_EQ(serial.cells.size(), parallel.cells.size());
  for (std::size_t i = 0; i < serial.cells.size(); ++i) {
    EXPECT_EQ(serial.cells[i].status, parallel.cells[i].status);
    EXPECT_EQ(std::isnan(serial.cells[i].w), std::isnan(parallel.cells[i].w));
    if (!std::isnan(serial.cells[i].w)) EXPECT_EQ(serial.cells[i].w, parallel.cells[i].w);
    EXPECT_EQ(serial.cells[i].min_gap, parallel.cells[i].min_gap);
  }
  // (0.8, 0.6) and (0.6, 0.8) sit exactly on the circle.
  const auto& c = serial.at(18, 5);
  EXPECT_DOUBLE_EQ(c.u, 0.8);
  EXPECT_DOUBLE_EQ(c.v, 0.6);
  EXPECT_EQ(c.status, CellStatus::Gapless);
  EXPECT_EQ(serial.at(16, 7).status, CellStatus::Gapless);
}
