#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "lkc/entanglement.hpp"
#include "test_support.hpp"

using namespace lkc;
using lkc::testing::random_spec;

namespace {

ChainSpec nn(double u, double v) { return ChainSpec::nearest_neighbour(1.0, 1.0, u, v); }
ChainSpec nnn(double u, double v) { return ChainSpec::next_nearest_neighbour(1.0, 1.0, 1.5, 1.5, u, v); }

}  // namespace

TEST(EntropyFromSpectrum, Examples) {
  EXPECT_NEAR(entropy_from_spectrum(std::vector<double>{0.5}), std::numbers::ln2, 1e-15);
  EXPECT_NEAR(entropy_from_spectrum(std::vector<double>{0.5, 0.5, 0.5}), 3 * std::numbers::ln2, 1e-14);
  EXPECT_EQ(entropy_from_spectrum(std::vector<double>{}), 0.0);
  // Clamped endpoints contribute about 2.9e-11 each, never NaN.
  const double s = entropy_from_spectrum(std::vector<double>{0.0, 1.0, -1e-9, 1.0 + 1e-9});
  EXPECT_TRUE(std::isfinite(s));
  EXPECT_GT(s, 0.0);
  EXPECT_LT(s, 1e-9);
}

TEST(Entanglement, PureLossSteadyStateIsUnentangled) {
  const ChainSpec loss({{1, 0.0, 0.0}}, 0.0, 1.0);
  const auto c = assemble_correlator(loss, 16, 40.0);
  for (int l = 1; l < 16; ++l) EXPECT_LT(entanglement_entropy(c, l), 1e-9);
}

TEST(Entanglement, ReferenceValues) {
  // Independent reference computed with dense numerics.
  struct Case {
    ChainSpec spec;
    int L, l;
    double t, s;
  };
  const std::vector<Case> cases = {
      {nn(0.8, 0.1), 400, 100, 2000.0, 4.400610750689157},
      {nn(0.8, 0.1), 400, 100, 1000.0, 4.348360733101811},
      {nn(0.8, 1.0), 400, 100, 2000.0, 0.7616108586275847},
      {nnn(1.0, 0.1), 400, 100, 2000.0, 7.811414180105597},
      {nn(0.3, 0.4), 64, 8, 5.0, 2.5107275227672714},
      {nn(0.3, 0.4), 64, 16, 5.0, 2.5650698731403443},
      {nn(0.3, 0.4), 64, 32, 5.0, 2.5679664500856694},
  };
  for (const auto& c : cases)
    EXPECT_NEAR(entanglement_entropy(assemble_correlator(c.spec, c.L, c.t), c.l), c.s, 1e-8)
        << "u " << c.spec.chem_real() << " v " << c.spec.loss_rate() << " l " << c.l << " t " << c.t;
}

TEST(Entanglement, BoundsAndComplementSymmetry) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto spec = random_spec(rng, 2);
    const int L = 32;
    const auto c = assemble_correlator(spec, L, 30.0);
    for (int l = 1; l < L; ++l) {
      const double s = entanglement_entropy(c, l);
      EXPECT_GE(s, 0.0);
      EXPECT_LE(s, 2 * l * std::numbers::ln2 + 1e-12);
      EXPECT_NEAR(s, entanglement_entropy(c, L - l), 1e-8) << "trial " << trial << " l " << l;
    }
  }
}

TEST(Entanglement, AgreesWithRealSpaceOracle) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const auto spec = random_spec(rng, 2);
    const auto fast = assemble_correlator(spec, 12, 4.0);
    const auto slow = real_space_oracle(spec, 12, 4.0);
    for (int l = 1; l < 12; ++l) EXPECT_NEAR(entanglement_entropy(fast, l), entanglement_entropy(slow, l), 1e-8);
  }
}

TEST(Entanglement, RejectsBadInput) {
  const auto c = assemble_correlator(nn(0.8, 0.1), 16, 1.0);
  EXPECT_THROW(entanglement_entropy(c, 0), std::invalid_argument);
  EXPECT_THROW(entanglement_entropy(c, 16), std::invalid_argument);

  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(8, 8) * 0.5;
  m(4, 5) = 0.3;
  EXPECT_THROW(entanglement_entropy(Correlator::from_dense(m), 3), NonHermitianInput);
  EXPECT_NO_THROW(entanglement_entropy(Correlator::from_dense(m), 2));
}

TEST(SteadyState, AreaLawConvergesLogLawDoesNot) {
  // In the area-law phase every mode relaxes exponentially; in the log-law phase the slowest
  // modes decay on times comparable to T and S(T) still drifts at the 1e-2 level.
  const auto area = steady_state_ee(nn(0.8, 1.0), 400, 100);
  EXPECT_TRUE(area.converged);
  EXPECT_LT(std::abs(area.entropy - area.half_entropy), 1e-10);

  const auto log = steady_state_ee(nn(0.8, 0.1), 400, 100);
  EXPECT_FALSE(log.converged);
  EXPECT_NEAR(log.entropy, 4.400610750689157, 1e-8);
}

TEST(SteadyState, ProfileSharesCorrelators) {
  const std::vector<int> ls = {8, 16, 24, 32};
  const auto prof = steady_state_profile(nn(0.8, 1.0), 64, ls, 200.0);
  ASSERT_EQ(prof.size(), ls.size());
  for (std::size_t i = 0; i < ls.size(); ++i)
    EXPECT_EQ(prof[i].entropy, steady_state_ee(nn(0.8, 1.0), 64, ls[i], 200.0).entropy);
  EXPECT_THROW(steady_state_profile(nn(0.8, 1.0), 64, ls, 0.0), std::invalid_argument);
}

TEST(TimeSeries, ValuesAndConvergenceFlag) {
  const std::vector<double> times = {0.0, 50.0, 100.0, 200.0};
  const auto ts = ee_time_series(nn(0.8, 1.0), 64, 16, times);
  ASSERT_EQ(ts.values.size(), times.size());
  for (std::size_t i = 0; i < times.size(); ++i)
    EXPECT_EQ(ts.values[i], entanglement_entropy(assemble_correlator(nn(0.8, 1.0), 64, times[i]), 16));
  EXPECT_EQ(ts.final_value, ts.values.back());
  EXPECT_TRUE(ts.converged);

  // T/2 not on the requested grid: computed separately.
  const auto ts2 = ee_time_series(nn(0.8, 1.0), 64, 16, {0.0, 150.0});
  EXPECT_TRUE(ts2.converged);

  EXPECT_THROW(ee_time_series(nn(0.8, 1.0), 64, 16, {}), std::invalid_argument);
  EXPECT_THROW(ee_time_series(nn(0.8, 1.0), 64, 16, {1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(ee_time_series(nn(0.8, 1.0), 64, 16, {0.0, 2.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(ee_time_series(nn(0.8, 1.0), 64, 16, {0.0, 2.0, 1.0}), std::invalid_argument);
}

TEST(EntropyFromSpectrum, ClampNeutrality) {
  for (double z : {0.0, 5e-13, 1e-12, 1.0 - 1e-12, 1.0}) EXPECT_LT(entropy_from_spectrum(std::vector<double>{z}), 1e-10);
}

TEST(Entanglement, LogLawGrowsWithSubsystem) {
  const auto c = assemble_correlator(nn(0.8, 0.1), 400, 2000.0);
  const double s20 = entanglement_entropy(c, 20), s40 = entanglement_entropy(c, 40), s80 = entanglement_entropy(c, 80);
  EXPECT_LT(s20, s40);
  EXPECT_LT(s40, s80);
}

TEST(Entanglement, PureLossDecaysMonotonically) {
  const ChainSpec loss({{1, 0.0, 0.0}}, 0.0, 0.5);
  double prev = 1e9;
  for (double t : {2.0, 4.0, 8.0, 16.0, 32.0}) {
    const double s = entanglement_entropy(assemble_correlator(loss, 32, t), 8);
    EXPECT_LE(s, prev);
    prev = s;
  }
  EXPECT_LT(prev, 1e-9);
  const auto ss = steady_state_ee(loss, 32, 8, 200.0);
  EXPECT_TRUE(ss.converged);
  EXPECT_LT(ss.entropy, 1e-9);
}

TEST(SteadyState, UnitaryQuenchNeverSettles) {
  EXPECT_FALSE(steady_state_ee(nn(0.8, 0.0), 400, 100).converged);
}
