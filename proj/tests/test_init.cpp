#include <gtest/gtest.h>

#include "oracle_support.hpp"
#include "tts/init.hpp"

using namespace tts;

namespace {

PiecewiseConstantTarget single_jump() { return PiecewiseConstantTarget({0.0, 0.5, 1.0}, {0.0, 1.0}); }
PiecewiseConstantTarget thirds() {
  return PiecewiseConstantTarget({0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}, {0.0, 1.0, -1.0});
}

double two_sample_ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST(SampleInit, ZeroWeightsUniformPositions) {
  Rng rng(1);
  std::vector<double> all;
  for (int k = 0; k < 5000; ++k) {
    const NetworkState s = sample_init(20, rng);
    EXPECT_EQ(s.a, Vector::Zero(21));
    for (Eigen::Index j = 0; j < 20; ++j) all.push_back(s.u[j]);
  }
  EXPECT_LT(oracle::ks_uniform(all, 0.0, 1.0), oracle::ks_critical(all.size()));
  EXPECT_THROW(sample_init(0, rng), PreconditionError);
}

TEST(SampleInit, DeterministicPerSeed) {
  Rng a(5), b(5);
  EXPECT_EQ(sample_init(20, a).u, sample_init(20, b).u);
}

TEST(SampleSpacedInit, RespectsMarginAndMatchesRejection) {
  Rng rng(2);
  const double eta = 0.0, D = 0.1;
  std::vector<double> direct, rejected;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (rejected.size() < 20000) {
    Vector u(3);
    for (Eigen::Index j = 0; j < 3; ++j) u[j] = unit(rng);
    if (min_spacing(u, eta) >= D) rejected.push_back(u.minCoeff());
  }
  for (int k = 0; k < 20000; ++k) {
    const Vector u = sample_spaced_init(3, eta, D, rng).u;
    ASSERT_GE(min_spacing(u, eta), D - 1e-15);
    direct.push_back(u.minCoeff());
  }
  const double crit = 1.628 * std::sqrt(2.0 / 20000.0);
  EXPECT_LT(two_sample_ks(direct, rejected), crit);
  EXPECT_THROW(sample_spaced_init(20, 0.0, 0.1, rng), PreconditionError);
}

TEST(SampleAdditiveInit, Ranges) {
  Rng rng(3);
  const AdditiveState s = sample_additive_init(10, 4, rng);
  EXPECT_EQ(s.bias, 0.0);
  EXPECT_GE(s.A.minCoeff(), 0.0);
  EXPECT_LE(s.A.maxCoeff(), 3.0);
  EXPECT_GE(s.U.minCoeff(), 0.0);
  EXPECT_LE(s.U.maxCoeff(), 1.0);
  const NetworkState w = sample_weighted_init(10, rng);
  EXPECT_EQ(w.a[0], 0.0);
  EXPECT_GE(w.a.tail(10).minCoeff(), 0.0);
  EXPECT_LE(w.a.tail(10).maxCoeff(), 3.0);
}

TEST(IsDGood, TooFewNeuronsInAPiece) {
  Vector u(11);
  u << 0.05, 0.1, 0.15, 0.2, 0.25, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85;
  const GoodnessReport r = is_D_good(u, single_jump(), 1e-4, 0.0);
  EXPECT_FALSE(r.is_good);
  EXPECT_FALSE(r.enough_neurons);
  ASSERT_FALSE(r.witnesses.empty());
  EXPECT_NE(r.witnesses.front().find("(a)"), std::string::npos);
}

TEST(IsDGood, SymmetricFlanksFailAsymmetry) {
  Vector u(12);
  for (int k = 0; k < 6; ++k) {
    u[k] = 0.05 + 0.07 * k;
    u[11 - k] = 1.0 - u[k];
  }
  for (double D : {1e-9, 1e-4, 1e-2}) {
    const GoodnessReport r = is_D_good(u, single_jump(), D, 0.0);
    EXPECT_TRUE(r.enough_neurons);
    EXPECT_FALSE(r.asymmetric);
    EXPECT_FALSE(r.is_good);
  }
  u[6] += 0.01;  // break the symmetry
  const GoodnessReport r = is_D_good(u, single_jump(), 1e-3, 0.0);
  EXPECT_TRUE(r.is_good);
  EXPECT_EQ(r.is_good, r.enough_neurons && r.spaced && r.asymmetric);
}

TEST(IsDGood, SpacingFlag) {
  Vector u(12);
  for (int k = 0; k < 12; ++k) u[k] = 0.03 + 0.08 * k;
  const GoodnessReport r = is_D_good(u, single_jump(), 0.05, 0.0);
  EXPECT_FALSE(r.spaced);
  EXPECT_TRUE(is_D_good(u, single_jump(), 0.02, 0.0).spaced);
}

TEST(IsDGood, BreakpointNeuronCountsForBothPieces) {
  Vector u(11);
  u << 0.05, 0.1, 0.15, 0.2, 0.25, 0.5, 0.6, 0.7, 0.75, 0.8, 0.85;
  const GoodnessReport r = is_D_good(u, single_jump(), 1e-4, 0.0);
  EXPECT_TRUE(r.enough_neurons);
}

TEST(GoodProbability, ZeroMarginReducesToCounting) {
  const auto t = thirds();
  Rng a(12), b(12);
  const ProbabilityEstimate e = estimate_good_probability(30, t, 0.0, 0.0, 2000, a);
  std::size_t counted = 0;
  for (int k = 0; k < 2000; ++k) {
    Rng sub(b());
    const GoodnessReport r = is_D_good(sample_init(30, sub).u, t, 0.0, 0.0);
    EXPECT_TRUE(r.spaced);
    EXPECT_TRUE(r.asymmetric);
    counted += r.enough_neurons;
  }
  EXPECT_EQ(e.successes, counted);
}

TEST(Widths, MinimalWidthAndMargins) {
  // (6 / 0.5)(4 + 2 log 2) = 64.6...
  EXPECT_EQ(minimal_width(2, 0.5, 0.5), 65);
  EXPECT_THROW(minimal_width(2, 0.5, 1.5), PreconditionError);
  EXPECT_DOUBLE_EQ(goodness_margin(62, 0.5), 0.5 / (6.0 * 63.0 * 63.0));
  EXPECT_NEAR(recovery_margin(20, 4.0, 4e-3, 1.0), std::pow(2.0, 6.5) * std::sqrt(21.0) * 4.0 * std::sqrt(4e-3), 1e-12);
  const RecoveryThresholds q = recovery_thresholds(0.1, 0.5, 20, 1.0, 4.0);
  EXPECT_GT(q.q1, 0.0);
  EXPECT_LT(q.q1, 1e-10);
  EXPECT_GT(q.q2, 0.0);
  EXPECT_LT(q.q2, q.q1);
}

TEST(Wilson, KnownInterval) {
  const ProbabilityEstimate e = wilson_interval(50, 100);
  EXPECT_NEAR(e.lower, 0.40383, 1e-4);
  EXPECT_NEAR(e.upper, 0.59617, 1e-4);
  EXPECT_EQ(wilson_interval(0, 10).lower, 0.0);
  EXPECT_THROW(wilson_interval(0, 0), PreconditionError);
}

TEST(GoodProbability, SingleNeuronNeverGood) {
  Rng rng(4);
  const ProbabilityEstimate e = estimate_good_probability(1, single_jump(), 1e-4, 0.0, 1000, rng);
  EXPECT_EQ(e.successes, 0u);
}

TEST(GoodProbability, StatedWidthOnTwoPieces) {
  // The width 62 used as the reference example, and the width from the bound.
  for (Eigen::Index m : {62, 65}) {
    Rng rng(static_cast<std::uint64_t>(m));
    const double D = goodness_margin(m, 0.5);
    const ProbabilityEstimate e = estimate_good_probability(m, single_jump(), D, 0.0, 10000, rng);
    EXPECT_GE(e.frequency, 0.5 - e.half_width()) << "m=" << m;
  }
}

TEST(GoodProbability, BoundHoldsAcrossTargetsAndConfidence) {
  struct Case {
    PiecewiseConstantTarget target;
    double delta_v;
  };
  const Case cases[] = {{single_jump(), 0.5}, {thirds(), 1.0 / 3.0}};
  for (const auto& c : cases) {
    for (double delta : {0.5, 0.25}) {
      const Eigen::Index m = minimal_width(c.target.pieces(), c.delta_v - 1e-12, delta);
      Rng rng(17);
      const ProbabilityEstimate e =
          estimate_good_probability(m, c.target, goodness_margin(m, delta), 0.0, 10000, rng);
      EXPECT_GE(e.frequency, 1.0 - delta - e.half_width()) << "n=" << c.target.pieces() << " delta=" << delta;
    }
  }
}

TEST(GoodProbability, ReproduciblePerSeed) {
  Rng a(9), b(9);
  EXPECT_EQ(estimate_good_probability(40, single_jump(), 1e-4, 0.0, 500, a).successes,
            estimate_good_probability(40, single_jump(), 1e-4, 0.0, 500, b).successes);
}
