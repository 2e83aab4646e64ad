#include <gtest/gtest.h>

#include "oracle_support.hpp"
#include "tts/dynamics.hpp"
#include "tts/experiments.hpp"
#include "tts/init.hpp"
#include "tts/sgd.hpp"

using namespace tts;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

PiecewiseConstantTarget single_jump() { return PiecewiseConstantTarget({0.0, 0.5, 1.0}, {0.0, 1.0}); }

// Largest position gap at SGD checkpoints whose tau is a limit snapshot time
// or lies inside an interval over which the limit positions are frozen.
double max_position_gap(const RunRecord& sgd, const RunRecord& lim) {
  double gap = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < sgd.size(); ++i) {
    const double tau = sgd.extras[i][0];
    while (k + 1 < lim.size() && lim.times[k + 1] <= tau + 1e-12) ++k;
    const bool frozen = k + 1 < lim.size() && lim.positions[k] == lim.positions[k + 1];
    if (std::abs(lim.times[k] - tau) < 1e-9 || frozen) {
      gap = std::max(gap, (sgd.positions[i] - lim.positions[k]).cwiseAbs().maxCoeff());
    }
  }
  return gap;
}

}  // namespace

TEST(SgdConfig, Validation) {
  SgdConfig c;
  c.h = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SgdConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SgdConfig{};
  c.epsilon = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(parse_noise("uniform"), Noise::uniform);
  EXPECT_THROW(parse_noise("gaussian"), ConfigError);
}

TEST(SampleBatch, DeterministicPerSeed) {
  Rng a(99), b(99);
  for (int k = 0; k < 10; ++k) {
    const Batch x = sample_batch(staircase_target(), Noise::uniform, 64, a);
    const Batch y = sample_batch(staircase_target(), Noise::uniform, 64, b);
    ASSERT_EQ(x.x, y.x);
    ASSERT_EQ(x.y, y.y);
  }
}

TEST(SampleBatch, InputsAndNoiseAreUniform) {
  Rng rng(1);
  const auto t = staircase_target();
  const Batch b = sample_batch(t, Noise::uniform, 20000, rng);
  std::vector<double> xs, noise;
  for (Eigen::Index s = 0; s < b.y.size(); ++s) {
    xs.push_back(b.x(s, 0));
    noise.push_back(b.y[s] - t(b.x(s, 0)));
  }
  EXPECT_LT(oracle::ks_uniform(xs, 0.0, 1.0), oracle::ks_critical(xs.size()));
  EXPECT_LT(oracle::ks_uniform(noise, -1.0, 1.0), oracle::ks_critical(noise.size()));

  const Batch clean = sample_batch(t, Noise::none, 1000, rng);
  for (Eigen::Index s = 0; s < clean.y.size(); ++s) EXPECT_EQ(clean.y[s], t(clean.x(s, 0)));
}

TEST(SampleBatch, AdditiveInputs) {
  Rng rng(2);
  const auto t = additive_staircase_target(3);
  const Batch b = sample_batch(t, Noise::none, 500, rng);
  ASSERT_EQ(b.x.cols(), 3);
  for (Eigen::Index s = 0; s < b.y.size(); ++s) {
    const double x[] = {b.x(s, 0), b.x(s, 1), b.x(s, 2)};
    EXPECT_EQ(b.y[s], t(x));
  }
}

TEST(SgdStep, ZeroResidualLeavesStateUnchanged) {
  const NetworkState s(vec({0.2, 1.0, -0.5}), vec({0.3, 0.6}));
  const auto act = Activation::sigmoid(0.05);
  Batch b;
  b.x.resize(3, 1);
  b.y.resize(3);
  for (int k = 0; k < 3; ++k) {
    b.x(k, 0) = 0.1 + 0.3 * k;
    b.y[k] = forward(s, act, b.x(k, 0));
  }
  const NetworkState next = sgd_step(s, act, b, 0.1, 1.0);
  EXPECT_EQ(next.a, s.a);
  EXPECT_EQ(next.u, s.u);
}

TEST(SgdStep, FrozenInnerLayer) {
  Rng rng(3);
  const auto act = Activation::sigmoid(0.05);
  const NetworkState s(vec({0.2, 1.0, -0.5}), vec({0.3, 0.6}));
  const Batch b = sample_batch(staircase_target(), Noise::uniform, 16, rng);
  const NetworkState next = sgd_step(s, act, b, 0.1, 0.0);
  EXPECT_EQ(next.u, s.u);
  EXPECT_NE(next.a, s.a);
}

TEST(SgdStep, FullGridBatchIsAnEulerStep) {
  Rng rng(4);
  const auto target = staircase_target();
  const double eta = 4e-3, h = 1e-3, eps = 1.0;
  const auto act = Activation::sigmoid(eta);
  NetworkState s = sample_spaced_init(20, eta, 0.02, rng);
  std::normal_distribution<double> g(0.0, 1.0);
  for (Eigen::Index j = 0; j < s.a.size(); ++j) s.a[j] = g(rng);

  constexpr Eigen::Index kGrid = 100000;
  Batch b;
  b.x.resize(kGrid, 1);
  b.y.resize(kGrid);
  for (Eigen::Index k = 0; k < kGrid; ++k) {
    b.x(k, 0) = (static_cast<double>(k) + 0.5) / kGrid;
    b.y[k] = target(b.x(k, 0));
  }
  const NetworkState next = sgd_step(s, act, b, h, eps);
  const Gradient pg = population_gradient(s, act, target);
  EXPECT_LE((next.a - (s.a - h * pg.a)).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LE((next.u - (s.u - eps * h * pg.u)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Train, FrozenPositionsRecoverBestFit) {
  const Vector u0 = vec({0.3, 0.7});
  const auto act = Activation::sigmoid(0.01);
  SgdConfig c;
  // Constant-step SGD fluctuates around the fit by about sqrt(h L / (B lambda_min)).
  c.h = 5e-3;
  c.epsilon = 0.0;
  c.steps = 20000;
  c.batch_size = 20000;
  c.noise = Noise::none;
  c.seed = 5;
  c.eval_every = 5000;
  const RunRecord r = train(NetworkState::zeros(u0), single_jump(), act, c);
  ASSERT_TRUE(r.completed()) << r.diagnostic;
  EXPECT_EQ(r.positions.back(), u0);
  EXPECT_LE((r.weights.back() - best_fit(u0, act, single_jump())).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Train, DivergenceGuard) {
  Rng rng(6);
  SgdConfig c;
  c.h = 50.0;
  c.steps = 1000;
  c.seed = 6;
  const RunRecord r = train(sample_init(20, rng), staircase_target(), Activation::sigmoid(4e-3), c);
  EXPECT_EQ(r.status, RunStatus::diverged);
  EXPECT_NE(r.diagnostic.find("diverged"), std::string::npos);
}

TEST(Train, DeterministicPerSeed) {
  Rng r1(7), r2(7);
  SgdConfig c;
  c.steps = 5000;
  c.eval_every = 500;
  c.noise = Noise::uniform;
  c.epsilon = 0.1;
  c.seed = 8;
  const auto act = Activation::sigmoid(4e-3);
  const RunRecord a = train(sample_init(20, r1), staircase_target(), act, c);
  const RunRecord b = train(sample_init(20, r2), staircase_target(), act, c);
  EXPECT_EQ(a.losses, b.losses);
  EXPECT_EQ(a.positions.back(), b.positions.back());
}

TEST(Train, AdditiveStep) {
  Rng rng(9);
  const auto target = additive_staircase_target(2);
  const auto act = Activation::sigmoid(1e-2);
  SgdConfig c;
  c.h = stable_additive_step(10, 2);
  c.epsilon = 1e-2;
  c.steps = 2000;
  c.batch_size = 100;
  c.eval_every = 1000;
  c.seed = 9;
  const RunRecord r = train(sample_additive_init(10, 2, rng), target, act, c);
  ASSERT_TRUE(r.completed()) << r.diagnostic;
  EXPECT_LT(r.losses.back(), r.losses.front());
  EXPECT_EQ(r.alignment.back().size(), 6u);
}

TEST(Train, SlowPositionsTrackTheLimit) {
  // Reference run: eps = 2e-5, eta = 4e-3, h = 1e-3, 1.8e6 steps, uniform noise.
  const auto target = staircase_target();
  const auto act = Activation::sigmoid(4e-3);
  Rng rng(kReferenceSeed);
  const NetworkState s0 = sample_init(20, rng);
  SgdConfig c = experiment_detail::univariate_sgd(two_timescale_budget(false), 2e-5, Noise::uniform);
  c.seed = kReferenceSeed;
  const RunRecord sgd = train(s0, target, act, c);
  ASSERT_TRUE(sgd.completed()) << sgd.diagnostic;
  const double tau_end = sgd.extras.back()[0];

  FlowConfig fc;
  fc.t_end = tau_end;
  fc.dt = tau_end / 2000.0;
  fc.record_every = 10;
  const RunRecord red = integrate_limit_reduced(s0.u, target, fc);
  EXPECT_LE(max_position_gap(sgd, red), 0.01);

  // Once the weights have caught up with their best response (a starts at 0),
  // losses agree while the limit is above its floor; SGD then plateaus above it.
  std::size_t k = 0;
  for (std::size_t i = 1; i < sgd.size(); ++i) {
    const double tau = sgd.extras[i][0];
    while (k + 1 < red.size() && red.times[k + 1] <= tau + 1e-12) ++k;
    if (tau < 0.1 * tau_end || std::abs(red.times[k] - tau) > 1e-9) continue;
    if (red.losses[k] > 0.0) EXPECT_NEAR(sgd.losses[i], red.losses[k], 0.01) << "tau=" << tau;
  }
  EXPECT_EQ(red.losses.back(), 0.0);
  EXPECT_GT(sgd.losses.back(), 0.0);
  for (double d : sgd.alignment.back()) EXPECT_LE(d, 2.0 * 4e-3);

  FlowConfig sc = fc;
  sc.eta = 4e-3;
  const RunRecord smooth = integrate_limit_smooth(s0.u, target, act, sc);
  ASSERT_TRUE(smooth.completed()) << smooth.diagnostic;
  EXPECT_LE(max_position_gap(sgd, smooth), 0.01);
}

TEST(Train, StandardRegimeLeavesAGap) {
  // eps = 1, h = 1e-5, 1e6 steps from the reference start.
  const auto target = staircase_target();
  const auto act = Activation::sigmoid(4e-3);
  Rng rng(kReferenceSeed);
  const NetworkState s0 = sample_init(20, rng);
  SgdConfig c = experiment_detail::univariate_sgd(standard_budget(false), 1.0, Noise::uniform);
  c.seed = kReferenceSeed;
  const RunRecord r = train(s0, target, act, c);
  ASSERT_TRUE(r.completed()) << r.diagnostic;
  const auto& al = r.alignment.back();
  EXPECT_GT(*std::max_element(al.begin(), al.end()), 10.0 * 4e-3);
}
