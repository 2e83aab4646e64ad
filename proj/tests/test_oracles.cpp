#include <gtest/gtest.h>

#include <sstream>

#include "oracle_support.hpp"
#include "tts/dynamics.hpp"
#include "tts/oracles.hpp"

using namespace tts;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

PiecewiseConstantTarget single_jump() { return PiecewiseConstantTarget({0.0, 0.5, 1.0}, {0.0, 1.0}); }

}  // namespace

TEST(GridLeastSquares, RecoversTheStepFit) {
  const Vector a = grid_least_squares(vec({0.3, 0.5}), single_jump(), Activation::step(), 100000);
  EXPECT_NEAR(a[0], 0.0, 1e-4);
  EXPECT_NEAR(a[1], 0.0, 1e-4);
  EXPECT_NEAR(a[2], 1.0, 1e-4);
}

TEST(GridLeastSquares, SelfConsistentUnderRefinement) {
  Rng rng(1);
  for (int k = 0; k < 5; ++k) {
    const RandomConfig c = random_config(rng, 1e-2, false, 8);
    const auto act = Activation::sigmoid(1e-2);
    const Vector a1 = grid_least_squares(c.u, c.target, act, 100000);
    const Vector a2 = grid_least_squares(c.u, c.target, act, 200000);
    const Vector exact = best_fit(c.u, act, c.target);
    const double scale = 1.0 + exact.cwiseAbs().maxCoeff();
    EXPECT_LE((a1 - a2).cwiseAbs().maxCoeff(), 1e-2 * scale);
    EXPECT_LE((a2 - exact).cwiseAbs().maxCoeff(), 1e-2 * scale);
  }
}

TEST(GridLeastSquares, DuplicatePositionsAreSingular) {
  try {
    grid_least_squares(vec({0.4, 0.4}), single_jump(), Activation::step(), 1000);
    FAIL() << "expected SingularSystemError";
  } catch (const SingularSystemError& e) {
    EXPECT_NE(std::string(e.what()).find("singular"), std::string::npos);
  }
}

TEST(SplitGrid, WeightsAndExactness) {
  const auto step = Activation::step();
  const Vector u = vec({0.1, 0.30000123, 0.7, 0.9});
  const auto pts = detail::split_grid(u, single_jump(), step, 1000);
  double total = 0.0;
  for (const auto& [x, w] : pts) total += w;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(pts.size(), 1001u);  // only 0.30000123 falls inside a cell
  EXPECT_LE((split_grid_least_squares(u, single_jump(), step, 1000) - best_fit_heaviside(u, single_jump()))
                .cwiseAbs()
                .maxCoeff(),
            1e-10);
}

TEST(SplitGrid, HeavisideFitIsExactOnRandomConfigs) {
  Rng rng(11);
  for (int k = 0; k < 20; ++k) {
    const RandomConfig c = random_config(rng, 0.0, true, 15);
    const Vector a = best_fit_heaviside(c.u, c.target);
    EXPECT_LE((split_grid_least_squares(c.u, c.target, Activation::step(), 5000) - a).cwiseAbs().maxCoeff(),
              1e-8 * (1.0 + a.cwiseAbs().maxCoeff()));
  }
}

TEST(FiniteDifferences, QuadraticIsExact) {
  Matrix A(2, 2);
  A << 2.0, 1.0, 1.0, 3.0;
  const Vector b = vec({1.0, -1.0});
  const auto f = [&](const Vector& x) { return 0.5 * x.dot(A * x) - b.dot(x); };
  const Vector x = vec({0.3, -0.7});
  EXPECT_LE((fd_gradient(f, x, 1e-3) - (A * x - b)).norm(), 1e-10);
  const Matrix J = fd_jacobian([&](const Vector& y) -> Vector { return A * y - b; }, x, 1e-3);
  EXPECT_LE((J - A).norm(), 1e-10);
  EXPECT_THROW(fd_gradient(f, x, 0.0), PreconditionError);
}

TEST(FiniteDifferences, LossGradientInWeightsIsHaMinusB) {
  Rng rng(2);
  for (double eta : kSuiteEtas) {
    const RandomConfig c = random_config(rng, eta, false, 10);
    const auto act = Activation::sigmoid(eta);
    std::normal_distribution<double> g(0.0, 1.0);
    Vector a(c.u.size() + 1);
    for (Eigen::Index j = 0; j < a.size(); ++j) a[j] = g(rng);
    const Vector fd = fd_gradient([&](const Vector& w) { return loss(w, c.u, act, c.target); }, a, 1e-3);
    const Vector exact = hessian(c.u, act) * a - linear_term(c.u, act, c.target);
    EXPECT_LE((fd - exact).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + exact.cwiseAbs().maxCoeff()));
  }
}

TEST(BoundTracker, CountsViolations) {
  BoundTracker t("demo", 1e-12);
  t.add(1.0, 2.0);
  t.add(3.0, 2.0);
  const OracleReport r = t.report();
  EXPECT_EQ(r.trials, 2u);
  EXPECT_EQ(r.violations, 1u);
  EXPECT_FALSE(r.pass);
  EXPECT_DOUBLE_EQ(r.rel_error, 1.5);
  EXPECT_DOUBLE_EQ(r.abs_error, 1.0);
  EXPECT_FALSE(BoundTracker("empty", 0.0).report().pass);
}

TEST(LemmaSuite, AllChecksPass) {
  Rng rng(3);
  const auto reports = lemma_suite(rng, 100);
  ASSERT_EQ(reports.size(), 18u);
  for (const auto& r : reports) {
    EXPECT_TRUE(r.pass) << r.name << " worst " << r.computed << " vs " << r.reference;
    EXPECT_EQ(r.trials > 0, true) << r.name;
    if (r.name.find("gram shift: off-diagonal") != std::string::npos) EXPECT_LE(r.computed, 1e-12);
    if (r.name.find("gram shift: diagonal deviation") != std::string::npos) EXPECT_LE(r.computed, 1e-12);
  }
}

TEST(LemmaSuite, AlignedErrorOnTheStaircase) {
  // eta = 1e-3, M = 4, n = 6: the bound 6 M^2 eta n is 0.576.
  const double eta = 1e-3;
  const auto t = staircase_target();
  const auto act = Activation::sigmoid(eta);
  Vector u(12);
  u << 0.1, 0.2 + 0.4 * eta, 0.27, 0.35 - 0.3 * eta, 0.42, 0.5 + 0.9 * eta, 0.58,
      0.65 - 0.6 * eta, 0.72, 0.8 + 0.2 * eta, 0.9, 0.95;
  ASSERT_TRUE(is_admissible(u, act));
  const Vector a = best_fit(u, act, t);
  const double err = 2.0 * loss(a, u, act, t);
  EXPECT_LE(err, 6.0 * 16.0 * eta * 6.0);
  EXPECT_DOUBLE_EQ(6.0 * 16.0 * eta * 6.0, 0.576);
  // The error is dominated by the smoothing windows around each jump.
  EXPECT_GT(err, 0.0);
  EXPECT_LT(err, 0.1);
}

TEST(Reports, TableAndCsv) {
  BoundTracker t("demo check", 1e-12);
  t.add(0.5, 1.0);
  const std::vector<OracleReport> rs{t.report()};
  std::ostringstream table, csv;
  write_report_table(table, rs);
  write_report_csv(csv, rs);
  EXPECT_NE(table.str().find("demo check"), std::string::npos);
  EXPECT_NE(table.str().find("PASS"), std::string::npos);
  EXPECT_EQ(csv.str(),
            "check,trials,violations,computed,reference,abs_error,rel_error,tolerance,pass\n"
            "\"demo check\",1,0,0.5,1,0,0.5,9.9999999999999998e-13,true\n");
}
