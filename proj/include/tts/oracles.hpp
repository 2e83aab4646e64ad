#pragma once

// Brute-force references: dense midpoint grids, central differences and
// randomized checks of the analytic bounds. Deliberately slow and simple.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tts/activation.hpp"
#include "tts/errors.hpp"
#include "tts/init.hpp"
#include "tts/network.hpp"
#include "tts/quadratic.hpp"
#include "tts/record.hpp"
#include "tts/sgd.hpp"
#include "tts/targets.hpp"

namespace tts {

namespace detail {

// Design row at x: (1, sigma(x - u_1), ..., sigma(x - u_m)).
inline void design_row(const Vector& u, const Activation& act, double x, double* row) {
  row[0] = 1.0;
  for (Eigen::Index j = 0; j < u.size(); ++j) row[j + 1] = act(x - u[j]);
}

// Accumulates Phi^T Phi / N and Phi^T y / N over the midpoint grid in blocks.
template <UnivariateTarget T>
void grid_normal_equations(const Vector& u, const T& target, const Activation& act,
                           std::size_t grid_points, Matrix& G, Vector& r) {
  const Eigen::Index n = u.size() + 1;
  constexpr Eigen::Index kBlock = 4096;
  G.setZero(n, n);
  r.setZero(n);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> phi(kBlock, n);
  Vector y(kBlock);
  const double N = static_cast<double>(grid_points);
  for (std::size_t start = 0; start < grid_points; start += kBlock) {
    const auto rows = static_cast<Eigen::Index>(
        std::min<std::size_t>(kBlock, grid_points - start));
    for (Eigen::Index k = 0; k < rows; ++k) {
      const double x = (static_cast<double>(start + static_cast<std::size_t>(k)) + 0.5) / N;
      design_row(u, act, x, &phi(k, 0));
      y[k] = target(x);
    }
    G.selfadjointView<Eigen::Lower>().rankUpdate(phi.topRows(rows).transpose());
    r.noalias() += phi.topRows(rows).transpose() * y.head(rows);
  }
  G = G.selfadjointView<Eigen::Lower>();
  G /= N;
  r /= N;
}

}  // namespace detail

/// Least squares on the uniform midpoint grid of the given size.
template <UnivariateTarget T>
Vector grid_least_squares(const Vector& u, const T& target, const Activation& act,
                          std::size_t grid_points) {
  if (grid_points < 1) throw PreconditionError("grid_least_squares: grid_points must be >= 1");
  Matrix G;
  Vector r;
  detail::grid_normal_equations(u, target, act, grid_points, G, r);
  Eigen::FullPivLU<Matrix> lu(G);
  lu.setThreshold(1e-10);
  if (lu.rank() < G.rows()) {
    throw SingularSystemError("grid_least_squares: singular normal matrix (rank " +
                              std::to_string(lu.rank()) + " < " +
                              std::to_string(G.rows()) + ")");
  }
  return lu.solve(r);
}

/// 1/2 mean over the midpoint grid of (f(x) - f*(x))^2.
template <UnivariateTarget T>
double grid_loss(const Vector& a, const Vector& u, const T& target, const Activation& act,
                 std::size_t grid_points) {
  const double N = static_cast<double>(grid_points);
  double acc = 0.0;
  for (std::size_t k = 0; k < grid_points; ++k) {
    const double x = (static_cast<double>(k) + 0.5) / N;
    double f = a[0];
    for (Eigen::Index j = 0; j < u.size(); ++j) f += a[j + 1] * act(x - u[j]);
    const double e = f - target(x);
    acc += e * e;
  }
  return 0.5 * acc / N;
}

namespace detail {

// Midpoints and weights of the uniform grid, with every cell that contains a
// jump of the integrand (a target breakpoint, or a position for the step
// activation) split at the jump. Weights sum to 1.
template <UnivariateTarget T>
std::vector<std::pair<double, double>> split_grid(const Vector& u, const T& target,
                                                  const Activation& act, std::size_t grid_points) {
  std::vector<double> jumps(target.kinks().begin(), target.kinks().end());
  if (act.kind() == ActivationKind::heaviside) {
    for (Eigen::Index j = 0; j < u.size(); ++j) jumps.push_back(u[j]);
  }
  std::sort(jumps.begin(), jumps.end());
  const double N = static_cast<double>(grid_points);
  std::vector<std::pair<double, double>> out;
  out.reserve(grid_points + jumps.size());
  std::size_t next = 0;
  for (std::size_t k = 0; k < grid_points; ++k) {
    const double hi = static_cast<double>(k + 1) / N;
    double lo = static_cast<double>(k) / N;
    while (next < jumps.size() && jumps[next] <= lo) ++next;
    while (next < jumps.size() && jumps[next] < hi) {
      out.emplace_back(0.5 * (lo + jumps[next]), jumps[next] - lo);
      lo = jumps[next++];
    }
    out.emplace_back(0.5 * (lo + hi), hi - lo);
  }
  return out;
}

}  // namespace detail

/// Least squares on the split midpoint grid: exact for the step activation
/// and piecewise-constant targets, second order otherwise.
template <UnivariateTarget T>
Vector split_grid_least_squares(const Vector& u, const T& target, const Activation& act,
                                std::size_t grid_points) {
  if (grid_points < 1) throw PreconditionError("split_grid_least_squares: grid_points must be >= 1");
  const Eigen::Index n = u.size() + 1;
  Matrix G = Matrix::Zero(n, n);
  Vector r = Vector::Zero(n);
  Vector row(n);
  for (const auto& [x, w] : detail::split_grid(u, target, act, grid_points)) {
    detail::design_row(u, act, x, row.data());
    G.selfadjointView<Eigen::Lower>().rankUpdate(row, w);
    r.noalias() += (w * target(x)) * row;
  }
  G = G.selfadjointView<Eigen::Lower>();
  Eigen::FullPivLU<Matrix> lu(G);
  lu.setThreshold(1e-10);
  if (lu.rank() < G.rows()) {
    throw SingularSystemError("split_grid_least_squares: singular normal matrix");
  }
  return lu.solve(r);
}

/// 1/2 split-grid midpoint sum of (f(x) - f*(x))^2.
template <UnivariateTarget T>
double split_grid_loss(const Vector& a, const Vector& u, const T& target, const Activation& act,
                       std::size_t grid_points) {
  double acc = 0.0;
  for (const auto& [x, w] : detail::split_grid(u, target, act, grid_points)) {
    double f = a[0];
    for (Eigen::Index j = 0; j < u.size(); ++j) f += a[j + 1] * act(x - u[j]);
    const double e = f - target(x);
    acc += w * e * e;
  }
  return 0.5 * acc;
}

/// Loss of the grid least-squares fit, as a function of the positions.
template <UnivariateTarget T>
double grid_best_loss(const Vector& u, const T& target, const Activation& act,
                      std::size_t grid_points) {
  return grid_loss(grid_least_squares(u, target, act, grid_points), u, target, act,
                   grid_points);
}

/// Central differences, component-wise.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                          double step) {
  if (!(step > 0.0)) throw PreconditionError("fd_gradient: step must be > 0");
  Vector g(x.size());
  Vector y = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    y[k] = x[k] + step;
    const double up = f(y);
    y[k] = x[k] - step;
    const double down = f(y);
    y[k] = x[k];
    g[k] = (up - down) / (2.0 * step);
  }
  return g;
}

/// Central-difference Jacobian of a vector map.
inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x,
                          double step) {
  if (!(step > 0.0)) throw PreconditionError("fd_jacobian: step must be > 0");
  Vector y = x;
  Matrix J;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    y[k] = x[k] + step;
    const Vector up = f(y);
    y[k] = x[k] - step;
    const Vector down = f(y);
    y[k] = x[k];
    if (k == 0) J.resize(up.size(), x.size());
    J.col(k) = (up - down) / (2.0 * step);
  }
  return J;
}

struct OracleReport {
  std::string name;
  double computed = 0.0;   // worst observed left-hand side
  double reference = 0.0;  // bound at that configuration
  double abs_error = 0.0;  // worst excess over the bound (0 when satisfied)
  double rel_error = 0.0;  // worst ratio lhs / bound
  double tolerance = 0.0;
  bool pass = true;
  std::size_t trials = 0;
  std::size_t violations = 0;
};

/// Accumulates lhs <= rhs checks; the worst case is the largest ratio.
class BoundTracker {
 public:
  BoundTracker(std::string name, double tolerance) {
    r_.name = std::move(name);
    r_.tolerance = tolerance;
    r_.rel_error = -HUGE_VAL;
  }

  void add(double lhs, double rhs) {
    ++r_.trials;
    const double excess = lhs - rhs;
    const bool ok = std::isfinite(lhs) && excess <= r_.tolerance * std::max(1.0, std::abs(rhs));
    if (!ok) ++r_.violations;
    const double ratio = rhs != 0.0 ? lhs / rhs : lhs;  // plain deviation for zero bounds
    if (!std::isfinite(lhs) || ratio > r_.rel_error) {
      r_.rel_error = std::isfinite(lhs) ? ratio : HUGE_VAL;
      r_.computed = lhs;
      r_.reference = rhs;
    }
    r_.abs_error = std::max(r_.abs_error, std::isfinite(excess) ? std::max(excess, 0.0) : HUGE_VAL);
  }

  OracleReport report() const {
    OracleReport out = r_;
    if (out.trials == 0) out.rel_error = 0.0;
    out.pass = out.violations == 0 && out.trials > 0;
    return out;
  }

 private:
  OracleReport r_;
};

/// A random admissible configuration for the bound checks.
struct RandomConfig {
  PiecewiseConstantTarget target;
  double M = 1.0;
  double eta = 0.0;
  Vector u;
};

namespace detail {

inline bool two_per_piece(const Vector& u, const PiecewiseConstantTarget& t) {
  std::vector<int> count(t.pieces(), 0);
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    const std::size_t p = t.piece_index(u[j]);
    if (u[j] > t.breakpoint(p) && u[j] < t.breakpoint(p + 1)) ++count[p];
  }
  return std::all_of(count.begin(), count.end(), [](int c) { return c >= 2; });
}

}  // namespace detail

/// Target from a random class, positions spaced by more than 2 eta (and in
/// (0, 1)), optionally with two neurons strictly inside every piece.
inline RandomConfig random_config(Rng& rng, double eta, bool two_per_piece,
                                  Eigen::Index max_m = 25) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (;;) {
    ClassParams p;
    p.n = 2 + static_cast<std::size_t>(unit(rng) * 4.0);  // 2..5
    p.delta_v = 0.05 + unit(rng) * (0.9 / static_cast<double>(p.n) - 0.05);
    p.delta_f = 0.2 + 1.3 * unit(rng);
    p.M = std::max(1.0, 0.5 * p.delta_f + 0.01) + 3.0 * unit(rng);
    RandomConfig c;
    c.target = sample_target(p, rng);
    c.M = c.target.sup_norm();
    c.eta = eta;
    const Eigen::Index lo = two_per_piece ? static_cast<Eigen::Index>(2 * p.n) : 1;
    const Eigen::Index m = lo + static_cast<Eigen::Index>(unit(rng) * static_cast<double>(max_m - lo + 1));
    const double cap = (1.0 + eta) / static_cast<double>(m + 1);
    if (!(cap > 2.0 * eta)) continue;
    for (int attempt = 0; attempt < 200; ++attempt) {
      const double D = 2.0 * eta + (0.05 + 0.9 * unit(rng)) * (cap - 2.0 * eta);
      Vector u = sample_spaced_init(m, eta, D, rng).u;
      if (u.minCoeff() <= 0.0 || u.maxCoeff() >= 1.0) continue;
      if (eta > 0.0 && !is_admissible(u, Activation::sigmoid(eta))) continue;
      if (two_per_piece && !detail::two_per_piece(u, c.target)) continue;
      c.u = std::move(u);
      return c;
    }
  }
}

inline Activation activation_for(double eta) {
  return eta > 0.0 ? Activation::sigmoid(eta) : Activation::step();
}

inline constexpr double kSuiteEtas[] = {1e-3, 4e-3, 1e-2};

/// Smallest-eigenvalue lower bound Delta(u)/8 on U_eta.
inline OracleReport check_min_eigenvalue(Rng& rng, std::size_t trials, double eta) {
  BoundTracker t("lambda_min >= Delta/8 (eta=" + format_number(eta) + ")", 1e-12);
  const Activation act = activation_for(eta);
  for (std::size_t k = 0; k < trials; ++k) {
    const RandomConfig c = random_config(rng, eta, false);
    const double delta = min_spacing(c.u, eta);
    // lambda_min >= Delta/8  <=>  Delta/8 - lambda_min <= 0.
    t.add(delta / 8.0, min_eigenvalue(hessian(c.u, act)));
  }
  return t.report();
}

inline std::vector<OracleReport> lemma_suite(Rng& rng, std::size_t trials) {
  std::vector<OracleReport> out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto pick_eta = [&] { return kSuiteEtas[static_cast<std::size_t>(unit(rng) * 3.0) % 3]; };

  for (double eta : {0.0, 1e-3, 1e-2}) out.push_back(check_min_eigenvalue(rng, trials, eta));

  {  // ||b_eta - b_0|| <= M eta sqrt(m+1),  ||b_eta|| <= M sqrt(m+1)
    BoundTracker diff("linear term: ||b_eta - b_0|| <= M eta sqrt(m+1)", 1e-12);
    BoundTracker size("linear term: ||b_eta|| <= M sqrt(m+1)", 1e-12);
    for (std::size_t k = 0; k < trials; ++k) {
      const double eta = pick_eta();
      const RandomConfig c = random_config(rng, eta, false);
      const double s = std::sqrt(static_cast<double>(c.u.size() + 1));
      const Vector be = linear_term(c.u, Activation::sigmoid(eta), c.target);
      const Vector b0 = linear_term(c.u, Activation::step(), c.target);
      diff.add((be - b0).norm(), c.M * eta * s);
      size.add(be.norm(), c.M * s);
    }
    out.push_back(diff.report());
    out.push_back(size.report());
  }

  {  // H_eta - H_0 is diagonal, constant and bounded by eta/2
    BoundTracker off("gram shift: off-diagonal |H_eta - H_0|", 1e-12);
    BoundTracker diag("gram shift: diagonal deviation from D_eta", 1e-12);
    BoundTracker half("gram shift: |D_eta| <= eta/2", 1e-12);
    for (std::size_t k = 0; k < trials; ++k) {
      const double eta = pick_eta();
      const RandomConfig c = random_config(rng, eta, false);
      const Activation act = Activation::sigmoid(eta);
      const Matrix He = gram_general(c.u, act);
      const Matrix H0 = gram(c.u, Activation::step());
      const Matrix Dm = He - H0;
      const double corr = act.diagonal_correction();
      double off_max = 0.0, diag_max = std::abs(Dm(0, 0));
      for (Eigen::Index i = 0; i < Dm.rows(); ++i) {
        for (Eigen::Index j = 0; j < Dm.cols(); ++j) {
          if (i != j) off_max = std::max(off_max, std::abs(Dm(i, j)));
          else if (i > 0) diag_max = std::max(diag_max, std::abs(Dm(i, i) - corr));
        }
      }
      off.add(off_max, 0.0);
      diag.add(diag_max, 0.0);
      half.add(std::abs(corr), 0.5 * eta);
    }
    out.push_back(off.report());
    out.push_back(diag.report());
    out.push_back(half.report());
  }

  {  // ||d a*_eta / du|| <= 8/Delta (2(m+1)||a*|| + M)
    BoundTracker t("best-fit sensitivity: ||da*/du|| <= 8/Delta (2(m+1)||a*|| + M)", 1e-6);
    for (std::size_t k = 0; k < trials; ++k) {
      const double eta = pick_eta();
      const RandomConfig c = random_config(rng, eta, false, 12);
      const Activation act = Activation::sigmoid(eta);
      const double delta = min_spacing(c.u, eta);
      const double step = 1e-3 * std::min(eta, delta - 2.0 * eta);
      const Matrix J = fd_jacobian(
          [&](const Vector& x) { return best_fit(x, act, c.target); }, c.u, step);
      const Vector a = best_fit(c.u, act, c.target);
      const double m1 = static_cast<double>(c.u.size() + 1);
      Eigen::JacobiSVD<Matrix> svd(J);
      t.add(svd.singularValues()(0), 8.0 / delta * (2.0 * m1 * a.norm() + c.M));
    }
    out.push_back(t.report());
  }

  {  // gradient at a*_0 is zero off the flanks, closed form on the flanks
    BoundTracker zero("position gradient: non-flank dL/du_j at a*_0", 1e-12);
    BoundTracker flank("position gradient: flank dL/du formula, relative deviation", 1e-9);
    for (std::size_t k = 0; k < trials; ++k) {
      const double eta = pick_eta();
      const RandomConfig c = random_config(rng, eta, true);
      const Activation act = Activation::sigmoid(eta);
      const Vector a0 = best_fit_heaviside(c.u, c.target);
      const Vector g = population_gradient(NetworkState(a0, c.u), act, c.target).u;
      const auto fl = flanks(c.u, c.target.kinks());
      std::vector<bool> is_flank(static_cast<std::size_t>(c.u.size()), false);
      for (std::size_t i = 1; i <= c.target.discontinuities(); ++i) {
        const FlankPair& f = fl[i - 1];
        is_flank[f.left] = is_flank[f.right] = true;
        const double v = c.target.breakpoint(i);
        if (v - f.u_left < 0.5 * eta || f.u_right - v < 0.5 * eta) continue;
        const double w = f.u_right - f.u_left;
        const double j2 = c.target.jump(i) * c.target.jump(i);
        const double gl = -0.5 * (f.u_right - v) * (f.u_right - v) / (w * w) * j2;
        const double gr = 0.5 * (v - f.u_left) * (v - f.u_left) / (w * w) * j2;
        flank.add(std::abs(g[static_cast<Eigen::Index>(f.left)] - gl) / std::max(std::abs(gl), 1e-300), 0.0);
        flank.add(std::abs(g[static_cast<Eigen::Index>(f.right)] - gr) / std::max(std::abs(gr), 1e-300), 0.0);
      }
      double worst = 0.0;
      for (Eigen::Index j = 0; j < g.size(); ++j) {
        if (!is_flank[static_cast<std::size_t>(j)]) worst = std::max(worst, std::abs(g[j]));
      }
      zero.add(worst, 0.0);
    }
    out.push_back(zero.report());
    out.push_back(flank.report());
  }

  {  // |f_eta(x; a*_0)| <= M on [0, 1]
    BoundTracker t("heaviside fit: sup |f_eta(x; a*_0)| <= M", 1e-12);
    for (std::size_t k = 0; k < trials; ++k) {
      const double eta = pick_eta();
      const RandomConfig c = random_config(rng, eta, true);
      const Activation act = Activation::sigmoid(eta);
      const NetworkState s(best_fit_heaviside(c.u, c.target), c.u);
      double sup = 0.0;
      constexpr int kGrid = 4000;
      for (int q = 0; q <= kGrid; ++q) sup = std::max(sup, std::abs(forward(s, act, q / double(kGrid))));
      for (Eigen::Index j = 0; j < c.u.size(); ++j) {
        for (double off : {-0.5 * eta, 0.0, 0.5 * eta}) {
          const double x = std::clamp(c.u[j] + off, 0.0, 1.0);
          sup = std::max(sup, std::abs(forward(s, act, x)));
        }
      }
      t.add(sup, c.M);
    }
    out.push_back(t.report());
  }

  {  // |a*_0j| <= 2M and the gradient perturbation bound
    BoundTracker coef("heaviside coefficients: |a*_0j| <= 2M", 1e-12);
    BoundTracker pert("heaviside coefficients: |dL/du_j(a) - dL/du_j(a*_0)| bound", 1e-12);
    for (std::size_t k = 0; k < trials; ++k) {
      const double eta = pick_eta();
      const RandomConfig c = random_config(rng, eta, true);
      const Activation act = Activation::sigmoid(eta);
      const Vector a0 = best_fit_heaviside(c.u, c.target);
      coef.add(a0.cwiseAbs().maxCoeff(), 2.0 * c.M);
      Vector a = a0;
      const double scale = std::pow(10.0, -3.0 + 3.0 * unit(rng));
      for (Eigen::Index j = 0; j < a.size(); ++j) a[j] += scale * gauss(rng);
      const Vector g0 = population_gradient(NetworkState(a0, c.u), act, c.target).u;
      const Vector g1 = population_gradient(NetworkState(a, c.u), act, c.target).u;
      const double d = (a - a0).norm();
      const double s = std::sqrt(static_cast<double>(c.u.size() + 1));
      pert.add((g1 - g0).cwiseAbs().maxCoeff(), 2.0 * c.M * (s + 1.0) * d + s * d * d);
    }
    out.push_back(coef.report());
    out.push_back(pert.report());
  }

  {  // ||a*_eta - a*_0|| <= 16 M sqrt(m+1) eta / Delta
    BoundTracker t("best-fit shift: ||a*_eta - a*_0|| <= 16 M sqrt(m+1) eta / Delta", 1e-12);
    for (std::size_t k = 0; k < trials; ++k) {
      const double eta = pick_eta();
      const RandomConfig c = random_config(rng, eta, false);
      const Vector ae = best_fit(c.u, Activation::sigmoid(eta), c.target);
      const Vector a0 = best_fit(c.u, Activation::step(), c.target);
      const double s = std::sqrt(static_cast<double>(c.u.size() + 1));
      t.add((ae - a0).norm(), 16.0 * c.M * s * eta / min_spacing(c.u, eta));
    }
    out.push_back(t.report());
  }

  {  // gradient norms at arbitrary (a, u)
    BoundTracker gu("gradient norms: ||grad_u L|| <= sqrt(m+1)||a||^2 + M||a||", 1e-12);
    BoundTracker ga("gradient norms: ||grad_a L|| <= sqrt(m+1)(||a|| sqrt(m+1) + M)", 1e-12);
    for (std::size_t k = 0; k < trials; ++k) {
      const double eta = pick_eta();
      const RandomConfig c = random_config(rng, eta, false);
      Vector u = c.u;
      for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = unit(rng);
      Vector a(u.size() + 1);
      const double scale = std::pow(10.0, -2.0 + 3.0 * unit(rng));
      for (Eigen::Index j = 0; j < a.size(); ++j) a[j] = scale * gauss(rng);
      const Gradient g = population_gradient(NetworkState(a, u), Activation::sigmoid(eta), c.target);
      const double s = std::sqrt(static_cast<double>(u.size() + 1));
      gu.add(g.u.norm(), s * a.squaredNorm() + c.M * a.norm());
      ga.add(g.a.norm(), s * (a.norm() * s + c.M));
    }
    out.push_back(gu.report());
    out.push_back(ga.report());
  }

  {  // a neuron within eta of every jump gives error <= 6 M^2 eta n
    BoundTracker t("aligned error: int |f_eta(a*_eta) - f*|^2 <= 6 M^2 eta n", 1e-12);
    for (std::size_t k = 0; k < trials; ++k) {
      const double eta = pick_eta();
      for (;;) {
        RandomConfig c = random_config(rng, eta, false);
        if (3.0 * eta > c.target.min_piece_length()) continue;
        Vector u = c.u;
        for (double v : c.target.kinks()) {
          Eigen::Index nearest = 0;
          (u.array() - v).abs().minCoeff(&nearest);
          u[nearest] = v + eta * (2.0 * unit(rng) - 1.0);
        }
        const Activation act = Activation::sigmoid(eta);
        if (!is_admissible(u, act)) continue;
        const auto align = alignment_report(u, c.target);
        if (*std::max_element(align.begin(), align.end()) >= eta) continue;
        const Vector a = best_fit(u, act, c.target);
        const double n = static_cast<double>(c.target.pieces());
        t.add(2.0 * loss(a, u, act, c.target), 6.0 * c.M * c.M * eta * n);
        break;
      }
    }
    out.push_back(t.report());
  }
  return out;
}

inline void write_report_table(std::ostream& os, const std::vector<OracleReport>& rs) {
  char line[256];
  std::snprintf(line, sizeof line, "%-70s %8s %6s %12s %12s %10s\n", "check", "trials",
                "fail", "worst lhs", "bound", "lhs/bound");
  os << line;
  for (const auto& r : rs) {
    std::snprintf(line, sizeof line, "%-70s %8zu %6zu %12.4e %12.4e %10.3e  %s\n",
                  r.name.c_str(), r.trials, r.violations, r.computed, r.reference,
                  r.rel_error, r.pass ? "PASS" : "FAIL");
    os << line;
  }
}

inline void write_report_csv(std::ostream& os, const std::vector<OracleReport>& rs) {
  os << "check,trials,violations,computed,reference,abs_error,rel_error,tolerance,pass\n";
  for (const auto& r : rs) {
    os << '"' << r.name << "\"," << r.trials << ',' << r.violations << ','
       << format_number(r.computed) << ',' << format_number(r.reference) << ','
       << format_number(r.abs_error) << ',' << format_number(r.rel_error) << ','
       << format_number(r.tolerance) << ',' << (r.pass ? "true" : "false") << '\n';
  }
}

}  // namespace tts
