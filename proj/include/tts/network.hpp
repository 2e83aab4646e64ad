#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tts/activation.hpp"
#include "tts/errors.hpp"
#include "tts/quadratic.hpp"
#include "tts/quadrature.hpp"
#include "tts/targets.hpp"

namespace tts {

/// Shallow univariate network f(x) = a_0 + sum_j a_j sigma(x - u_j).
/// Neurons are stored in their original order; operations that need the
/// ascending order go through sorted_order().
struct NetworkState {
  Vector a;  // m + 1 weights, a[0] is the bias
  Vector u;  // m positions

  NetworkState() = default;
  NetworkState(Vector weights, Vector positions)
      : a(std::move(weights)), u(std::move(positions)) {
    if (a.size() != u.size() + 1) {
      throw PreconditionError("network state: a must have m+1 entries for m positions");
    }
  }
  static NetworkState zeros(Vector positions) {
    Vector w = Vector::Zero(positions.size() + 1);
    return NetworkState(std::move(w), std::move(positions));
  }
  Eigen::Index neurons() const { return u.size(); }
};

struct Gradient {
  Vector a;
  Vector u;
};

inline double forward(const NetworkState& s, const Activation& act, double x) {
  double y = s.a[0];
  for (Eigen::Index j = 0; j < s.u.size(); ++j) y += s.a[j + 1] * act(x - s.u[j]);
  return y;
}

/// Gradient of l = 1/2 (y - f(x))^2 in (a, u).
inline Gradient sample_gradient(const NetworkState& s, const Activation& act,
                                double x, double y) {
  if (!act.differentiable()) {
    throw PreconditionError("sample_gradient: heaviside activation is not differentiable");
  }
  const double r = forward(s, act, x) - y;
  Gradient g{Vector(s.a.size()), Vector(s.u.size())};
  g.a[0] = r;
  for (Eigen::Index j = 0; j < s.u.size(); ++j) {
    const double z = x - s.u[j];
    g.a[j + 1] = act(z) * r;
    g.u[j] = -s.a[j + 1] * act.derivative(z) * r;
  }
  return g;
}

/// Evaluates f(x) in O(log m + window) for saturating activations by
/// summing fully-on neurons through prefix sums over sorted positions.
class SortedEvaluator {
 public:
  SortedEvaluator(const NetworkState& s, const Activation& act)
      : act_(act), bias_(s.a[0]) {
    const auto order = sorted_order(s.u);
    pos_.reserve(order.size());
    w_.reserve(order.size());
    prefix_.assign(order.size() + 1, 0.0);
    for (std::size_t k = 0; k < order.size(); ++k) {
      pos_.push_back(s.u[static_cast<Eigen::Index>(order[k])]);
      w_.push_back(s.a[static_cast<Eigen::Index>(order[k]) + 1]);
      prefix_[k + 1] = prefix_[k] + w_.back();
    }
  }

  double operator()(double x) const {
    const double half = 0.5 * act_.eta();
    const auto lo = static_cast<std::size_t>(
        std::upper_bound(pos_.begin(), pos_.end(), x - half) - pos_.begin());
    const auto hi = static_cast<std::size_t>(
        std::lower_bound(pos_.begin(), pos_.end(), x + half) - pos_.begin());
    double y = bias_ + prefix_[lo];
    for (std::size_t k = lo; k < hi; ++k) y += w_[k] * act_(x - pos_[k]);
    return y;
  }

 private:
  Activation act_;
  double bias_;
  std::vector<double> pos_;
  std::vector<double> w_;
  std::vector<double> prefix_;
};

/// Exact gradient of the population loss. The a-block is H a - b; each
/// u-component integrates sigma'(x - u_j) (f(x) - f*(x)) over the support of
/// sigma' with exact piecewise quadrature.
template <UnivariateTarget T>
Gradient population_gradient(const NetworkState& s, const Activation& act,
                             const T& target) {
  if (!act.differentiable()) {
    throw PreconditionError("population_gradient: requires eta > 0");
  }
  Gradient g;
  g.a = gram(s.u, act) * s.a - linear_term(s.u, act, target);
  g.u.resize(s.u.size());

  std::vector<double> cuts;
  for (Eigen::Index k = 0; k < s.u.size(); ++k) act.append_kinks(s.u[k], cuts);
  const auto tk = target.kinks();
  cuts.insert(cuts.end(), tk.begin(), tk.end());
  std::sort(cuts.begin(), cuts.end());

  const bool saturating = act.kind() == ActivationKind::smooth_sigmoid;
  const SortedEvaluator fast(s, saturating ? act : Activation::sigmoid(1.0));
  auto net = [&](double x) { return saturating ? fast(x) : forward(s, act, x); };

  for (Eigen::Index j = 0; j < s.u.size(); ++j) {
    const double aj = s.a[j + 1];
    if (aj == 0.0) {
      g.u[j] = 0.0;
      continue;
    }
    const double uj = s.u[j];
    const double lo = std::max(act.support_begin(uj), 0.0);
    const double hi = std::min(act.support_end(uj), 1.0);
    const auto first = std::upper_bound(cuts.begin(), cuts.end(), lo);
    const auto last = std::lower_bound(first, cuts.end(), hi);
    const double integral = integrate_piecewise(
        [&](double x) { return act.derivative(x - uj) * (net(x) - target(x)); },
        std::span<const double>(&*first, static_cast<std::size_t>(last - first)),
        lo, hi);
    g.u[j] = -aj * integral;
  }
  return g;
}

/// Additive multi-dimensional network
///   f(x) = bias + sum_j sum_k A(j, k) sigma(x_k - U(j, k)).
struct AdditiveState {
  double bias = 0.0;
  Matrix A;  // m x d weights
  Matrix U;  // m x d positions

  Eigen::Index neurons() const { return A.rows(); }
  Eigen::Index dim() const { return A.cols(); }
};

struct AdditiveGradient {
  double bias = 0.0;
  Matrix A;
  Matrix U;
};

inline double forward(const AdditiveState& s, const Activation& act,
                      std::span<const double> x) {
  if (static_cast<Eigen::Index>(x.size()) != s.dim()) {
    throw PreconditionError("forward: input dimension mismatch");
  }
  double y = s.bias;
  for (Eigen::Index k = 0; k < s.dim(); ++k) {
    for (Eigen::Index j = 0; j < s.neurons(); ++j) {
      y += s.A(j, k) * act(x[static_cast<std::size_t>(k)] - s.U(j, k));
    }
  }
  return y;
}

inline AdditiveGradient sample_gradient(const AdditiveState& s,
                                        const Activation& act,
                                        std::span<const double> x, double y) {
  if (!act.differentiable()) {
    throw PreconditionError("sample_gradient: heaviside activation is not differentiable");
  }
  const double r = forward(s, act, x) - y;
  AdditiveGradient g{r, Matrix(s.neurons(), s.dim()), Matrix(s.neurons(), s.dim())};
  for (Eigen::Index k = 0; k < s.dim(); ++k) {
    for (Eigen::Index j = 0; j < s.neurons(); ++j) {
      const double z = x[static_cast<std::size_t>(k)] - s.U(j, k);
      g.A(j, k) = act(z) * r;
      g.U(j, k) = -s.A(j, k) * act.derivative(z) * r;
    }
  }
  return g;
}

/// Exact population loss of the additive model under the uniform law on
/// [0,1]^d. Coordinates are independent, so with e_k(t) the per-axis
/// residual, E[r^2] = (bias + sum mu_k)^2 + sum (E e_k^2 - mu_k^2).
inline double additive_loss(const AdditiveState& s, const Activation& act,
                            const AdditiveTarget& target) {
  if (static_cast<std::size_t>(s.dim()) != target.dim()) {
    throw PreconditionError("additive_loss: dimension mismatch");
  }
  double mean = s.bias;
  double var = 0.0;
  std::vector<double> cuts;
  for (Eigen::Index k = 0; k < s.dim(); ++k) {
    const auto& tk = target.axis(static_cast<std::size_t>(k));
    cuts.clear();
    for (Eigen::Index j = 0; j < s.neurons(); ++j) act.append_kinks(s.U(j, k), cuts);
    cuts.insert(cuts.end(), tk.kinks().begin(), tk.kinks().end());
    auto e = [&](double t) {
      double g = -tk(t);
      for (Eigen::Index j = 0; j < s.neurons(); ++j) g += s.A(j, k) * act(t - s.U(j, k));
      return g;
    };
    const double mu = integrate_piecewise(e, cuts, 0.0, 1.0);
    const double sq = integrate_piecewise(
        [&](double t) {
          const double v = e(t);
          return v * v;
        },
        cuts, 0.0, 1.0);
    mean += mu;
    var += sq - mu * mu;
  }
  return 0.5 * (mean * mean + std::max(var, 0.0));
}

}  // namespace tts
