#pragma once

// One-pass SGD with separate stepsizes h (outer weights) and eps*h
// (positions). Batch gradients are averaged.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tts/activation.hpp"
#include "tts/dynamics.hpp"
#include "tts/errors.hpp"
#include "tts/network.hpp"
#include "tts/quadratic.hpp"
#include "tts/record.hpp"
#include "tts/targets.hpp"

namespace tts {

enum class Noise { none, uniform };

inline const char* to_string(Noise n) { return n == Noise::none ? "none" : "uniform"; }

inline Noise parse_noise(const std::string& s) {
  if (s == "none") return Noise::none;
  if (s == "uniform") return Noise::uniform;
  throw ConfigError("unknown noise '" + s + "' (expected none or uniform)");
}

using Rng = std::mt19937_64;

struct SgdConfig {
  double h = 1e-3;
  double epsilon = 1.0;
  std::uint64_t steps = 0;
  std::size_t batch_size = 1;
  Noise noise = Noise::none;
  std::uint64_t seed = 0;
  std::uint64_t eval_every = 1000;

  void validate() const {
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("sgd: h must be > 0");
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("sgd: epsilon must be >= 0");
    if (batch_size == 0) throw ConfigError("sgd: batch_size must be >= 1");
    if (eval_every == 0) throw ConfigError("sgd: eval_every must be >= 1");
  }
};

inline constexpr double kDivergenceBound = 1e3;

/// Inputs are rows of x (batch_size x d); y holds the noisy labels.
struct Batch {
  Matrix x;
  Vector y;
};

inline double draw_noise(Noise noise, Rng& rng) {
  if (noise == Noise::none) return 0.0;
  return std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
}

/// Fills `out` in place. For each sample the coordinates are drawn first,
/// then the noise.
template <UnivariateTarget T>
void sample_batch_into(Batch& out, const T& target, Noise noise,
                       std::size_t batch_size, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(batch_size);
  out.x.resize(n, 1);
  out.y.resize(n);
  for (Eigen::Index s = 0; s < n; ++s) {
    const double x = unif(rng);
    out.x(s, 0) = x;
    out.y[s] = target(x) + draw_noise(noise, rng);
  }
}

inline void sample_batch_into(Batch& out, const AdditiveTarget& target, Noise noise,
                              std::size_t batch_size, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(batch_size);
  const auto d = static_cast<Eigen::Index>(target.dim());
  out.x.resize(n, d);
  out.y.resize(n);
  for (Eigen::Index s = 0; s < n; ++s) {
    double y = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double x = unif(rng);
      out.x(s, k) = x;
      y += target.axis(static_cast<std::size_t>(k))(x);
    }
    out.y[s] = y + draw_noise(noise, rng);
  }
}

template <class T>
Batch sample_batch(const T& target, Noise noise, std::size_t batch_size, Rng& rng) {
  Batch b;
  sample_batch_into(b, target, noise, batch_size, rng);
  return b;
}

/// a <- a - h * mean grad_a l,  u <- u - eps h * mean grad_u l.
inline void sgd_step_inplace(NetworkState& s, const Activation& act,
                             const Batch& batch, double h, double epsilon,
                             Gradient& work) {
  if (!act.differentiable()) {
    throw PreconditionError("sgd_step: heaviside activation is not differentiable");
  }
  const Eigen::Index m = s.neurons();
  work.a.setZero(m + 1);
  work.u.setZero(m);
  for (Eigen::Index b = 0; b < batch.y.size(); ++b) {
    const double x = batch.x(b, 0);
    const double r = forward(s, act, x) - batch.y[b];
    if (r == 0.0) continue;
    work.a[0] += r;
    for (Eigen::Index j = 0; j < m; ++j) {
      const double z = x - s.u[j];
      work.a[j + 1] += act(z) * r;
      work.u[j] -= s.a[j + 1] * act.derivative(z) * r;
    }
  }
  const double scale = h / static_cast<double>(batch.y.size());
  s.a -= scale * work.a;
  if (epsilon != 0.0) s.u -= (epsilon * scale) * work.u;
}

inline NetworkState sgd_step(NetworkState s, const Activation& act,
                             const Batch& batch, double h, double epsilon) {
  Gradient work;
  sgd_step_inplace(s, act, batch, h, epsilon, work);
  return s;
}

inline void sgd_step_inplace(AdditiveState& s, const Activation& act,
                             const Batch& batch, double h, double epsilon,
                             AdditiveGradient& work) {
  if (!act.differentiable()) {
    throw PreconditionError("sgd_step: heaviside activation is not differentiable");
  }
  const Eigen::Index m = s.neurons();
  const Eigen::Index d = s.dim();
  if (batch.x.cols() != d) throw PreconditionError("sgd_step: input dimension mismatch");
  work.bias = 0.0;
  work.A.setZero(m, d);
  work.U.setZero(m, d);
  for (Eigen::Index b = 0; b < batch.y.size(); ++b) {
    double f = s.bias;
    for (Eigen::Index k = 0; k < d; ++k) {
      for (Eigen::Index j = 0; j < m; ++j) f += s.A(j, k) * act(batch.x(b, k) - s.U(j, k));
    }
    const double r = f - batch.y[b];
    if (r == 0.0) continue;
    work.bias += r;
    for (Eigen::Index k = 0; k < d; ++k) {
      for (Eigen::Index j = 0; j < m; ++j) {
        const double z = batch.x(b, k) - s.U(j, k);
        work.A(j, k) += act(z) * r;
        work.U(j, k) -= s.A(j, k) * act.derivative(z) * r;
      }
    }
  }
  const double scale = h / static_cast<double>(batch.y.size());
  s.bias -= scale * work.bias;
  s.A -= scale * work.A;
  if (epsilon != 0.0) s.U -= (epsilon * scale) * work.U;
}

inline AdditiveState sgd_step(AdditiveState s, const Activation& act,
                              const Batch& batch, double h, double epsilon) {
  AdditiveGradient work;
  sgd_step_inplace(s, act, batch, h, epsilon, work);
  return s;
}

namespace detail {

template <class State>
struct GradientOf;
template <>
struct GradientOf<NetworkState> {
  using type = Gradient;
};
template <>
struct GradientOf<AdditiveState> {
  using type = AdditiveGradient;
};

inline double weight_norm(const NetworkState& s) { return s.a.norm(); }
inline double weight_norm(const AdditiveState& s) {
  return std::sqrt(s.bias * s.bias + s.A.squaredNorm());
}

template <UnivariateTarget T>
void push_snapshot(RunRecord& rec, double p, double tau, const NetworkState& s,
                   const Activation& act, const T& target) {
  rec.push(p, s.a, s.u, loss(s.a, s.u, act, target), alignment_report(s.u, target),
           {tau});
}

inline void push_snapshot(RunRecord& rec, double p, double tau, const AdditiveState& s,
                          const Activation& act, const AdditiveTarget& target) {
  Vector a(1 + s.A.size());
  a[0] = s.bias;
  a.tail(s.A.size()) = Eigen::Map<const Vector>(s.A.data(), s.A.size());
  const Vector u = Eigen::Map<const Vector>(s.U.data(), s.U.size());
  std::vector<double> align;
  for (std::size_t k = 0; k < target.dim(); ++k) {
    const auto col = s.U.col(static_cast<Eigen::Index>(k));
    const auto part = alignment_report(Vector(col), target.axis(k));
    align.insert(align.end(), part.begin(), part.end());
  }
  rec.push(p, std::move(a), u, additive_loss(s, act, target), std::move(align), {tau});
}

}  // namespace detail

/// Runs config.steps iterations; the time column is the iteration count and
/// the extra column "tau" is eps * h * p. Losses are exact population losses
/// against the noiseless target.
template <class State, class T>
RunRecord train(State state, const T& target, const Activation& act,
                const SgdConfig& config) {
  config.validate();
  Rng rng(config.seed);
  RunRecord rec;
  rec.extra_names = {"tau"};
  Batch batch;
  typename detail::GradientOf<State>::type work;

  const double tau_rate = config.epsilon * config.h;
  detail::push_snapshot(rec, 0.0, 0.0, state, act, target);
  for (std::uint64_t p = 1; p <= config.steps; ++p) {
    sample_batch_into(batch, target, config.noise, config.batch_size, rng);
    sgd_step_inplace(state, act, batch, config.h, config.epsilon, work);
    const bool due = p % config.eval_every == 0 || p == config.steps;
    const double norm = detail::weight_norm(state);
    if (!(norm <= kDivergenceBound)) {
      const auto pd = static_cast<double>(p);
      detail::push_snapshot(rec, pd, tau_rate * pd, state, act, target);
      std::ostringstream os;
      os << "weights diverged at step " << p << " (|a| = " << norm << " > "
         << kDivergenceBound << ")";
      rec.halt(RunStatus::diverged, os.str());
      return rec;
    }
    if (due) {
      const auto pd = static_cast<double>(p);
      detail::push_snapshot(rec, pd, tau_rate * pd, state, act, target);
    }
  }
  return rec;
}

}  // namespace tts
