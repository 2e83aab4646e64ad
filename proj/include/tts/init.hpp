#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "tts/errors.hpp"
#include "tts/network.hpp"
#include "tts/quadratic.hpp"
#include "tts/sgd.hpp"
#include "tts/targets.hpp"

namespace tts {

/// Zero weights and i.i.d. uniform positions on [0, 1].
inline NetworkState sample_init(Eigen::Index m, Rng& rng) {
  if (m < 1) throw PreconditionError("sample_init: m must be >= 1");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector u(m);
  for (Eigen::Index j = 0; j < m; ++j) u[j] = unif(rng);
  return NetworkState::zeros(std::move(u));
}

/// Uniform positions on [0, 1] conditioned on Delta(u) >= D (boundary
/// conventions at -eta/2 and 1 + eta/2). Exact: the m + 1 gaps minus D are
/// the spacings of m sorted uniforms on a shortened interval.
inline NetworkState sample_spaced_init(Eigen::Index m, double eta, double D, Rng& rng) {
  if (m < 1) throw PreconditionError("sample_spaced_init: m must be >= 1");
  const double slack = 1.0 + eta - static_cast<double>(m + 1) * D;
  if (!(slack > 0.0)) throw PreconditionError("sample_spaced_init: D too large for m neurons");
  std::uniform_real_distribution<double> unif(0.0, slack);
  std::vector<double> y(static_cast<std::size_t>(m));
  for (double& v : y) v = unif(rng);
  std::sort(y.begin(), y.end());
  Vector u(m);
  for (std::size_t k = 0; k < y.size(); ++k) {
    u[static_cast<Eigen::Index>(k)] = -0.5 * eta + y[k] + static_cast<double>(k + 1) * D;
  }
  // Present the neurons in random order, like an i.i.d. draw.
  for (Eigen::Index k = m - 1; k > 0; --k) {
    std::uniform_int_distribution<Eigen::Index> pick(0, k);
    std::swap(u[k], u[pick(rng)]);
  }
  return NetworkState::zeros(std::move(u));
}

/// Multi-dimensional start: weights uniform on [0, 3], positions uniform on
/// [0, 1], zero bias.
inline AdditiveState sample_additive_init(Eigen::Index m, Eigen::Index d, Rng& rng) {
  if (m < 1 || d < 1) throw PreconditionError("sample_additive_init: m, d must be >= 1");
  std::uniform_real_distribution<double> w(0.0, 3.0), p(0.0, 1.0);
  AdditiveState s;
  s.A.resize(m, d);
  s.U.resize(m, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index j = 0; j < m; ++j) {
      s.A(j, k) = w(rng);
      s.U(j, k) = p(rng);
    }
  }
  return s;
}

/// Univariate counterpart used for the ReLU experiment.
inline NetworkState sample_weighted_init(Eigen::Index m, Rng& rng) {
  if (m < 1) throw PreconditionError("sample_weighted_init: m must be >= 1");
  std::uniform_real_distribution<double> w(0.0, 3.0), p(0.0, 1.0);
  Vector a = Vector::Zero(m + 1);
  Vector u(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    a[j + 1] = w(rng);
    u[j] = p(rng);
  }
  return NetworkState(std::move(a), std::move(u));
}

inline constexpr std::size_t kNeuronsPerPiece = 6;

struct GoodnessReport {
  bool is_good = false;
  bool enough_neurons = false;  // (a) at least 6 neurons in every closed piece
  bool spaced = false;          // (b) Delta(u) >= D
  bool asymmetric = false;      // (c) |u^R + u^L - 2v| >= D at every jump
  std::vector<std::string> witnesses;
};

inline GoodnessReport is_D_good(const Vector& u, const PiecewiseConstantTarget& target,
                                double D, double eta) {
  GoodnessReport r;

  r.enough_neurons = true;
  for (std::size_t p = 0; p < target.pieces(); ++p) {
    const double lo = target.breakpoint(p), hi = target.breakpoint(p + 1);
    std::size_t count = 0;
    for (Eigen::Index j = 0; j < u.size(); ++j) count += (u[j] >= lo && u[j] <= hi);
    if (count < kNeuronsPerPiece) {
      r.enough_neurons = false;
      r.witnesses.push_back("(a) piece [" + detail::fmt_num(lo) + "," + detail::fmt_num(hi) + "] holds " +
                            std::to_string(count) + " neurons");
    }
  }

  const double delta = min_spacing(u, eta);
  r.spaced = delta >= D;
  if (!r.spaced) {
    r.witnesses.push_back("(b) Delta(u) = " + detail::fmt_num(delta) + " < D = " + detail::fmt_num(D));
  }

  r.asymmetric = true;
  const auto fl = flanks(u, target.kinks());
  for (std::size_t i = 1; i <= target.discontinuities(); ++i) {
    const FlankPair& f = fl[i - 1];
    const double v = target.breakpoint(i);
    if (!f.complete()) {
      r.asymmetric = false;
      r.witnesses.push_back("(c) no neuron on one side of v = " + detail::fmt_num(v));
      continue;
    }
    const double skew = std::abs(f.u_right + f.u_left - 2.0 * v);
    if (!(skew >= D)) {
      r.asymmetric = false;
      r.witnesses.push_back("(c) |u^R + u^L - 2v| = " + detail::fmt_num(skew) + " < D at v = " +
                            detail::fmt_num(v));
    }
  }

  r.is_good = r.enough_neurons && r.spaced && r.asymmetric;
  return r;
}

struct ProbabilityEstimate {
  std::size_t successes = 0;
  std::size_t trials = 0;
  double frequency = 0.0;
  double lower = 0.0;  // Wilson 95% interval
  double upper = 0.0;
  double half_width() const { return 0.5 * (upper - lower); }
};

inline constexpr double kZ95 = 1.959963984540054;

inline ProbabilityEstimate wilson_interval(std::size_t successes, std::size_t trials,
                                           double z = kZ95) {
  if (trials == 0) throw PreconditionError("wilson_interval: trials must be >= 1");
  ProbabilityEstimate e;
  e.successes = successes;
  e.trials = trials;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  e.frequency = p;
  const double z2 = z * z;
  const double center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z / (1.0 + z2 / n) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  e.lower = std::max(0.0, center - half);
  e.upper = std::min(1.0, center + half);
  return e;
}

/// Monte-Carlo frequency of D-goodness for i.i.d. uniform positions. Each
/// trial draws from its own generator seeded by the master stream.
inline ProbabilityEstimate estimate_good_probability(Eigen::Index m,
                                                     const PiecewiseConstantTarget& target,
                                                     double D, double eta,
                                                     std::size_t trials, Rng& rng) {
  if (trials < 1) throw PreconditionError("estimate_good_probability: trials must be >= 1");
  std::size_t good = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng sub(rng());
    const NetworkState s = sample_init(m, sub);
    good += is_D_good(s.u, target, D, eta).is_good;
  }
  return wilson_interval(good, trials);
}

/// Smallest m with m >= (6 / delta_v)(4 + log n + log(1/delta)).
inline Eigen::Index minimal_width(std::size_t n, double delta_v, double delta) {
  if (!(delta_v > 0.0) || !(delta > 0.0 && delta < 1.0) || n < 1) {
    throw PreconditionError("minimal_width: need delta_v > 0, 0 < delta < 1, n >= 1");
  }
  const double bound =
      6.0 / delta_v * (4.0 + std::log(static_cast<double>(n)) + std::log(1.0 / delta));
  return static_cast<Eigen::Index>(std::ceil(bound - 1e-12));
}

/// D = delta / (6 (m+1)^2).
inline double goodness_margin(Eigen::Index m, double delta) {
  const double mp1 = static_cast<double>(m + 1);
  return delta / (6.0 * mp1 * mp1);
}

/// Margin D = 2^{13/2} sqrt(m+1) M sqrt(eta) / Delta_f under which the limit
/// flow is guaranteed to align a neuron with every discontinuity.
inline double recovery_margin(Eigen::Index m, double M, double eta, double delta_f) {
  return std::pow(2.0, 6.5) * std::sqrt(static_cast<double>(m + 1)) * M * std::sqrt(eta) / delta_f;
}

/// Sufficient thresholds eta <= Q1, eps <= Q2 of the high-probability
/// recovery guarantee, with C1 = 2^-21 and C2 = 2^-36.
struct RecoveryThresholds {
  double q1;
  double q2;
};

inline RecoveryThresholds recovery_thresholds(double xi, double delta, Eigen::Index m,
                                              double delta_f, double M) {
  if (!(xi > 0.0) || !(delta > 0.0) || m < 1 || !(delta_f > 0.0) || !(M >= 1.0)) {
    throw PreconditionError("recovery_thresholds: invalid arguments");
  }
  const double mp1 = static_cast<double>(m + 1);
  const double c1 = std::ldexp(1.0, -21), c2 = std::ldexp(1.0, -36);
  const double q1 = c1 / (M * M * mp1) *
                    std::min(delta * delta * delta_f * delta_f / std::pow(mp1, 4.0), xi);
  const double q2 = c2 * delta * delta / (std::pow(M, 4.0) * std::pow(mp1, 8.5)) *
                    std::min(delta * delta_f * delta_f / mp1, xi);
  return {q1, q2};
}

}  // namespace tts
