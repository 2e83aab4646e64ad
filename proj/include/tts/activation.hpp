#pragma once

#include <cmath>
#include <vector>

#include "tts/errors.hpp"
#include "tts/quadrature.hpp"

namespace tts {

/// The base sigmoid: a C^1 piecewise cubic that is 0 below -1/2, 1 above
/// 1/2, and such that sigma - 1/2 is odd.
inline double base_sigmoid(double x) {
  if (x <= -0.5) return 0.0;
  if (x >= 0.5) return 1.0;
  if (x <= 0.0) {
    const double s = x + 0.5;
    return 4.0 * s * s * s;
  }
  const double s = 0.5 - x;
  return 1.0 - 4.0 * s * s * s;
}

inline double base_sigmoid_prime(double x) {
  if (x <= -0.5 || x >= 0.5) return 0.0;
  const double s = x <= 0.0 ? x + 0.5 : 0.5 - x;
  return 12.0 * s * s;
}

/// Heaviside step with the midpoint value 1/2 at the origin.
inline double heaviside(double x) {
  if (x < 0.0) return 0.0;
  if (x > 0.0) return 1.0;
  return 0.5;
}

/// Integral of the squared base sigmoid over [-1/2, 1/2]. Computed once by
/// exact piecewise quadrature.
inline double base_sigmoid_square_integral() {
  static const double value = [] {
    const double cuts[] = {0.0};
    return integrate_piecewise(
        [](double x) {
          const double s = base_sigmoid(x);
          return s * s;
        },
        cuts, -0.5, 0.5);
  }();
  return value;
}

enum class ActivationKind { smooth_sigmoid, heaviside, relu };

/// The non-linearity sigma_eta(x) = sigma(x / eta), its eta -> 0 limit, and
/// the ReLU variant.
class Activation {
 public:
  static Activation sigmoid(double eta) {
    if (!(eta > 0.0) || !std::isfinite(eta)) {
      throw PreconditionError("smooth sigmoid requires eta > 0");
    }
    return Activation(ActivationKind::smooth_sigmoid, eta);
  }
  static Activation step() { return Activation(ActivationKind::heaviside, 0.0); }
  static Activation relu() { return Activation(ActivationKind::relu, 0.0); }

  ActivationKind kind() const { return kind_; }
  double eta() const { return eta_; }
  bool differentiable() const { return kind_ != ActivationKind::heaviside; }

  double operator()(double x) const {
    switch (kind_) {
      case ActivationKind::smooth_sigmoid:
        return base_sigmoid(x / eta_);
      case ActivationKind::heaviside:
        return heaviside(x);
      case ActivationKind::relu:
        return x > 0.0 ? x : 0.0;
    }
    return 0.0;
  }

  double derivative(double x) const {
    switch (kind_) {
      case ActivationKind::smooth_sigmoid:
        return base_sigmoid_prime(x / eta_) / eta_;
      case ActivationKind::heaviside:
        throw PreconditionError("heaviside activation has no pointwise derivative");
      case ActivationKind::relu:
        return x > 0.0 ? 1.0 : 0.0;  // subgradient 0 at the kink
    }
    return 0.0;
  }

  /// Left end of the region where the derivative may be non-zero.
  double support_begin(double u) const {
    return kind_ == ActivationKind::smooth_sigmoid ? u - 0.5 * eta_ : u;
  }
  /// Right end of that region (infinite for ReLU).
  double support_end(double u) const {
    switch (kind_) {
      case ActivationKind::smooth_sigmoid:
        return u + 0.5 * eta_;
      case ActivationKind::heaviside:
        return u;
      case ActivationKind::relu:
        return HUGE_VAL;
    }
    return u;
  }

  /// Points where x -> sigma(x - u) switches polynomial piece.
  void append_kinks(double u, std::vector<double>& out) const {
    if (kind_ == ActivationKind::smooth_sigmoid) {
      out.push_back(u - 0.5 * eta_);
      out.push_back(u);
      out.push_back(u + 0.5 * eta_);
    } else {
      out.push_back(u);
    }
  }

  /// Diagonal Hessian correction eta * (int sigma^2 - 1/2), independent of
  /// the positions on the admissible set.
  double diagonal_correction() const {
    if (kind_ != ActivationKind::smooth_sigmoid) return 0.0;
    return eta_ * (base_sigmoid_square_integral() - 0.5);
  }

 private:
  Activation(ActivationKind kind, double eta) : kind_(kind), eta_(eta) {}

  ActivationKind kind_;
  double eta_;
};

}  // namespace tts
