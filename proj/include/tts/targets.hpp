#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tts/errors.hpp"

namespace tts {

/// A univariate ground truth on [0, 1] that can be integrated exactly: it is a
/// polynomial of degree <= 1 between consecutive kinks.
template <class T>
concept UnivariateTarget = requires(const T& t, double x) {
  { t(x) } -> std::convertible_to<double>;
  { t.kinks() } -> std::convertible_to<std::span<const double>>;
  { t.sup_norm() } -> std::convertible_to<double>;
};

/// Parameters (n, Delta v, Delta f, M) of the piecewise-constant class.
struct ClassParams {
  std::size_t n = 2;
  double delta_v = 0.5;
  double delta_f = 1.0;
  double M = 1.0;
};

struct ClassValidation {
  bool ok = true;
  std::vector<std::string> violations;
};

/// Piecewise-constant function: value values[i] on (breakpoints[i],
/// breakpoints[i+1]). Right-continuous at interior breakpoints.
class PiecewiseConstantTarget {
 public:
  PiecewiseConstantTarget() = default;

  PiecewiseConstantTarget(std::vector<double> breakpoints,
                          std::vector<double> values)
      : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
    if (values_.empty() || breakpoints_.size() != values_.size() + 1) {
      throw PreconditionError(
          "piecewise-constant target needs n values and n+1 breakpoints");
    }
    if (breakpoints_.front() != 0.0 || breakpoints_.back() != 1.0) {
      throw PreconditionError("breakpoints must start at 0 and end at 1");
    }
    for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) {
      if (!(breakpoints_[i] < breakpoints_[i + 1])) {
        throw PreconditionError("breakpoints must be strictly increasing");
      }
    }
    for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
      if (values_[i] == values_[i + 1]) {
        throw PreconditionError("adjacent pieces must have different values");
      }
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw PreconditionError("non-finite target value");
    }
  }

  std::size_t pieces() const { return values_.size(); }
  std::size_t discontinuities() const { return values_.size() - 1; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }

  /// Interior breakpoints v_1 .. v_{n-1}.
  std::span<const double> kinks() const {
    return std::span<const double>(breakpoints_).subspan(1, discontinuities());
  }
  double breakpoint(std::size_t i) const { return breakpoints_[i]; }
  /// Jump f_i - f_{i-1} across the i-th interior breakpoint (1-based).
  double jump(std::size_t i) const { return values_[i] - values_[i - 1]; }

  /// Index of the piece containing x (right-continuous; x = 1 maps to the
  /// last piece).
  std::size_t piece_index(double x) const {
    const auto it =
        std::upper_bound(breakpoints_.begin() + 1, breakpoints_.end() - 1, x);
    return static_cast<std::size_t>(it - (breakpoints_.begin() + 1));
  }

  double operator()(double x) const { return values_[piece_index(x)]; }
  double eval(double x) const { return (*this)(x); }

  double sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }
  double min_jump() const {
    double m = HUGE_VAL;
    for (std::size_t i = 1; i < values_.size(); ++i) m = std::min(m, std::abs(jump(i)));
    return m;
  }
  double min_piece_length() const {
    double m = HUGE_VAL;
    for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) {
      m = std::min(m, breakpoints_[i + 1] - breakpoints_[i]);
    }
    return m;
  }

  /// Exact integral of f* (power 1) or f*^2 (power 2) over [lo, hi].
  double integrate(double lo, double hi, int power = 1) const {
    if (power != 1 && power != 2) throw PreconditionError("power must be 1 or 2");
    lo = std::max(lo, 0.0);
    hi = std::min(hi, 1.0);
    if (!(hi > lo)) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double a = std::max(lo, breakpoints_[i]);
      const double b = std::min(hi, breakpoints_[i + 1]);
      if (b > a) {
        const double v = power == 1 ? values_[i] : values_[i] * values_[i];
        total += (b - a) * v;
      }
    }
    return total;
  }

  friend bool operator==(const PiecewiseConstantTarget&,
                         const PiecewiseConstantTarget&) = default;

 private:
  std::vector<double> breakpoints_{0.0, 1.0};
  std::vector<double> values_{0.0};
};

inline double integrate_fstar(const PiecewiseConstantTarget& target,
                              double x_lo, double x_hi, int power) {
  if (!(0.0 <= x_lo && x_lo <= x_hi && x_hi <= 1.0)) {
    throw PreconditionError("integrate_fstar requires 0 <= x_lo <= x_hi <= 1");
  }
  return target.integrate(x_lo, x_hi, power);
}

namespace detail {
// Relative slack for class-membership comparisons, so that decimal inputs
// such as 0.35 - 0.2 >= 0.15 are accepted.
inline constexpr double kClassTolerance = 1e-12;

inline std::string fmt_num(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}
}  // namespace detail

/// Checks the four membership conditions of the piecewise-constant class.
inline ClassValidation validate_class(const PiecewiseConstantTarget& t,
                                      const ClassParams& p) {
  using detail::fmt_num;
  using detail::kClassTolerance;
  ClassValidation out;
  auto fail = [&out](std::string msg) {
    out.ok = false;
    out.violations.push_back(std::move(msg));
  };
  if (p.n < 2 || !(p.delta_v > 0.0 && p.delta_v < 1.0) || !(p.delta_f > 0.0) ||
      !(p.M >= 1.0)) {
    fail("class parameters out of range");
  }
  if (t.pieces() != p.n) {
    fail("target has " + std::to_string(t.pieces()) + " pieces, expected " +
         std::to_string(p.n));
  }
  const auto& v = t.breakpoints();
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    if (v[i + 1] - v[i] < p.delta_v * (1.0 - kClassTolerance)) {
      fail("piece (" + fmt_num(v[i]) + "," + fmt_num(v[i + 1]) +
           ") shorter than Delta_v=" + fmt_num(p.delta_v));
    }
  }
  for (std::size_t i = 1; i < t.pieces(); ++i) {
    if (std::abs(t.jump(i)) < p.delta_f * (1.0 - kClassTolerance)) {
      fail("jump at " + fmt_num(v[i]) + " smaller than Delta_f=" +
           fmt_num(p.delta_f));
    }
  }
  for (std::size_t i = 0; i < t.pieces(); ++i) {
    if (std::abs(t.values()[i]) > p.M * (1.0 + kClassTolerance)) {
      fail("value " + fmt_num(t.values()[i]) + " exceeds M=" + fmt_num(p.M));
    }
  }
  return out;
}

/// Draws a random member of the class: piece lengths are Delta v plus a
/// uniform split of the slack, levels are uniform on [-M, M] restricted to
/// jumps of at least Delta f.
template <class Rng>
PiecewiseConstantTarget sample_target(const ClassParams& p, Rng& rng) {
  if (p.n < 2 || !(p.delta_v > 0.0) || !(p.delta_f > 0.0) || !(p.M >= 1.0)) {
    throw PreconditionError("invalid class parameters");
  }
  const double slack = 1.0 - static_cast<double>(p.n) * p.delta_v;
  if (slack < -detail::kClassTolerance) {
    throw PreconditionError("infeasible class parameters: n * Delta_v > 1");
  }
  if (p.delta_f > 2.0 * p.M) {
    throw PreconditionError("infeasible class parameters: Delta_f > 2M");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> cuts(p.n - 1);
  for (double& c : cuts) c = unit(rng);
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> breakpoints(p.n + 1);
  breakpoints[0] = 0.0;
  for (std::size_t i = 1; i < p.n; ++i) {
    breakpoints[i] = static_cast<double>(i) * p.delta_v +
                     std::max(slack, 0.0) * cuts[i - 1];
  }
  breakpoints[p.n] = 1.0;

  // Each level is uniform on the part of [-M, M] at least Delta f away from
  // the previous one; an empty feasible set restarts the sequence.
  std::uniform_real_distribution<double> level(-p.M, p.M);
  std::vector<double> values(p.n);
  constexpr int kMaxRestarts = 10000;
  for (int restart = 0;; ++restart) {
    if (restart >= kMaxRestarts) {
      throw PreconditionError("sample_target: level restart cap exceeded");
    }
    values[0] = level(rng);
    bool feasible = true;
    for (std::size_t i = 1; i < p.n && feasible; ++i) {
      const double below = std::max(0.0, values[i - 1] - p.delta_f + p.M);
      const double above = std::max(0.0, p.M - (values[i - 1] + p.delta_f));
      if (!(below + above > 0.0)) {
        feasible = false;
        break;
      }
      const double r = unit(rng) * (below + above);
      values[i] = r < below ? -p.M + r : values[i - 1] + p.delta_f + (r - below);
    }
    if (feasible) break;
  }
  return PiecewiseConstantTarget(std::move(breakpoints), std::move(values));
}

/// The six-piece target used in the one-dimensional experiments.
inline PiecewiseConstantTarget staircase_target() {
  return PiecewiseConstantTarget({0.0, 0.2, 0.35, 0.5, 0.65, 0.8, 1.0},
                                 {1.0, 4.0, 1.0, 2.0, 1.0, 4.0});
}

/// Continuous piecewise-affine target sum_k slopes[k] * relu(x - knots[k]),
/// plus a constant offset.
class ReluAffineTarget {
 public:
  ReluAffineTarget(std::vector<double> knots, std::vector<double> slopes,
                   double offset = 0.0)
      : knots_(std::move(knots)), slopes_(std::move(slopes)), offset_(offset) {
    if (knots_.size() != slopes_.size()) {
      throw PreconditionError("relu target needs one slope per knot");
    }
    for (std::size_t i = 0; i < knots_.size(); ++i) {
      if (!(knots_[i] >= 0.0 && knots_[i] <= 1.0) ||
          (i > 0 && !(knots_[i - 1] < knots_[i]))) {
        throw PreconditionError("relu knots must be increasing in [0, 1]");
      }
    }
  }

  double operator()(double x) const {
    double y = offset_;
    for (std::size_t k = 0; k < knots_.size(); ++k) {
      if (x > knots_[k]) y += slopes_[k] * (x - knots_[k]);
    }
    return y;
  }
  std::span<const double> kinks() const { return knots_; }
  const std::vector<double>& slopes() const { return slopes_; }
  double offset() const { return offset_; }
  std::size_t discontinuities() const { return knots_.size(); }
  double breakpoint(std::size_t i) const { return knots_[i - 1]; }

  double sup_norm() const {
    double m = std::abs((*this)(0.0));
    for (double k : knots_) m = std::max(m, std::abs((*this)(k)));
    return std::max(m, std::abs((*this)(1.0)));
  }

 private:
  std::vector<double> knots_;
  std::vector<double> slopes_;
  double offset_;
};

/// The ReLU experiment target: knots (0.3, 0.5, 0.7), slopes (1, -2, 3).
inline ReluAffineTarget relu_reference_target() {
  return ReluAffineTarget({0.3, 0.5, 0.7}, {1.0, -2.0, 3.0});
}

/// Axis-aligned additive target f*(x) = sum_k f*_k(x_k).
class AdditiveTarget {
 public:
  explicit AdditiveTarget(std::vector<PiecewiseConstantTarget> axes)
      : axes_(std::move(axes)) {
    if (axes_.empty()) throw PreconditionError("additive target needs d >= 1");
  }
  std::size_t dim() const { return axes_.size(); }
  const PiecewiseConstantTarget& axis(std::size_t k) const { return axes_[k]; }
  const std::vector<PiecewiseConstantTarget>& axes() const { return axes_; }

  double operator()(std::span<const double> x) const {
    if (x.size() != axes_.size()) throw PreconditionError("dimension mismatch");
    double y = 0.0;
    for (std::size_t k = 0; k < axes_.size(); ++k) y += axes_[k](x[k]);
    return y;
  }

 private:
  std::vector<PiecewiseConstantTarget> axes_;
};

/// Per-axis staircase 1{x >= 0.3} + 1{x >= 0.5} + 1{x >= 0.7} in d dimensions.
inline AdditiveTarget additive_staircase_target(std::size_t d) {
  PiecewiseConstantTarget axis({0.0, 0.3, 0.5, 0.7, 1.0}, {0.0, 1.0, 2.0, 3.0});
  return AdditiveTarget(std::vector<PiecewiseConstantTarget>(d, axis));
}

static_assert(UnivariateTarget<PiecewiseConstantTarget>);
static_assert(UnivariateTarget<ReluAffineTarget>);

}  // namespace tts
