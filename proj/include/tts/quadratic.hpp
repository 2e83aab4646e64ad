#pragma once

// The population loss as a quadratic in the outer weights:
//   L(a, u) = 1/2 a^T H(u) a - b(u)^T a + c,
// with feature 0 the constant bias and feature j >= 1 the shifted activation
// sigma_eta(x - u_j).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <sstream>
#include <type_traits>
#include <vector>

#include "tts/activation.hpp"
#include "tts/errors.hpp"
#include "tts/quadrature.hpp"
#include "tts/targets.hpp"

namespace tts {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr std::size_t kNoNeuron = std::numeric_limits<std::size_t>::max();

/// Permutation that sorts positions ascending (stable on ties).
inline std::vector<std::size_t> sorted_order(const Vector& u) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(u.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&u](std::size_t i, std::size_t j) { return u[i] < u[j]; });
  return idx;
}

struct FlankPair {
  std::size_t left = kNoNeuron;   // neuron index of u_i^L (largest u_j <= v_i)
  std::size_t right = kNoNeuron;  // neuron index of u_i^R (smallest u_j > v_i)
  double u_left = std::numeric_limits<double>::quiet_NaN();
  double u_right = std::numeric_limits<double>::quiet_NaN();
  bool complete() const { return left != kNoNeuron && right != kNoNeuron; }
};

struct Spacing {
  double delta = 0.0;            // Delta(u), boundary conventions included
  std::vector<FlankPair> flanks;  // one per interior breakpoint
};

/// Delta(u) = min pairwise gap over u_0 = -eta/2, u_1..u_m, u_{m+1} = 1+eta/2.
inline double min_spacing(const Vector& u, double eta) {
  std::vector<double> pts(u.data(), u.data() + u.size());
  pts.push_back(-0.5 * eta);
  pts.push_back(1.0 + 0.5 * eta);
  std::sort(pts.begin(), pts.end());
  double delta = HUGE_VAL;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    delta = std::min(delta, pts[k + 1] - pts[k]);
  }
  return delta;
}

/// Nearest neuron at-or-left and strictly right of each point in `points`.
inline std::vector<FlankPair> flanks(const Vector& u,
                                     std::span<const double> points) {
  const auto order = sorted_order(u);
  std::vector<FlankPair> out;
  out.reserve(points.size());
  for (double v : points) {
    FlankPair f;
    const auto it = std::upper_bound(
        order.begin(), order.end(), v,
        [&u](double value, std::size_t j) { return value < u[j]; });
    if (it != order.begin()) {
      f.left = *(it - 1);
      f.u_left = u[f.left];
    }
    if (it != order.end()) {
      f.right = *it;
      f.u_right = u[f.right];
    }
    out.push_back(f);
  }
  return out;
}

inline Spacing spacing(const Vector& u, double eta) {
  return Spacing{min_spacing(u, eta), {}};
}

template <UnivariateTarget T>
Spacing spacing(const Vector& u, double eta, const T& target) {
  return Spacing{min_spacing(u, eta), flanks(u, target.kinks())};
}

/// Membership of the admissible set on which the best response is defined.
inline bool is_admissible(const Vector& u, const Activation& act) {
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    if (!(u[j] >= 0.0 && u[j] <= 1.0)) return false;
  }
  const double delta = min_spacing(u, act.eta());
  switch (act.kind()) {
    case ActivationKind::smooth_sigmoid:
      return delta > 2.0 * act.eta();
    case ActivationKind::heaviside:
    case ActivationKind::relu:
      return delta > 0.0;
  }
  return false;
}

inline void require_admissible(const Vector& u, const Activation& act,
                               const char* op) {
  if (!is_admissible(u, act)) {
    const double delta = min_spacing(u, act.eta());
    std::ostringstream os;
    os << op << ": positions outside U_eta (Delta(u) = " << delta
       << ", need > " << 2.0 * act.eta() << " with all u_j in [0, 1])";
    throw NotAdmissibleError(os.str(), delta);
  }
}

namespace detail {

// Feature j of the design: j = 0 is the constant bias.
inline double feature(const Activation& act, const Vector& u, Eigen::Index j,
                      double x) {
  return j == 0 ? 1.0 : act(x - u[j - 1]);
}

inline void feature_kinks(const Activation& act, const Vector& u,
                          Eigen::Index j, std::vector<double>& out) {
  if (j > 0) act.append_kinks(u[j - 1], out);
}

// Left end of the part of [0, 1] where feature j can be non-zero.
inline double feature_begin(const Activation& act, const Vector& u,
                            Eigen::Index j) {
  if (j == 0) return 0.0;
  return std::clamp(act.support_begin(u[j - 1]), 0.0, 1.0);
}

}  // namespace detail

/// Gram matrix of the features on [0, 1] by exact piecewise quadrature.
/// Valid for any positions.
inline Matrix gram_general(const Vector& u, const Activation& act) {
  const Eigen::Index n = u.size() + 1;
  Matrix G(n, n);
  std::vector<double> cuts;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      cuts.clear();
      detail::feature_kinks(act, u, i, cuts);
      detail::feature_kinks(act, u, j, cuts);
      const double lo = std::max(detail::feature_begin(act, u, i),
                                 detail::feature_begin(act, u, j));
      const double v = integrate_piecewise(
          [&](double x) {
            return detail::feature(act, u, i, x) * detail::feature(act, u, j, x);
          },
          cuts, lo, 1.0);
      G(i, j) = v;
      G(j, i) = v;
    }
  }
  return G;
}

namespace detail {

// H_0 + D_eta; valid when every window lies in [0, 1] and windows are pairwise
// separated by at least eta, i.e. Delta(u) >= eta.
inline Matrix hessian_closed_form(const Vector& u, const Activation& act) {
  const Eigen::Index n = u.size() + 1;
  Matrix H(n, n);
  const double corr = act.diagonal_correction();
  auto pos = [&u](Eigen::Index j) {
    return j == 0 ? 0.0 : std::clamp(u[j - 1], 0.0, 1.0);
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      double v = 1.0 - std::max(pos(i), pos(j));
      if (i == j && i > 0) v += corr;
      H(i, j) = v;
      H(j, i) = v;
    }
  }
  return H;
}

}  // namespace detail

/// Gram matrix, using the closed form whenever it is exact.
inline Matrix gram(const Vector& u, const Activation& act) {
  if (act.kind() == ActivationKind::heaviside) {
    return detail::hessian_closed_form(u, act);
  }
  if (act.kind() == ActivationKind::smooth_sigmoid &&
      min_spacing(u, act.eta()) >= act.eta() &&
      (u.size() == 0 || (u.minCoeff() >= 0.0 && u.maxCoeff() <= 1.0))) {
    return detail::hessian_closed_form(u, act);
  }
  return gram_general(u, act);
}

/// Hessian H_eta(u) of a -> L(a, u); requires u in U_eta.
inline Matrix hessian(const Vector& u, const Activation& act) {
  require_admissible(u, act, "hessian");
  if (act.kind() == ActivationKind::relu) return gram_general(u, act);
  return detail::hessian_closed_form(u, act);
}

/// Integral of target(x) * g(x) over [lo, hi]; `cuts` lists the kinks of g.
template <UnivariateTarget T, class G>
double integrate_against(const T& target, G&& g, std::vector<double> cuts,
                         double lo, double hi) {
  const auto tk = target.kinks();
  cuts.insert(cuts.end(), tk.begin(), tk.end());
  return integrate_piecewise([&](double x) { return target(x) * g(x); }, cuts,
                             lo, hi);
}

/// c = 1/2 int f*^2.
template <UnivariateTarget T>
double target_energy(const T& target) {
  if constexpr (std::is_same_v<T, PiecewiseConstantTarget>) {
    return 0.5 * target.integrate(0.0, 1.0, 2);
  } else {
    return 0.5 * integrate_against(target, [&](double x) { return target(x); },
                                   {}, 0.0, 1.0);
  }
}

/// b_j = int f*(x) phi_j(x) dx.
template <UnivariateTarget T>
Vector linear_term(const Vector& u, const Activation& act, const T& target) {
  const Eigen::Index n = u.size() + 1;
  Vector b(n);
  std::vector<double> cuts;
  for (Eigen::Index j = 0; j < n; ++j) {
    if constexpr (std::is_same_v<T, PiecewiseConstantTarget>) {
      if (j == 0) {
        b[0] = target.integrate(0.0, 1.0, 1);
        continue;
      }
      const double uj = u[j - 1];
      if (act.kind() == ActivationKind::heaviside) {
        b[j] = target.integrate(std::clamp(uj, 0.0, 1.0), 1.0, 1);
        continue;
      }
      if (act.kind() == ActivationKind::smooth_sigmoid) {
        const double lo = uj - 0.5 * act.eta();
        const double hi = uj + 0.5 * act.eta();
        bool clean = lo >= 0.0 && hi <= 1.0;
        for (double v : target.kinks()) {
          if (v > lo && v < hi) clean = false;
        }
        if (clean) {
          // f* constant on the window: the odd part of sigma cancels.
          b[j] = target.integrate(uj, 1.0, 1);
        } else {
          b[j] = target.integrate(std::clamp(hi, 0.0, 1.0), 1.0, 1) +
                 integrate_against(
                     target, [&](double x) { return act(x - uj); },
                     {uj}, std::max(lo, 0.0), std::min(hi, 1.0));
        }
        continue;
      }
    }
    cuts.clear();
    detail::feature_kinks(act, u, j, cuts);
    b[j] = integrate_against(
        target, [&](double x) { return detail::feature(act, u, j, x); }, cuts,
        detail::feature_begin(act, u, j), 1.0);
  }
  return b;
}

struct QuadraticLoss {
  Matrix H;
  Vector b;
  double c = 0.0;

  double operator()(const Vector& a) const {
    return std::max(0.0, 0.5 * a.dot(H * a) - b.dot(a) + c);
  }
};

template <UnivariateTarget T>
QuadraticLoss quadratic_loss(const Vector& u, const Activation& act,
                             const T& target) {
  return QuadraticLoss{gram(u, act), linear_term(u, act, target),
                       target_energy(target)};
}

/// Exact population loss 1/2 int (f* - f)^2.
template <UnivariateTarget T>
double loss(const Vector& a, const Vector& u, const Activation& act,
            const T& target) {
  if (a.size() != u.size() + 1) throw PreconditionError("loss: a must have m+1 entries");
  return quadratic_loss(u, act, target)(a);
}

/// Best response a*_eta(u) = H^{-1} b via Cholesky.
template <UnivariateTarget T>
Vector best_fit(const Vector& u, const Activation& act, const T& target) {
  require_admissible(u, act, "best_fit");
  const Matrix H = hessian(u, act);
  const Vector b = linear_term(u, act, target);
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << "best_fit: Cholesky factorization failed (Delta(u) = "
       << min_spacing(u, act.eta()) << ")";
    throw SingularSystemError(os.str());
  }
  Vector a = llt.solve(b);
  a += llt.solve(b - H * a);  // one refinement step
  if ((H * a - b).norm() > 1e-10) {
    std::ostringstream os;
    os << "best_fit: residual too large (Delta(u) = "
       << min_spacing(u, act.eta()) << ")";
    throw SingularSystemError(os.str());
  }
  return a;
}

namespace detail {

// Requires at least `k` neurons strictly inside every piece.
inline void require_neurons_per_piece(const Vector& u,
                                      const PiecewiseConstantTarget& target,
                                      std::size_t k, const char* op) {
  std::vector<std::size_t> count(target.pieces(), 0);
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    const double x = u[j];
    if (!(x > 0.0 && x < 1.0)) {
      throw PreconditionError(std::string(op) + ": positions must lie in (0, 1)");
    }
    const std::size_t p = target.piece_index(x);
    if (x > target.breakpoint(p) && x < target.breakpoint(p + 1)) ++count[p];
  }
  for (std::size_t p = 0; p < count.size(); ++p) {
    if (count[p] < k) {
      throw PreconditionError(std::string(op) + ": piece " + std::to_string(p) +
                              " holds " + std::to_string(count[p]) +
                              " neurons strictly inside, need " +
                              std::to_string(k));
    }
  }
  if (min_spacing(u, 0.0) <= 0.0) {
    throw PreconditionError(std::string(op) + ": positions must be distinct");
  }
}

}  // namespace detail

/// Closed-form best response for the heaviside network: bias f*_0, the two
/// flanks of each discontinuity share the jump, all other weights are zero.
inline Vector best_fit_heaviside(const Vector& u,
                                 const PiecewiseConstantTarget& target) {
  detail::require_neurons_per_piece(u, target, 2, "best_fit_heaviside");
  Vector a = Vector::Zero(u.size() + 1);
  a[0] = target.values()[0];
  const auto fl = flanks(u, target.kinks());
  for (std::size_t i = 1; i <= target.discontinuities(); ++i) {
    const FlankPair& f = fl[i - 1];
    const double v = target.breakpoint(i);
    const double width = f.u_right - f.u_left;
    a[static_cast<Eigen::Index>(f.left) + 1] =
        (f.u_right - v) / width * target.jump(i);
    a[static_cast<Eigen::Index>(f.right) + 1] =
        (v - f.u_left) / width * target.jump(i);
  }
  return a;
}

/// One discontinuity's contribution to the reduced loss.
inline double reduced_loss_term(double v, double u_left, double u_right,
                                double jump) {
  if (u_left == v || u_right == v) return 0.0;
  return 0.5 * (v - u_left) * (u_right - v) / (u_right - u_left) * jump * jump;
}

/// L(a*_0(u), u) = 1/2 sum_i (v_i - u^L)(u^R - v_i)/(u^R - u^L) (jump_i)^2.
/// Requires a neuron on each side of every discontinuity, no neuron
/// flanking two discontinuities.
inline double reduced_loss(const Vector& u, const PiecewiseConstantTarget& target) {
  const auto fl = flanks(u, target.kinks());
  double total = 0.0;
  for (std::size_t i = 1; i <= target.discontinuities(); ++i) {
    const FlankPair& f = fl[i - 1];
    if (!f.complete()) {
      throw PreconditionError("reduced_loss: discontinuity without a neuron on each side");
    }
    if (i > 1 && fl[i - 2].right == f.left) {
      throw PreconditionError("reduced_loss: a neuron flanks two discontinuities");
    }
    total += reduced_loss_term(target.breakpoint(i), f.u_left, f.u_right,
                               target.jump(i));
  }
  return total;
}

/// Smallest eigenvalue of a symmetric matrix.
inline double min_eigenvalue(const Matrix& H) {
  if (H.rows() != H.cols()) throw PreconditionError("min_eigenvalue: matrix not square");
  if (H.rows() == 0) return HUGE_VAL;
  if (H.rows() > 64) {
    Eigen::LLT<Matrix> llt(H);
    if (llt.info() == Eigen::Success) {
      // Inverse power iteration converges to the smallest eigenvalue of an
      // SPD matrix.
      Vector x = Vector::Ones(H.rows()).normalized();
      double lambda = 0.0;
      for (int it = 0; it < 10000; ++it) {
        Vector y = llt.solve(x);
        const double next = 1.0 / y.norm();
        x = y * next;
        if (std::abs(next - lambda) <= 1e-12 * std::abs(next)) {
          lambda = next;
          break;
        }
        lambda = next;
      }
      return x.dot(H * x);
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace tts
