#pragma once

// Continuous-time systems:
//   full flow        da/dt = -grad_a L,  du/dt = -eps grad_u L   (time t)
//   smooth limit     du/dtau = -grad_u L(a*_eta(u), u)          (tau = eps t)
//   reduced limit    eta = 0, only the two flanks of each jump move.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "tts/activation.hpp"
#include "tts/errors.hpp"
#include "tts/network.hpp"
#include "tts/quadratic.hpp"
#include "tts/record.hpp"
#include "tts/targets.hpp"

namespace tts {

struct FlowConfig {
  double epsilon = 1.0;
  double eta = 0.0;
  double dt = 1e-3;  // in tau for the limit systems, in t for the full flow
  double t_end = 0.0;
  std::size_t record_every = 1;  // snapshot cadence in steps
  double absorb_tol = 1e-9;

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("flow: dt must be > 0");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("flow: t_end must be >= 0");
    if (!(epsilon >= 0.0)) throw ConfigError("flow: epsilon must be >= 0");
    if (!(eta >= 0.0)) throw ConfigError("flow: eta must be >= 0");
    if (record_every == 0) throw ConfigError("flow: record_every must be >= 1");
    if (!(absorb_tol >= 0.0)) throw ConfigError("flow: absorb_tol must be >= 0");
  }
};

/// Horizon 6 / (eps * delta_f^2) up to which recovery is guaranteed; eps = 1
/// gives the horizon of the limit system in tau.
inline double recovery_horizon(double epsilon, double delta_f) {
  if (!(delta_f > 0.0)) throw PreconditionError("recovery_horizon: delta_f must be > 0");
  if (!(epsilon > 0.0)) throw PreconditionError("recovery_horizon: epsilon must be > 0");
  return 6.0 / (epsilon * delta_f * delta_f);
}

/// Distance from each discontinuity to its nearest neuron.
template <UnivariateTarget T>
std::vector<double> alignment_report(const Vector& u, const T& target) {
  std::vector<double> out;
  for (double v : target.kinks()) {
    double best = HUGE_VAL;
    for (Eigen::Index j = 0; j < u.size(); ++j) best = std::min(best, std::abs(u[j] - v));
    out.push_back(best);
  }
  return out;
}

/// Stable-by-construction step for the full flow: lambda_max(H) <= m + 1.
inline double default_full_flow_dt(Eigen::Index m) {
  return 0.1 / static_cast<double>(m + 1);
}

namespace detail {

template <class F>
Vector rk4_step(const Vector& y, double h, F&& f) {
  const Vector k1 = f(y);
  const Vector k2 = f(Vector(y + 0.5 * h * k1));
  const Vector k3 = f(Vector(y + 0.5 * h * k2));
  const Vector k4 = f(Vector(y + h * k3));
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Drives a fixed-step loop with snapshots every `every` steps and at the end.
struct Clock {
  double t = 0.0;
  double t_end;
  double dt;
  std::size_t every;
  std::size_t steps = 0;

  bool done() const { return !(t < t_end); }
  double next_step() const { return std::min(dt, t_end - t); }
  // Advances by h; snaps to t_end when within rounding of it.
  void advance(double h) {
    t += h;
    if (t_end - t <= 1e-12 * std::max(1.0, t_end)) t = std::max(t, t_end);
    ++steps;
  }
  bool snapshot_due() const { return steps % every == 0 || done(); }
};

// Velocities of the reduced system for a fixed flank assignment. The roles
// are frozen within a step so that a flank crossing its discontinuity is
// seen as a crossing rather than a role swap.
struct ReducedField {
  const PiecewiseConstantTarget& target;
  const std::vector<bool>& resolved;
  const std::vector<FlankPair>& roles;

  Vector operator()(const Vector& u) const {
    Vector du = Vector::Zero(u.size());
    for (std::size_t i = 1; i <= target.discontinuities(); ++i) {
      if (resolved[i - 1]) continue;
      const FlankPair& f = roles[i - 1];
      if (!f.complete()) continue;
      const auto l = static_cast<Eigen::Index>(f.left);
      const auto r = static_cast<Eigen::Index>(f.right);
      const double v = target.breakpoint(i);
      const double j2 = target.jump(i) * target.jump(i);
      const double width = u[r] - u[l];
      const double wl = (u[r] - v) / width;
      const double wr = (v - u[l]) / width;
      du[l] += 0.5 * wl * wl * j2;
      du[r] -= 0.5 * wr * wr * j2;
    }
    return du;
  }
};

}  // namespace detail

/// Velocity field of the eta = 0 reduced system at u: only the flanks of
/// each discontinuity move.
inline Vector reduced_velocity(const Vector& u, const PiecewiseConstantTarget& target) {
  const std::vector<bool> resolved(target.discontinuities(), false);
  const auto roles = flanks(u, target.kinks());
  return detail::ReducedField{target, resolved, roles}(u);
}

/// The eta = 0 limit: flank neurons follow the gradient of the reduced loss
/// and a flank reaching its discontinuity (within absorb_tol) is clamped
/// there, after which that discontinuity contributes nothing.
inline RunRecord integrate_limit_reduced(const Vector& u0,
                                         const PiecewiseConstantTarget& target,
                                         const FlowConfig& config) {
  config.validate();
  detail::require_neurons_per_piece(u0, target, 2, "integrate_limit_reduced");

  const std::size_t K = target.discontinuities();
  std::vector<bool> resolved(K, false);
  // Neuron clamped onto each resolved discontinuity.
  std::vector<std::size_t> absorbed(K, kNoNeuron);
  Vector u = u0;
  const double tol = config.absorb_tol;

  auto absorb_arrivals = [&]() {
    const auto fl = flanks(u, target.kinks());
    for (std::size_t i = 0; i < K; ++i) {
      if (resolved[i]) continue;
      const double v = target.breakpoint(i + 1);
      const FlankPair& f = fl[i];
      const bool left_in = f.left != kNoNeuron && v - f.u_left <= tol;
      const bool right_in = f.right != kNoNeuron && f.u_right - v <= tol;
      if (!left_in && !right_in) continue;
      resolved[i] = true;
      absorbed[i] = left_in ? f.left : f.right;  // ties go to the left flank
      u[static_cast<Eigen::Index>(absorbed[i])] = v;
    }
  };

  auto snapshot_weights = [&]() {
    Vector a = Vector::Zero(u.size() + 1);
    a[0] = target.values()[0];
    const auto fl = flanks(u, target.kinks());
    for (std::size_t i = 0; i < K; ++i) {
      const double jump = target.jump(i + 1);
      if (resolved[i]) {
        a[static_cast<Eigen::Index>(absorbed[i]) + 1] = jump;
        continue;
      }
      const FlankPair& f = fl[i];
      const double v = target.breakpoint(i + 1);
      const double width = f.u_right - f.u_left;
      a[static_cast<Eigen::Index>(f.left) + 1] = (f.u_right - v) / width * jump;
      a[static_cast<Eigen::Index>(f.right) + 1] = (v - f.u_left) / width * jump;
    }
    return a;
  };

  auto current_loss = [&]() {
    const auto fl = flanks(u, target.kinks());
    double total = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
      if (resolved[i]) continue;
      total += reduced_loss_term(target.breakpoint(i + 1), fl[i].u_left,
                                 fl[i].u_right, target.jump(i + 1));
    }
    return total;
  };

  RunRecord rec;
  auto record = [&](double t) {
    rec.push(t, snapshot_weights(), u, current_loss(), alignment_report(u, target));
  };

  absorb_arrivals();
  record(0.0);

  std::vector<FlankPair> roles;
  const detail::ReducedField field{target, resolved, roles};
  detail::Clock clock{0.0, config.t_end, config.dt, config.record_every};
  while (!clock.done()) {
    if (std::all_of(resolved.begin(), resolved.end(), [](bool r) { return r; })) {
      clock.t = clock.t_end;  // nothing moves any more
      break;
    }
    const double h = clock.next_step();
    const auto before = flanks(u, target.kinks());
    roles = before;
    Vector trial = detail::rk4_step(u, h, field);

    // The flank that crosses its discontinuity first within this step, if any.
    std::size_t hit = kNoNeuron;
    double hit_v = 0.0, hit_side = 0.0, first = 2.0;
    for (std::size_t i = 0; i < K; ++i) {
      if (resolved[i]) continue;
      const double v = target.breakpoint(i + 1);
      const FlankPair& f = before[i];
      const double l1 = trial[static_cast<Eigen::Index>(f.left)];
      const double r1 = trial[static_cast<Eigen::Index>(f.right)];
      if (l1 > v && l1 > f.u_left) {
        const double guess = (v - f.u_left) / (l1 - f.u_left);
        if (guess < first) first = guess, hit = f.left, hit_v = v, hit_side = 1.0;
      }
      if (r1 < v && r1 < f.u_right) {
        const double guess = (f.u_right - v) / (f.u_right - r1);
        if (guess < first) first = guess, hit = f.right, hit_v = v, hit_side = -1.0;
      }
    }
    double taken = h;
    if (hit != kNoNeuron) {
      // Signed overshoot of the crossing flank after a step of theta * h;
      // negative before arrival. Bracketed by [0, 1], solved by Illinois.
      const auto j = static_cast<Eigen::Index>(hit);
      auto overshoot = [&](double theta) {
        return hit_side * (detail::rk4_step(u, theta * h, field)[j] - hit_v);
      };
      double lo = 0.0, hi = 1.0;
      double g_lo = hit_side * (u[j] - hit_v), g_hi = hit_side * (trial[j] - hit_v);
      int stale = 0;
      for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
        const double theta = hi - g_hi * (hi - lo) / (g_hi - g_lo);
        const double g = overshoot(theta);
        if (std::abs(g) <= 1e-15) {
          lo = hi = theta;
          break;
        }
        if (g < 0.0) {
          lo = theta, g_lo = g;
          if (stale == -1) g_hi *= 0.5;
          stale = -1;
        } else {
          hi = theta, g_hi = g;
          if (stale == 1) g_lo *= 0.5;
          stale = 1;
        }
      }
      taken = hi * h;
      trial = detail::rk4_step(u, taken, field);
      trial[j] = hit_v;
      // Partners that overshot their discontinuity stop on it.
      for (std::size_t i = 0; i < K; ++i) {
        if (resolved[i]) continue;
        const double v = target.breakpoint(i + 1);
        const FlankPair& f = before[i];
        auto& l1 = trial[static_cast<Eigen::Index>(f.left)];
        auto& r1 = trial[static_cast<Eigen::Index>(f.right)];
        l1 = std::min(l1, v);
        r1 = std::max(r1, v);
      }
    }
    u = trial;
    absorb_arrivals();

    // Collision check for discontinuities still in play.
    const auto after = flanks(u, target.kinks());
    for (std::size_t i = 0; i < K; ++i) {
      if (resolved[i]) continue;
      if (!after[i].complete() || !(after[i].u_right > after[i].u_left)) {
        clock.advance(taken);
        record(clock.t);
        std::ostringstream os;
        os << "flank collision at discontinuity " << (i + 1) << " (t = " << clock.t << ")";
        rec.halt(RunStatus::collision, os.str());
        return rec;
      }
    }

    clock.advance(taken);
    if (clock.snapshot_due()) record(clock.t);
  }
  if (rec.times.back() < clock.t) record(clock.t);
  return rec;
}

/// Velocity field G(u) = grad_u L(a*_eta(u), u) of the smooth limit.
template <UnivariateTarget T>
Vector limit_gradient(const Vector& u, const Activation& act, const T& target) {
  const NetworkState s(best_fit(u, act, target), u);
  return population_gradient(s, act, target).u;
}

/// The eta > 0 two-timescale limit, integrated by classical RK4 in tau with
/// the best response recomputed at each stage. Leaving U_eta stops the run.
template <UnivariateTarget T>
RunRecord integrate_limit_smooth(const Vector& u0, const T& target,
                                 const Activation& act, const FlowConfig& config) {
  config.validate();
  require_admissible(u0, act, "integrate_limit_smooth");

  RunRecord rec;
  rec.extra_names = {"grad_norm", "delta"};
  Vector u = u0;
  auto record = [&](double t) {
    const Vector a = best_fit(u, act, target);
    const NetworkState s(a, u);
    const Vector g = population_gradient(s, act, target).u;
    rec.push(t, a, u, loss(a, u, act, target), alignment_report(u, target),
             {g.norm(), min_spacing(u, act.eta())});
  };
  record(0.0);

  struct LeftSet {
    double delta;
  };
  auto field = [&](const Vector& x) -> Vector {
    if (!is_admissible(x, act)) throw LeftSet{min_spacing(x, act.eta())};
    return -limit_gradient(x, act, target);
  };

  auto best_loss = [&](const Vector& x) { return loss(best_fit(x, act, target), x, act, target); };
  double current = rec.losses.back();
  detail::Clock clock{0.0, config.t_end, config.dt, config.record_every};
  while (!clock.done()) {
    const double h = clock.next_step();
    Vector next;
    double next_loss = 0.0;
    try {
      next = detail::rk4_step(u, h, field);
      if (!is_admissible(next, act)) throw LeftSet{min_spacing(next, act.eta())};
      next_loss = best_loss(next);
    } catch (const LeftSet& e) {
      if (rec.times.back() < clock.t) record(clock.t);
      std::ostringstream os;
      os << "positions left U_eta during step at tau = " << clock.t
         << " (Delta(u) = " << e.delta << ", need > " << 2.0 * act.eta() << ")";
      rec.halt(RunStatus::left_admissible_set, os.str());
      return rec;
    } catch (const SingularSystemError& e) {
      if (rec.times.back() < clock.t) record(clock.t);
      rec.halt(RunStatus::unstable, e.what());
      return rec;
    }
    if (!std::isfinite(next_loss) || next_loss > current + 1e-6) {
      if (rec.times.back() < clock.t) record(clock.t);
      std::ostringstream os;
      os << "loss increased from " << current << " to " << next_loss << " at tau = " << clock.t
         << " with dt = " << h;
      rec.halt(RunStatus::unstable, os.str());
      return rec;
    }
    current = next_loss;
    u = std::move(next);
    clock.advance(h);
    if (clock.snapshot_due()) record(clock.t);
  }
  return rec;
}

/// The coupled gradient flow in t. Each snapshot also stores the distance
/// ||a - a*_eta(u)|| (NaN when u is outside U_eta).
template <UnivariateTarget T>
RunRecord integrate_full_flow(const Vector& a0, const Vector& u0, const T& target,
                              const Activation& act, const FlowConfig& config) {
  config.validate();
  if (act.kind() != ActivationKind::smooth_sigmoid) {
    throw PreconditionError("integrate_full_flow: requires eta > 0");
  }
  const Eigen::Index m = u0.size();
  if (a0.size() != m + 1) throw PreconditionError("integrate_full_flow: a must have m+1 entries");

  Vector y(2 * m + 1);
  y << a0, u0;
  auto split = [m](const Vector& z) {
    return NetworkState(z.head(m + 1), z.tail(m));
  };
  auto field = [&](const Vector& z) -> Vector {
    const Gradient g = population_gradient(split(z), act, target);
    Vector dz(2 * m + 1);
    dz << -g.a, -config.epsilon * g.u;
    return dz;
  };
  auto loss_of = [&](const Vector& z) {
    return loss(Vector(z.head(m + 1)), Vector(z.tail(m)), act, target);
  };

  RunRecord rec;
  rec.extra_names = {"best_response_gap", "delta"};
  double current = loss_of(y);
  auto record = [&](double t) {
    const Vector a = y.head(m + 1);
    const Vector u = y.tail(m);
    double gap = std::numeric_limits<double>::quiet_NaN();
    if (is_admissible(u, act)) gap = (a - best_fit(u, act, target)).norm();
    rec.push(t, a, u, current, alignment_report(u, target),
             {gap, min_spacing(u, act.eta())});
  };
  record(0.0);

  detail::Clock clock{0.0, config.t_end, config.dt, config.record_every};
  while (!clock.done()) {
    const double h = clock.next_step();
    Vector next = detail::rk4_step(y, h, field);
    const double next_loss = loss_of(next);
    if (!std::isfinite(next_loss) || next_loss > current + 1e-6) {
      if (rec.times.back() < clock.t) record(clock.t);
      std::ostringstream os;
      os << "loss increased from " << current << " to " << next_loss
         << " at t = " << clock.t << " with dt = " << h;
      rec.halt(RunStatus::unstable, os.str());
      return rec;
    }
    y = std::move(next);
    current = next_loss;
    clock.advance(h);
    if (clock.snapshot_due()) record(clock.t);
  }
  return rec;
}

}  // namespace tts
