#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "tts/errors.hpp"

namespace tts {

enum class RunStatus {
  completed,
  left_admissible_set,  // positions exited U_eta; hard stop
  unstable,             // loss increased beyond the step-size guard
  collision,            // two neurons met outside an absorbed discontinuity
  diverged,             // weights exceeded the divergence guard
};

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::completed: return "completed";
    case RunStatus::left_admissible_set: return "left_admissible_set";
    case RunStatus::unstable: return "unstable";
    case RunStatus::collision: return "collision";
    case RunStatus::diverged: return "diverged";
  }
  return "unknown";
}

/// Time-stamped trajectory of any of the dynamics. For the additive model
/// the weights are flattened as (bias, A column-major) and positions as U
/// column-major.
struct RunRecord {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> weights;
  std::vector<Eigen::VectorXd> positions;
  std::vector<double> losses;
  std::vector<std::vector<double>> alignment;
  std::vector<std::string> extra_names;
  std::vector<std::vector<double>> extras;  // one row per snapshot

  RunStatus status = RunStatus::completed;
  std::string diagnostic;

  std::size_t size() const { return times.size(); }
  bool completed() const { return status == RunStatus::completed; }

  void push(double t, Eigen::VectorXd a, Eigen::VectorXd u, double loss,
            std::vector<double> align, std::vector<double> extra = {}) {
    if (!times.empty() && !(t > times.back())) {
      throw Error("RunRecord: snapshot times must be strictly increasing");
    }
    times.push_back(t);
    weights.push_back(std::move(a));
    positions.push_back(std::move(u));
    losses.push_back(loss);
    alignment.push_back(std::move(align));
    extras.push_back(std::move(extra));
  }

  void halt(RunStatus s, std::string why) {
    status = s;
    diagnostic = std::move(why);
  }
};

/// Formats with 17 significant digits; identical input gives identical text.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Columns: time, loss, a0..am, u1..um, align1..alignK, extras.
inline void write_csv(std::ostream& os, const RunRecord& r) {
  if (r.size() == 0) {
    os << "time,loss\n";
    return;
  }
  const auto na = r.weights.front().size();
  const auto nu = r.positions.front().size();
  const auto nal = r.alignment.front().size();
  os << "time,loss";
  for (Eigen::Index k = 0; k < na; ++k) os << ",a" << k;
  for (Eigen::Index k = 0; k < nu; ++k) os << ",u" << (k + 1);
  for (std::size_t k = 0; k < nal; ++k) os << ",align" << (k + 1);
  for (const auto& name : r.extra_names) os << ',' << name;
  os << '\n';
  for (std::size_t s = 0; s < r.size(); ++s) {
    os << format_number(r.times[s]) << ',' << format_number(r.losses[s]);
    for (Eigen::Index k = 0; k < na; ++k) os << ',' << format_number(r.weights[s][k]);
    for (Eigen::Index k = 0; k < nu; ++k) os << ',' << format_number(r.positions[s][k]);
    for (double d : r.alignment[s]) os << ',' << format_number(d);
    for (std::size_t k = 0; k < r.extra_names.size(); ++k) {
      const double v = k < r.extras[s].size() ? r.extras[s][k]
                                              : std::numeric_limits<double>::quiet_NaN();
      os << ',' << format_number(v);
    }
    os << '\n';
  }
}

}  // namespace tts
