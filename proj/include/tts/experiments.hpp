#pragma once

// Experiment harness: builds each named experiment from an ExperimentConfig,
// runs its seeds concurrently and writes run CSVs, summary.csv and SVG plots.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tts/activation.hpp"
#include "tts/config.hpp"
#include "tts/dynamics.hpp"
#include "tts/errors.hpp"
#include "tts/init.hpp"
#include "tts/network.hpp"
#include "tts/oracles.hpp"
#include "tts/quadratic.hpp"
#include "tts/record.hpp"
#include "tts/sgd.hpp"
#include "tts/svg.hpp"
#include "tts/targets.hpp"

namespace tts {

/// Default seed of the single-run univariate experiments. It is the first
/// seed (counting from 0) whose initialization lies in U_eta and whose
/// eta = 0 limit, run to the SGD horizon tau = 0.036, puts a neuron within
/// eta of every discontinuity.
inline constexpr std::uint64_t kReferenceSeed = 157;

inline constexpr double kSweepTau = 0.036;
inline const std::vector<double> kEpsilonGrid = {2e-5, 2e-4, 2e-3, 2e-2, 0.1, 1.0};

struct ExperimentSpec {
  std::string id;
  std::vector<std::string> overrides;  // "section.key=value"
  std::filesystem::path out_dir = ".";
  std::vector<std::uint64_t> seeds;    // empty: the experiment's default
  bool faithful = false;
  std::string config_path;             // custom only
  std::size_t trials = 1000;           // lemmas only
};

inline const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids = {
      "fig2",     "fig3",      "fig4",           "fig5-barplot", "fig6-2d",
      "fig8-10d", "fig9-relu", "counterexample", "lemmas",       "custom"};
  return ids;
}

inline void validate(const ExperimentSpec& spec) {
  const auto& ids = experiment_ids();
  if (std::find(ids.begin(), ids.end(), spec.id) == ids.end()) {
    throw ConfigError("unknown experiment id '" + spec.id + "'");
  }
  if (spec.trials == 0) throw ConfigError("trials must be >= 1");
}

struct SummaryRow {
  std::string label;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::completed;
  double final_loss = 0.0;
  std::vector<double> alignment;

  double l2_squared() const { return 2.0 * final_loss; }
};

struct ExperimentResult {
  std::vector<std::filesystem::path> files;
  std::vector<SummaryRow> rows;
  std::vector<OracleReport> reports;
  std::vector<std::string> notes;

  bool ok() const {
    for (const auto& r : rows) {
      if (r.status != RunStatus::completed) return false;
    }
    for (const auto& r : reports) {
      if (!r.pass) return false;
    }
    return true;
  }
};

/// Stepsize and iteration budget of one SGD run.
struct Budget {
  double h;
  std::uint64_t steps;
};

namespace experiment_detail {

inline std::uint64_t ceil_steps(double x) {
  // Guard against 1800000.0000000002-style rounding.
  return static_cast<std::uint64_t>(std::ceil(x * (1.0 - 1e-12)));
}

}  // namespace experiment_detail

inline Budget two_timescale_budget(bool faithful) {
  return faithful ? Budget{1e-5, 180000000} : Budget{1e-3, 1800000};
}

inline Budget standard_budget(bool) { return {1e-5, 1000000}; }

/// Per-epsilon budget of the sweep: the positions reach tau = 0.036 and the
/// weights get at least a fixed horizon t = h P. The default keeps the inner
/// stepsize eps * h at most 1e-5 and the outer at most 1e-3.
inline Budget sweep_budget(double epsilon, bool faithful) {
  if (!(epsilon > 0.0)) throw ConfigError("sweep: epsilon must be > 0");
  const double h = faithful ? 1e-5 : std::min(1e-3, 1e-5 / epsilon);
  const double horizon = faithful ? 10.0 : 200.0;
  const double steps = std::max(kSweepTau / (epsilon * h), horizon / h);
  return {h, experiment_detail::ceil_steps(steps)};
}

/// Largest stepsize kept for the additive model: 2 / (1 + d m) bounds the
/// top eigenvalue direction of the weight Hessian.
inline double stable_additive_step(Eigen::Index m, Eigen::Index d) {
  return 2.0 / (1.0 + static_cast<double>(d * m));
}

/// Runs body(0..n-1) on a small thread pool; the first exception (lowest
/// index) is rethrown after all workers finish.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::mutex mu;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= n) return;
            i = next++;
          }
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace experiment_detail {

namespace fs = std::filesystem;

inline ExperimentConfig with_overrides(ExperimentConfig c, const std::vector<std::string>& ov) {
  for (const auto& o : ov) apply_override(c, o);
  return c;
}

inline std::vector<std::uint64_t> seeds_or(const ExperimentSpec& spec,
                                           std::vector<std::uint64_t> fallback) {
  return spec.seeds.empty() ? fallback : spec.seeds;
}

inline std::vector<std::uint64_t> first_seeds(std::size_t n) {
  std::vector<std::uint64_t> s(n);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

inline void write_text(const fs::path& path, const std::string& text, ExperimentResult& out) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  f.close();
  if (!f) throw Error("write failed for " + path.string());
  out.files.push_back(path);
}

inline void write_record(const fs::path& path, const RunRecord& rec, ExperimentResult& out) {
  std::ostringstream os;
  write_csv(os, rec);
  write_text(path, os.str(), out);
}

inline void write_svg(const fs::path& path, const std::vector<Series>& series,
                      const PlotStyle& style, ExperimentResult& out) {
  write_text(path, render_svg(series, style), out);
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::size_t k = 0;
  for (const auto& r : rows) k = std::max(k, r.alignment.size());
  std::ostringstream os;
  os << "label,seed,status,final_loss,l2_squared";
  for (std::size_t i = 0; i < k; ++i) os << ",align" << (i + 1);
  os << '\n';
  for (const auto& r : rows) {
    os << r.label << ',' << r.seed << ',' << to_string(r.status) << ','
       << format_number(r.final_loss) << ',' << format_number(r.l2_squared());
    for (std::size_t i = 0; i < k; ++i) {
      os << ',' << (i < r.alignment.size() ? format_number(r.alignment[i]) : std::string("nan"));
    }
    os << '\n';
  }
  return os.str();
}

inline SummaryRow summarize(std::string label, std::uint64_t seed, const RunRecord& rec) {
  SummaryRow r;
  r.label = std::move(label);
  r.seed = seed;
  r.status = rec.status;
  r.final_loss = rec.losses.empty() ? std::numeric_limits<double>::quiet_NaN() : rec.losses.back();
  if (!rec.alignment.empty()) r.alignment = rec.alignment.back();
  return r;
}

inline std::vector<double> grid(std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) x[k] = static_cast<double>(k) / static_cast<double>(n - 1);
  return x;
}

template <class F>
Series sample_curve(std::string name, F&& f, std::size_t n = 801) {
  Series s;
  s.name = std::move(name);
  s.x = grid(n);
  for (double x : s.x) s.y.push_back(f(x));
  return s;
}

inline Series network_curve(std::string name, const Vector& a, const Vector& u,
                            const Activation& act) {
  const NetworkState s(a, u);
  return sample_curve(std::move(name), [&](double x) { return forward(s, act, x); });
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline Series loss_curve(std::string name, const RunRecord& rec, std::function<double(std::size_t)> x_of) {
  Series s;
  s.name = std::move(name);
  for (std::size_t k = 0; k < rec.size(); ++k) {
    const double x = x_of(k);
    if (rec.losses[k] > 0.0 && x > 0.0 && std::isfinite(rec.losses[k])) {
      s.x.push_back(x);
      s.y.push_back(rec.losses[k]);
    }
  }
  return s;
}

inline std::string label_of(double eps) { return format_number(eps); }

inline SgdConfig univariate_sgd(const Budget& b, double epsilon, Noise noise) {
  SgdConfig c;
  c.h = b.h;
  c.epsilon = epsilon;
  c.steps = b.steps;
  c.noise = noise;
  c.eval_every = std::max<std::uint64_t>(1, b.steps / 200);
  return c;
}

inline ExperimentConfig univariate_base(const Budget& b, double epsilon) {
  ExperimentConfig c;
  c.target.kind = "staircase";
  c.network = {20, "sigmoid", 4e-3};
  c.mode = RunMode::sgd;
  c.sgd = univariate_sgd(b, epsilon, Noise::uniform);
  return c;
}

struct SgdRun {
  std::uint64_t seed;
  NetworkState init;
  RunRecord rec;
};

/// Univariate SGD from the uniform zero-weight start drawn with Rng(seed).
inline SgdRun run_univariate_sgd(const ExperimentConfig& c, std::uint64_t seed) {
  const auto target = make_piecewise_target(c.target);
  const auto act = make_activation(c.network);
  Rng rng(seed);
  SgdRun r{seed, sample_init(c.network.m, rng), {}};
  SgdConfig sc = c.sgd;
  sc.seed = seed;
  r.rec = train(r.init, target, act, sc);
  return r;
}

inline PlotStyle function_style(std::string title, std::vector<double> markers = {}) {
  PlotStyle st;
  st.title = std::move(title);
  st.x_label = "x";
  st.y_label = "f(x)";
  st.x_markers = std::move(markers);
  return st;
}

inline ExperimentResult run_limit_comparison(const ExperimentSpec& spec) {
  ExperimentResult out;
  const Budget b = two_timescale_budget(spec.faithful);
  const auto c = with_overrides(univariate_base(b, 2e-5), spec.overrides);
  const auto target = make_piecewise_target(c.target);
  const auto act = make_activation(c.network);
  const auto seeds = seeds_or(spec, {kReferenceSeed});
  const double tau_end = c.sgd.epsilon * c.sgd.h * static_cast<double>(c.sgd.steps);

  std::vector<SgdRun> runs(seeds.size());
  std::vector<RunRecord> limits(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    runs[i] = run_univariate_sgd(c, seeds[i]);
    FlowConfig fc;
    fc.t_end = tau_end;
    fc.dt = tau_end / 2000.0;
    fc.record_every = 10;
    limits[i] = integrate_limit_reduced(runs[i].init.u, target, fc);
  });

  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& run = runs[i];
    const auto& lim = limits[i];
    const std::string tag = std::to_string(run.seed);
    write_record(spec.out_dir / ("run_" + tag + ".csv"), run.rec, out);
    write_record(spec.out_dir / ("limit_" + tag + ".csv"), lim, out);
    out.rows.push_back(summarize("sgd", run.seed, run.rec));
    out.rows.push_back(summarize("limit", run.seed, lim));

    PlotStyle ls;
    ls.title = "Loss: SGD (tau = eps h p) and eta = 0 limit, seed " + tag;
    ls.x_label = "tau";
    ls.y_label = "loss";
    ls.log_y = true;
    write_svg(spec.out_dir / ("fig2_loss_" + tag + ".svg"),
              {loss_curve("SGD", run.rec, [&](std::size_t k) { return run.rec.extras[k][0]; }),
               loss_curve("limit (eta = 0)", lim, [&](std::size_t k) { return lim.times[k]; })},
              ls, out);
    write_svg(spec.out_dir / ("fig2_functions_" + tag + ".svg"),
              {sample_curve("target", target),
               network_curve("limit (eta = 0)", lim.weights.back(), lim.positions.back(),
                             Activation::step()),
               network_curve("SGD", run.rec.weights.back(), run.rec.positions.back(), act)},
              function_style("Functions at p = " + std::to_string(c.sgd.steps)), out);
  }
  return out;
}

/// fig3 and fig4: one SGD configuration, function snapshots per seed.
inline ExperimentResult run_snapshots(const ExperimentSpec& spec, const Budget& b,
                                      double epsilon, const std::string& name) {
  ExperimentResult out;
  const auto c = with_overrides(univariate_base(b, epsilon), spec.overrides);
  const auto target = make_piecewise_target(c.target);
  const auto act = make_activation(c.network);
  const auto seeds = seeds_or(spec, {kReferenceSeed});

  std::vector<SgdRun> runs(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) { runs[i] = run_univariate_sgd(c, seeds[i]); });

  for (const auto& run : runs) {
    const std::string tag = std::to_string(run.seed);
    write_record(spec.out_dir / ("run_" + tag + ".csv"), run.rec, out);
    out.rows.push_back(summarize(name, run.seed, run.rec));

    const auto& r = run.rec;
    const std::size_t early = std::min<std::size_t>(r.size() - 1, 10);
    auto at = [&](std::size_t k) {
      return "p = " + format_number(r.times[k]);
    };
    write_svg(spec.out_dir / (name + "_functions_" + tag + ".svg"),
              {sample_curve("target", target),
               network_curve(at(early), r.weights[early], r.positions[early], act),
               network_curve(at(r.size() - 1), r.weights.back(), r.positions.back(), act)},
              function_style("SGD with eps = " + format_number(c.sgd.epsilon) + ", seed " + tag,
                             to_std(r.positions.back())),
              out);
    PlotStyle ls;
    ls.title = "Loss, eps = " + format_number(c.sgd.epsilon);
    ls.x_label = "p";
    ls.y_label = "loss";
    ls.log_y = true;
    write_svg(spec.out_dir / (name + "_loss_" + tag + ".svg"),
              {loss_curve("SGD", r, [&](std::size_t k) { return r.times[k]; })}, ls, out);
  }
  return out;
}

struct SweepPoint {
  double epsilon;
  double mean;
  double sd;
};

inline std::vector<SweepPoint> sweep_means(const std::vector<SummaryRow>& rows,
                                           const std::vector<double>& grid_eps) {
  std::vector<SweepPoint> pts;
  for (double eps : grid_eps) {
    const std::string label = label_of(eps);
    std::vector<double> d;
    for (const auto& r : rows) {
      if (r.label == label) d.push_back(std::sqrt(r.l2_squared()));
    }
    if (d.empty()) continue;
    const double n = static_cast<double>(d.size());
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : d) ss += (x - mean) * (x - mean);
    pts.push_back({eps, mean, d.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0});
  }
  return pts;
}

inline ExperimentResult run_sweep(const ExperimentSpec& spec) {
  for (const auto& o : spec.overrides) {
    if (o.rfind("sgd.epsilon", 0) == 0) throw ConfigError("sgd.epsilon is swept and cannot be overridden");
  }
  ExperimentResult out;
  const auto seeds = seeds_or(spec, first_seeds(20));
  const auto& eps_grid = kEpsilonGrid;

  struct Job {
    double eps;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double e : eps_grid) {
    for (auto s : seeds) jobs.push_back({e, s});
  }
  std::vector<RunRecord> recs(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const auto c = with_overrides(univariate_base(sweep_budget(jobs[i].eps, spec.faithful), jobs[i].eps),
                                  spec.overrides);
    recs[i] = run_univariate_sgd(c, jobs[i].seed).rec;
  });

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const fs::path dir = spec.out_dir / ("eps_" + label_of(jobs[i].eps));
    fs::create_directories(dir);
    write_record(dir / ("run_" + std::to_string(jobs[i].seed) + ".csv"), recs[i], out);
    out.rows.push_back(summarize(label_of(jobs[i].eps), jobs[i].seed, recs[i]));
  }

  const auto pts = sweep_means(out.rows, eps_grid);
  std::ostringstream os;
  os << "epsilon,h,steps,seeds,mean_l2,sd_l2\n";
  Series bars{"mean L2 distance", {}, {}, {}};
  for (const auto& p : pts) {
    const Budget b = sweep_budget(p.epsilon, spec.faithful);
    os << format_number(p.epsilon) << ',' << format_number(b.h) << ',' << b.steps << ','
       << seeds.size() << ',' << format_number(p.mean) << ',' << format_number(p.sd) << '\n';
    bars.x.push_back(p.epsilon);
    bars.y.push_back(p.mean);
    bars.err.push_back(p.sd);
  }
  write_text(spec.out_dir / "sweep.csv", os.str(), out);
  PlotStyle st;
  st.title = "L2 distance to the target vs eps (" + std::to_string(seeds.size()) + " seeds)";
  st.x_label = "eps";
  st.y_label = "L2 distance";
  st.kind = PlotKind::bar;
  write_svg(spec.out_dir / "fig5_barplot.svg", {bars}, st, out);
  return out;
}

struct Regime {
  std::string label;
  double epsilon;
  std::uint64_t table_steps;
};

inline const std::vector<Regime>& table_regimes() {
  static const std::vector<Regime> r = {{"standard", 1.0, 300}, {"two_timescale", 1e-2, 5000}};
  return r;
}

inline Series additive_axis_curve(std::string name, const AdditiveState& s, const Activation& act,
                                  Eigen::Index k) {
  // Component k up to an additive constant: centred on its mean over [0, 1].
  Series c = sample_curve(std::move(name), [&](double x) {
    double y = 0.0;
    for (Eigen::Index j = 0; j < s.neurons(); ++j) y += s.A(j, k) * act(x - s.U(j, k));
    return y;
  });
  const double mean = std::accumulate(c.y.begin(), c.y.end(), 0.0) / static_cast<double>(c.y.size());
  for (double& y : c.y) y -= mean;
  return c;
}

inline AdditiveState unflatten(const Vector& a, const Vector& u, Eigen::Index m, Eigen::Index d) {
  AdditiveState s;
  s.bias = a[0];
  s.A = Eigen::Map<const Matrix>(a.data() + 1, m, d);
  s.U = Eigen::Map<const Matrix>(u.data(), m, d);
  return s;
}

inline void write_regime_bars(const ExperimentSpec& spec, const std::string& name,
                              const std::vector<SummaryRow>& rows, ExperimentResult& out) {
  Series bars{"mean L2 distance", {}, {}, {}};
  std::vector<double> eps;
  for (const auto& r : table_regimes()) eps.push_back(r.epsilon);
  std::vector<SummaryRow> labelled = rows;
  for (auto& row : labelled) {
    for (const auto& r : table_regimes()) {
      if (row.label == r.label) row.label = label_of(r.epsilon);
    }
  }
  for (const auto& p : sweep_means(labelled, eps)) {
    bars.x.push_back(p.epsilon);
    bars.y.push_back(p.mean);
    bars.err.push_back(p.sd);
  }
  PlotStyle st;
  st.title = "L2 distance by regime";
  st.x_label = "eps";
  st.y_label = "L2 distance";
  st.kind = PlotKind::bar;
  write_svg(spec.out_dir / (name + "_barplot.svg"), {bars}, st, out);
}

inline ExperimentResult run_additive(const ExperimentSpec& spec, std::size_t d,
                                     std::size_t faithful_batch, std::size_t default_batch,
                                     const std::string& name) {
  ExperimentResult out;
  const auto seeds = seeds_or(spec, {0});
  const Eigen::Index m = 10;
  struct Job {
    Regime regime;
    std::uint64_t seed;
    ExperimentConfig config;
  };
  std::vector<Job> jobs;
  for (const auto& r : table_regimes()) {
    ExperimentConfig c;
    c.target.kind = "additive";
    c.target.dim = d;
    c.network = {m, "sigmoid", 1e-2};
    const double h = spec.faithful ? 1.0 : std::min(1.0, stable_additive_step(m, static_cast<Eigen::Index>(d)));
    c.sgd.h = h;
    c.sgd.epsilon = r.epsilon;
    c.sgd.steps = experiment_detail::ceil_steps(static_cast<double>(r.table_steps) / h);
    c.sgd.batch_size = spec.faithful ? faithful_batch : default_batch;
    c.sgd.noise = Noise::none;
    c.sgd.eval_every = std::max<std::uint64_t>(1, c.sgd.steps / 100);
    c = with_overrides(c, spec.overrides);
    for (auto s : seeds) jobs.push_back({r, s, c});
  }

  std::vector<RunRecord> recs(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const auto& c = jobs[i].config;
    const auto target = additive_staircase_target(c.target.dim);
    const auto act = make_activation(c.network);
    Rng rng(jobs[i].seed);
    const auto s0 = sample_additive_init(c.network.m, static_cast<Eigen::Index>(c.target.dim), rng);
    SgdConfig sc = c.sgd;
    sc.seed = jobs[i].seed;
    recs[i] = train(s0, target, act, sc);
  });

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& j = jobs[i];
    const std::string tag = j.regime.label + "_" + std::to_string(j.seed);
    write_record(spec.out_dir / ("run_" + tag + ".csv"), recs[i], out);
    out.rows.push_back(summarize(j.regime.label, j.seed, recs[i]));

    const auto act = make_activation(j.config.network);
    const auto dim = static_cast<Eigen::Index>(j.config.target.dim);
    const AdditiveState s =
        unflatten(recs[i].weights.back(), recs[i].positions.back(), j.config.network.m, dim);
    const auto axis_target = additive_staircase_target(1).axis(0);
    Series tgt = sample_curve("target component", axis_target);
    const double tmean = std::accumulate(tgt.y.begin(), tgt.y.end(), 0.0) / static_cast<double>(tgt.y.size());
    for (double& y : tgt.y) y -= tmean;
    write_svg(spec.out_dir / (name + "_" + tag + ".svg"),
              {tgt, additive_axis_curve("network component (axis 1)", s, act, 0)},
              function_style(j.regime.label + " regime, axis 1 (centred)", to_std(Vector(s.U.col(0)))),
              out);
  }
  write_regime_bars(spec, name, out.rows, out);
  return out;
}

inline ReluAffineTarget make_relu_target(const TargetConfig& t) {
  if (t.knots.empty() && t.slopes.empty()) return relu_reference_target();
  try {
    return ReluAffineTarget(t.knots, t.slopes);
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("invalid relu target: ") + e.what());
  }
}

inline ExperimentResult run_relu(const ExperimentSpec& spec) {
  ExperimentResult out;
  const auto seeds = seeds_or(spec, {0});
  struct Job {
    Regime regime;
    std::uint64_t seed;
    ExperimentConfig config;
  };
  std::vector<Job> jobs;
  for (const auto& r : table_regimes()) {
    ExperimentConfig c;
    c.target.kind = "relu";
    c.network = {10, "relu", 0.0};
    c.sgd.h = 1.0;
    c.sgd.epsilon = r.epsilon;
    c.sgd.steps = r.table_steps;
    c.sgd.batch_size = 1000;
    c.sgd.noise = Noise::none;
    c.sgd.eval_every = std::max<std::uint64_t>(1, c.sgd.steps / 100);
    c = with_overrides(c, spec.overrides);
    for (auto s : seeds) jobs.push_back({r, s, c});
  }
  std::vector<RunRecord> recs(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const auto& c = jobs[i].config;
    const auto target = make_relu_target(c.target);
    Rng rng(jobs[i].seed);
    const auto s0 = sample_weighted_init(c.network.m, rng);
    SgdConfig sc = c.sgd;
    sc.seed = jobs[i].seed;
    recs[i] = train(s0, target, make_activation(c.network), sc);
  });
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& j = jobs[i];
    const std::string tag = j.regime.label + "_" + std::to_string(j.seed);
    write_record(spec.out_dir / ("run_" + tag + ".csv"), recs[i], out);
    out.rows.push_back(summarize(j.regime.label, j.seed, recs[i]));
    write_svg(spec.out_dir / ("fig9_" + tag + ".svg"),
              {sample_curve("target", make_relu_target(j.config.target)),
               network_curve("network", recs[i].weights.back(), recs[i].positions.back(),
                             make_activation(j.config.network))},
              function_style(j.regime.label + " regime", to_std(recs[i].positions.back())), out);
  }
  write_regime_bars(spec, "fig9", out.rows, out);
  return out;
}

}  // namespace experiment_detail

/// Levels (1, -1, 0) on thirds; all neurons evenly inside the last piece.
inline PiecewiseConstantTarget counterexample_target() {
  return PiecewiseConstantTarget({0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}, {1.0, -1.0, 0.0});
}

inline Vector counterexample_positions(Eigen::Index m) {
  Vector u(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    u[j] = 2.0 / 3.0 + (static_cast<double>(j) + 0.5) / (3.0 * static_cast<double>(m));
  }
  return u;
}

namespace experiment_detail {

inline ExperimentResult run_counterexample(const ExperimentSpec& spec) {
  ExperimentResult out;
  ExperimentConfig c;
  c.target.kind = "piecewise";
  c.target.breakpoints = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
  c.target.values = {1.0, -1.0, 0.0};
  c.network = {10, "sigmoid", 1e-2};
  c.mode = RunMode::smooth_limit;
  c.flow.t_end = recovery_horizon(1.0, 1.0);
  c.flow.dt = 1e-2;
  c.flow.record_every = 10;
  c = with_overrides(c, spec.overrides);
  const auto target = make_piecewise_target(c.target);
  const auto act = make_activation(c.network);
  const Vector u0 = counterexample_positions(c.network.m);

  const RunRecord rec = integrate_limit_smooth(u0, target, act, c.flow);
  write_record(spec.out_dir / "run_0.csv", rec, out);
  out.rows.push_back(summarize("counterexample", 0, rec));
  const double g0 = limit_gradient(u0, act, target).norm();
  out.notes.push_back("|G(u0)| = " + format_number(g0) + ", loss(0) = " + format_number(rec.losses.front()) +
                      ", loss(end) = " + format_number(rec.losses.back()));

  PlotStyle ls;
  ls.title = "Loss along the two-timescale limit";
  ls.x_label = "tau";
  ls.y_label = "loss";
  write_svg(spec.out_dir / "counterexample_loss.svg",
            {loss_curve("limit", rec, [&](std::size_t k) { return rec.times[k] + 0.0; })}, ls, out);
  write_svg(spec.out_dir / "counterexample_functions.svg",
            {sample_curve("target", target),
             network_curve("best response", rec.weights.back(), rec.positions.back(), act)},
            function_style("Final network", to_std(rec.positions.back())), out);
  return out;
}

inline ExperimentResult run_lemmas(const ExperimentSpec& spec) {
  ExperimentResult out;
  const auto seeds = seeds_or(spec, {0});
  for (auto seed : seeds) {
    Rng rng(seed);
    auto reports = lemma_suite(rng, spec.trials);
    out.reports.insert(out.reports.end(), reports.begin(), reports.end());
  }
  std::ostringstream csv, table;
  write_report_csv(csv, out.reports);
  write_report_table(table, out.reports);
  write_text(spec.out_dir / "lemmas.csv", csv.str(), out);
  out.notes.push_back(table.str());
  return out;
}

inline ExperimentResult run_custom(const ExperimentSpec& spec) {
  ExperimentConfig c;
  if (!spec.config_path.empty()) c = load_config(spec.config_path);
  c = with_overrides(c, spec.overrides);
  c.sgd.validate();
  c.flow.validate();
  if (c.flow.eta != 0.0 && c.flow.eta != c.network.eta) {
    throw ConfigError("flow.eta must be 0 (unset) or equal to network.eta");
  }
  const auto seeds = seeds_or(spec, {c.sgd.seed});
  ExperimentResult out;
  write_text(spec.out_dir / "config.ini", to_ini(c), out);

  std::vector<RunRecord> recs(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    const std::uint64_t seed = seeds[i];
    Rng rng(seed);
    const auto act = make_activation(c.network);
    SgdConfig sc = c.sgd;
    sc.seed = seed;
    if (c.target.kind == "additive") {
      if (c.mode != RunMode::sgd) throw ConfigError("the additive target supports run.mode = sgd only");
      const auto target = additive_staircase_target(c.target.dim);
      recs[i] = train(sample_additive_init(c.network.m, static_cast<Eigen::Index>(c.target.dim), rng),
                      target, act, sc);
      return;
    }
    if (c.target.kind == "relu") {
      if (c.mode != RunMode::sgd) throw ConfigError("the relu target supports run.mode = sgd only");
      recs[i] = train(sample_weighted_init(c.network.m, rng), make_relu_target(c.target), act, sc);
      return;
    }
    const auto target = make_piecewise_target(c.target);
    const NetworkState s0 = sample_init(c.network.m, rng);
    switch (c.mode) {
      case RunMode::sgd:
        recs[i] = train(s0, target, act, sc);
        break;
      case RunMode::full_flow:
        recs[i] = integrate_full_flow(s0.a, s0.u, target, act, c.flow);
        break;
      case RunMode::smooth_limit:
        recs[i] = integrate_limit_smooth(s0.u, target, act, c.flow);
        break;
      case RunMode::reduced_limit:
        recs[i] = integrate_limit_reduced(s0.u, target, c.flow);
        break;
    }
  });
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    write_record(spec.out_dir / ("run_" + std::to_string(seeds[i]) + ".csv"), recs[i], out);
    out.rows.push_back(summarize("custom", seeds[i], recs[i]));
    if (!recs[i].completed()) out.notes.push_back("seed " + std::to_string(seeds[i]) + ": " + recs[i].diagnostic);
  }
  return out;
}

}  // namespace experiment_detail

/// Runs one experiment and writes its artifacts under spec.out_dir.
/// Throws ConfigError for invalid specs or overrides and Error for I/O.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  namespace d = experiment_detail;
  validate(spec);
  std::error_code ec;
  std::filesystem::create_directories(spec.out_dir, ec);
  if (ec) throw Error("cannot create output directory " + spec.out_dir.string() + ": " + ec.message());

  ExperimentResult r;
  if (spec.id == "fig2") r = d::run_limit_comparison(spec);
  else if (spec.id == "fig3") r = d::run_snapshots(spec, two_timescale_budget(spec.faithful), 2e-5, "fig3");
  else if (spec.id == "fig4") r = d::run_snapshots(spec, standard_budget(spec.faithful), 1.0, "fig4");
  else if (spec.id == "fig5-barplot") r = d::run_sweep(spec);
  else if (spec.id == "fig6-2d") r = d::run_additive(spec, 2, 1000, 1000, "fig6");
  else if (spec.id == "fig8-10d") r = d::run_additive(spec, 10, 10000, 1000, "fig8");
  else if (spec.id == "fig9-relu") r = d::run_relu(spec);
  else if (spec.id == "counterexample") r = d::run_counterexample(spec);
  else if (spec.id == "lemmas") r = d::run_lemmas(spec);
  else r = d::run_custom(spec);

  if (!r.rows.empty()) d::write_text(spec.out_dir / "summary.csv", d::summary_csv(r.rows), r);
  return r;
}

}  // namespace tts
