#pragma once

// Experiment configuration in INI form:
//
//   [target]   kind = staircase | piecewise | relu | additive
//              breakpoints = 0, 0.5, 1     values = 0, 1     dim = 2
//   [network]  m = 20   activation = sigmoid | heaviside | relu   eta = 4e-3
//   [run]      mode = sgd | full_flow | smooth_limit | reduced_limit
//   [sgd]      h, epsilon, steps, batch_size, noise, seed, eval_every
//   [flow]     epsilon, eta, dt, t_end, record_every, absorb_tol
//
// Every key is optional; unknown sections or keys are rejected.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "tts/dynamics.hpp"
#include "tts/errors.hpp"
#include "tts/sgd.hpp"
#include "tts/targets.hpp"

namespace tts {

enum class RunMode { sgd, full_flow, smooth_limit, reduced_limit };

inline RunMode parse_run_mode(const std::string& s) {
  if (s == "sgd") return RunMode::sgd;
  if (s == "full_flow") return RunMode::full_flow;
  if (s == "smooth_limit") return RunMode::smooth_limit;
  if (s == "reduced_limit") return RunMode::reduced_limit;
  throw ConfigError("unknown run mode '" + s + "'");
}

struct TargetConfig {
  std::string kind = "staircase";
  std::vector<double> breakpoints;
  std::vector<double> values;
  std::vector<double> knots;   // relu
  std::vector<double> slopes;  // relu
  std::size_t dim = 2;         // additive
};

struct NetworkConfig {
  long m = 20;
  std::string activation = "sigmoid";
  double eta = 4e-3;
};

struct ExperimentConfig {
  TargetConfig target;
  NetworkConfig network;
  RunMode mode = RunMode::sgd;
  SgdConfig sgd;
  FlowConfig flow;
};

namespace config_detail {

inline double parse_double(const std::string& key, const std::string& text) {
  const char* b = text.data();
  const char* e = b + text.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t')) --e;
  double v = 0.0;
  const auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e || b == e) {
    throw ConfigError("invalid number for " + key + ": '" + text + "'");
  }
  return v;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  // Accept integral values written in scientific notation, e.g. 1.8e6.
  const double v = parse_double(key, text);
  if (!(v >= 0.0) || v != static_cast<double>(static_cast<std::uint64_t>(v))) {
    throw ConfigError("expected a non-negative integer for " + key + ": '" + text + "'");
  }
  return static_cast<std::uint64_t>(v);
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

inline std::string format_list(const std::vector<double>& xs) {
  std::string out;
  char buf[32];
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, xs[k]);
    (void)ec;
    if (k) out += ", ";
    out.append(buf, p);
  }
  return out;
}

inline const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"target", {"kind", "breakpoints", "values", "knots", "slopes", "dim"}},
      {"network", {"m", "activation", "eta"}},
      {"run", {"mode"}},
      {"sgd", {"h", "epsilon", "steps", "batch_size", "noise", "seed", "eval_every"}},
      {"flow", {"epsilon", "eta", "dt", "t_end", "record_every", "absorb_tol"}},
  };
  return s;
}

}  // namespace config_detail

/// Applies one "section.key = value" setting.
inline void apply_setting(ExperimentConfig& c, const std::string& section,
                          const std::string& key, const std::string& value) {
  using namespace config_detail;
  const auto& sch = schema();
  const auto sec = sch.find(section);
  if (sec == sch.end()) throw ConfigError("unknown config section [" + section + "]");
  if (!sec->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
  const std::string name = section + "." + key;

  if (section == "target") {
    if (key == "kind") c.target.kind = value;
    else if (key == "breakpoints") c.target.breakpoints = parse_list(name, value);
    else if (key == "values") c.target.values = parse_list(name, value);
    else if (key == "knots") c.target.knots = parse_list(name, value);
    else if (key == "slopes") c.target.slopes = parse_list(name, value);
    else if (key == "dim") c.target.dim = parse_uint(name, value);
  } else if (section == "network") {
    if (key == "m") c.network.m = static_cast<long>(parse_uint(name, value));
    else if (key == "activation") c.network.activation = value;
    else if (key == "eta") c.network.eta = parse_double(name, value);
  } else if (section == "run") {
    c.mode = parse_run_mode(value);
  } else if (section == "sgd") {
    if (key == "h") c.sgd.h = parse_double(name, value);
    else if (key == "epsilon") c.sgd.epsilon = parse_double(name, value);
    else if (key == "steps") c.sgd.steps = parse_uint(name, value);
    else if (key == "batch_size") c.sgd.batch_size = parse_uint(name, value);
    else if (key == "noise") c.sgd.noise = parse_noise(value);
    else if (key == "seed") c.sgd.seed = parse_uint(name, value);
    else if (key == "eval_every") c.sgd.eval_every = parse_uint(name, value);
  } else if (section == "flow") {
    if (key == "epsilon") c.flow.epsilon = parse_double(name, value);
    else if (key == "eta") c.flow.eta = parse_double(name, value);
    else if (key == "dt") c.flow.dt = parse_double(name, value);
    else if (key == "t_end") c.flow.t_end = parse_double(name, value);
    else if (key == "record_every") c.flow.record_every = parse_uint(name, value);
    else if (key == "absorb_tol") c.flow.absorb_tol = parse_double(name, value);
  }
}

/// Parses "section.key=value".
inline void apply_override(ExperimentConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override must look like section.key=value: '" + assignment + "'");
  }
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  apply_setting(c, trim(assignment.substr(0, dot)), trim(assignment.substr(dot + 1, eq - dot - 1)),
                trim(assignment.substr(eq + 1)));
}

inline void apply_ini(ExperimentConfig& c, std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("top-level key '" + section + "' outside a section");
    }
    for (const auto& [key, node] : body) apply_setting(c, section, key, node.data());
  }
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  apply_ini(base, in);
  return base;
}

/// INI text that round-trips through apply_ini.
inline std::string to_ini(const ExperimentConfig& c) {
  using config_detail::format_list;
  std::ostringstream os;
  os.precision(17);
  os << "[target]\nkind = " << c.target.kind << '\n';
  if (!c.target.breakpoints.empty()) os << "breakpoints = " << format_list(c.target.breakpoints) << '\n';
  if (!c.target.values.empty()) os << "values = " << format_list(c.target.values) << '\n';
  if (!c.target.knots.empty()) os << "knots = " << format_list(c.target.knots) << '\n';
  if (!c.target.slopes.empty()) os << "slopes = " << format_list(c.target.slopes) << '\n';
  os << "dim = " << c.target.dim << "\n\n";
  os << "[network]\nm = " << c.network.m << "\nactivation = " << c.network.activation
     << "\neta = " << format_list({c.network.eta}) << "\n\n";
  static const char* modes[] = {"sgd", "full_flow", "smooth_limit", "reduced_limit"};
  os << "[run]\nmode = " << modes[static_cast<int>(c.mode)] << "\n\n";
  os << "[sgd]\nh = " << format_list({c.sgd.h}) << "\nepsilon = " << format_list({c.sgd.epsilon})
     << "\nsteps = " << c.sgd.steps << "\nbatch_size = " << c.sgd.batch_size
     << "\nnoise = " << to_string(c.sgd.noise) << "\nseed = " << c.sgd.seed
     << "\neval_every = " << c.sgd.eval_every << "\n\n";
  os << "[flow]\nepsilon = " << format_list({c.flow.epsilon}) << "\neta = " << format_list({c.flow.eta})
     << "\ndt = " << format_list({c.flow.dt}) << "\nt_end = " << format_list({c.flow.t_end})
     << "\nrecord_every = " << c.flow.record_every
     << "\nabsorb_tol = " << format_list({c.flow.absorb_tol}) << '\n';
  return os.str();
}

inline PiecewiseConstantTarget make_piecewise_target(const TargetConfig& t) {
  if (t.kind == "staircase") return staircase_target();
  if (t.kind == "piecewise") {
    try {
      return PiecewiseConstantTarget(t.breakpoints, t.values);
    } catch (const PreconditionError& e) {
      throw ConfigError(std::string("invalid target: ") + e.what());
    }
  }
  throw ConfigError("target kind '" + t.kind + "' is not piecewise constant");
}

inline Activation make_activation(const NetworkConfig& n) {
  if (n.activation == "sigmoid") {
    if (!(n.eta > 0.0)) throw ConfigError("network.eta must be > 0 for the sigmoid");
    return Activation::sigmoid(n.eta);
  }
  if (n.activation == "heaviside") return Activation::step();
  if (n.activation == "relu") return Activation::relu();
  throw ConfigError("unknown activation '" + n.activation + "'");
}

}  // namespace tts
