#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "tts/config.hpp"
#include "tts/errors.hpp"
#include "tts/experiments.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

// Accepts "3", "0-19" and comma-separated mixtures of both.
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    const auto dash = item.find('-');
    try {
      std::size_t used = 0;
      if (dash == std::string::npos) {
        seeds.push_back(std::stoull(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } else {
        const auto lo = std::stoull(item.substr(0, dash), &used);
        if (used != dash) throw std::invalid_argument(item);
        const std::string rest = item.substr(dash + 1);
        const auto hi = std::stoull(rest, &used);
        if (used != rest.size() || hi < lo) throw std::invalid_argument(item);
        for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
      }
    } catch (const std::exception&) {
      throw tts::ConfigError("invalid seed list '" + text + "'");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (seeds.empty()) throw tts::ConfigError("seed list must not be empty");
  return seeds;
}

std::string default_out_dir(const std::string& id) {
  const char* env = std::getenv("TTS_OUTPUT_DIR");
  const std::string root = env && *env ? env : "tts_out";
  return root + "/" + id;
}

struct Options {
  std::string id;
  std::string seeds;
  std::string out;
  std::vector<std::string> sets;
  std::string config;
  bool faithful = false;
  std::size_t trials = 1000;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--seeds", o.seeds, "Seeds, e.g. 0-19 or 1,5,7");
  cmd->add_option("--out", o.out, "Output directory (default: $TTS_OUTPUT_DIR/<id> or tts_out/<id>)");
  cmd->add_option("--set", o.sets, "Override a config value: section.key=value")->take_all();
  cmd->add_flag("--faithful", o.faithful, "Use the full-length reference budgets (slow)");
}

int run(const Options& o) {
  tts::ExperimentSpec spec;
  spec.id = o.id;
  spec.overrides = o.sets;
  spec.out_dir = o.out.empty() ? default_out_dir(o.id) : o.out;
  if (!o.seeds.empty()) spec.seeds = parse_seeds(o.seeds);
  spec.faithful = o.faithful;
  spec.config_path = o.config;
  spec.trials = o.trials;

  const tts::ExperimentResult r = tts::run_experiment(spec);
  for (const auto& row : r.rows) {
    std::cout << row.label << " seed=" << row.seed << " status=" << tts::to_string(row.status)
              << " loss=" << tts::format_number(row.final_loss);
    double worst = 0.0;
    for (double a : row.alignment) worst = std::max(worst, a);
    if (!row.alignment.empty()) std::cout << " max_alignment=" << tts::format_number(worst);
    std::cout << '\n';
  }
  for (const auto& note : r.notes) std::cout << note << '\n';
  std::cout << "wrote " << r.files.size() << " files to " << spec.out_dir.string() << '\n';
  if (!r.ok()) {
    std::cerr << "experiment " << o.id << " reported failures\n";
    return kExitFailure;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-timescale shallow network experiments"};
  app.require_subcommand(1);
  Options o;

  auto* run_cmd = app.add_subcommand("run", "Run a named experiment");
  run_cmd->add_option("id", o.id, "Experiment id")
      ->required()
      ->check(CLI::IsMember(tts::experiment_ids()));
  add_common(run_cmd, o);
  run_cmd->add_option("--config", o.config, "Config file (custom only)");
  run_cmd->add_option("--trials", o.trials, "Trials per check (lemmas only)");

  auto* sweep_cmd = app.add_subcommand("sweep-eps", "Sweep eps over 20 seeds");
  add_common(sweep_cmd, o);

  auto* lemma_cmd = app.add_subcommand("verify-lemmas", "Check the bound suite on random configurations");
  add_common(lemma_cmd, o);
  lemma_cmd->add_option("--trials", o.trials, "Trials per check");

  auto* custom_cmd = app.add_subcommand("custom", "Run an experiment described by a config file");
  custom_cmd->add_option("--config", o.config, "INI config file")->required();
  add_common(custom_cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (sweep_cmd->parsed()) o.id = "fig5-barplot";
  if (lemma_cmd->parsed()) o.id = "lemmas";
  if (custom_cmd->parsed()) o.id = "custom";

  try {
    return run(o);
  } catch (const tts::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
