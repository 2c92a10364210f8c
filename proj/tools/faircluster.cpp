#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "faircluster/errors.hpp"
#include "faircluster/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("faircluster");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  const char* env = std::getenv("FAIRCLUSTER_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--override", c.overrides, "Override a config field, key=value (repeatable)");
  cmd->add_option("--seed", c.seed, "Override the config seed");
}

faircluster::ExperimentConfig load(const Common& c) {
  auto config = faircluster::load_config(c.config_path);
  for (const auto& o : c.overrides) faircluster::apply_override(config, o);
  if (c.seed) config.seed = *c.seed;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Fair (k, p)-clustering under overlapping group constraints"};
  app.require_subcommand(1);

  Common run_args, oracle_args, lb_args;
  int jobs = 1;
  long long aflp_cap = 40000;
  double guard = 1e7;
  int lower_bound = 0;

  auto* run = app.add_subcommand("run", "Run the (k, delta) grid and write report.json, cells.csv, clusters.csv");
  add_common(run, run_args);
  run->add_option("--jobs", jobs, "Cells evaluated concurrently")->check(CLI::PositiveNumber);
  run->add_option("--aflp-pair-cap", aflp_cap, "Skip the almost-fair LP above this many (client, facility) pairs");

  auto* oracle = app.add_subcommand("oracle", "Compare against brute-force optima (tiny datasets only)");
  add_common(oracle, oracle_args);
  oracle->add_option("--guard", guard, "Largest number of enumerated states");

  auto* lb = app.add_subcommand("lb", "Lower-bounded clustering: every cluster gets at least L points");
  add_common(lb, lb_args);
  lb->add_option("--L", lower_bound, "Minimum cluster size")->required()->check(CLI::PositiveNumber);
  lb->add_option("--jobs", jobs, "k values evaluated concurrently")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto config = load(run_args);
      faircluster::RunOptions options;
      options.jobs = jobs;
      options.aflp_pair_cap = aflp_cap;
      auto report = faircluster::run_experiment(config, options);
      faircluster::write_reports(report);
      int failed = report.failures();
      std::cout << report.cells.size() - failed << " of " << report.cells.size() << " cells succeeded; reports in "
                << config.output_dir.string() << "\n";
      return failed == 0 ? kExitOk : kExitPartial;
    }
    if (*oracle) {
      auto config = load(oracle_args);
      auto cells = faircluster::run_oracle(config, guard);
      int bad = 0;
      for (const auto& c : cells) {
        bad += c.status != "ok" || !c.within_bound;
        std::cout << "k=" << c.k << " delta=" << c.delta << " " << c.status << " fair_cost=" << c.fair_cost
                  << " opt_fair=" << (c.opt_fair ? std::to_string(*c.opt_fair) : "-")
                  << (c.within_bound ? "" : " BOUND VIOLATED") << "\n";
      }
      return bad == 0 ? kExitOk : kExitPartial;
    }
    if (*lb) {
      auto config = load(lb_args);
      auto cells = faircluster::run_lower_bounded(config, lower_bound, jobs);
      int bad = 0;
      for (const auto& c : cells) {
        bad += c.status != "ok";
        std::cout << "k=" << c.k << " L=" << c.lower_bound << " " << c.status << " cost=" << c.cost
                  << " opened=" << c.opened << " min_cluster=" << c.min_cluster << "\n";
      }
      return bad == 0 ? kExitOk : kExitPartial;
    }
  } catch (const faircluster::ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return kExitConfig;
  } catch (const faircluster::GuardExceeded& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const faircluster::DomainError& e) {
    spdlog::error("invalid input: {}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  }
  return kExitOk;
}
