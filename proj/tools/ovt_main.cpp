// Two-way-road overtaking toolkit CLI: batch suites, single episodes, log
// replay and summary aggregation.
//
// Exit codes: 0 ok, 1 config error, 2 safety regression, 3 replay mismatch.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "ovt/episode_log.hpp"
#include "ovt/suite_runner.hpp"
#include "ovt/svg_plot.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitSafety = 2;
constexpr int kExitReplay = 3;

int cmd_run_suite(const std::string& cfg_path, const std::string& outdir,
                  const ovt::SuiteOptions& opts) {
  ovt::ScenarioConfig cfg;
  try {
    cfg = ovt::load_config_file(cfg_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    const ovt::SuiteResult res = ovt::run_suite(cfg, outdir, opts);
    std::cout << ovt::summary_to_text(res.summary);
    const std::string controller =
        opts.controller_override.empty() ? cfg.controller : opts.controller_override;
    if (controller == "vlcbf-dual" && (res.summary.collisions > 0 || res.summary.faults > 0)) {
      std::cerr << "safety regression: collisions=" << res.summary.collisions
                << " faults=" << res.summary.faults << "\n";
      return kExitSafety;
    }
    return kExitOk;
  } catch (const ovt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}

int cmd_run_one(const std::string& cfg_path, const std::string& outdir, long seed_override,
                bool svg, const ovt::SuiteOptions& base) {
  ovt::ScenarioConfig cfg;
  try {
    cfg = ovt::load_config_file(cfg_path);
    if (seed_override >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed_override);
    cfg.trials = 1;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  ovt::SuiteOptions opts = base;
  opts.write_svg = svg;
  opts.jobs = 1;
  const ovt::SuiteResult res = ovt::run_suite(cfg, outdir, opts);
  std::cout << ovt::summary_to_text(res.summary);
  const std::string controller =
      opts.controller_override.empty() ? cfg.controller : opts.controller_override;
  if (controller == "vlcbf-dual" && (res.summary.collisions > 0 || res.summary.faults > 0))
    return kExitSafety;
  return kExitOk;
}

int cmd_replay(const std::string& log_path) {
  try {
    const ovt::ReplayReport rep = ovt::replay_episode_file(log_path);
    if (!rep.ok) {
      std::cerr << rep.message << "\n";
      return kExitReplay;
    }
    std::cout << "replay ok\n";
    std::cout << "duration = " << rep.metrics.duration << "\n";
    std::cout << "min_clearance_front = " << rep.metrics.min_clearance_front << "\n";
    std::cout << "min_clearance_opp = " << rep.metrics.min_clearance_opp << "\n";
    std::cout << "collision = " << (rep.metrics.collision ? 1 : 0) << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "replay error: " << e.what() << "\n";
    return kExitReplay;
  }
}

int cmd_summarize(const std::string& outdir) {
  try {
    std::cout << ovt::summary_to_text(ovt::summarize_dir(outdir));
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "summarize error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-way-road overtaking toolkit"};
  app.require_subcommand(1);

  int jobs = 1;
  std::string controller;
  double epsilon = -1.0;
  app.add_option("--jobs", jobs, "concurrent episodes");
  app.add_option("--controller", controller, "override controller (vlcbf-dual|mpcdc)")
      ->check(CLI::IsMember({"vlcbf-dual", "mpcdc"}));
  app.add_option("--epsilon", epsilon, "override the enforced barrier level");

  std::string cfg_path, outdir = ".", log_path;
  long seed = -1;
  bool svg = false;

  auto* run_suite = app.add_subcommand("run-suite", "run a batch of seeded episodes");
  run_suite->add_option("config", cfg_path)->required();
  run_suite->add_option("outdir", outdir)->required();

  auto* run_one = app.add_subcommand("run-one", "run a single episode");
  run_one->add_option("config", cfg_path)->required();
  run_one->add_option("--seed", seed, "master seed override");
  run_one->add_flag("--svg", svg, "emit the trajectory/clearance plot");
  run_one->add_option("--out", outdir, "output directory");

  auto* replay = app.add_subcommand("replay", "verify a log by re-integration");
  replay->add_option("log", log_path)->required();

  auto* summarize = app.add_subcommand("summarize", "aggregate an output directory");
  summarize->add_option("outdir", outdir)->required();

  CLI11_PARSE(app, argc, argv);

  ovt::SuiteOptions opts;
  opts.jobs = jobs;
  opts.controller_override = controller;
  opts.epsilon_override = epsilon;

  if (run_suite->parsed()) return cmd_run_suite(cfg_path, outdir, opts);
  if (run_one->parsed()) return cmd_run_one(cfg_path, outdir, seed, svg, opts);
  if (replay->parsed()) return cmd_replay(log_path);
  if (summarize->parsed()) return cmd_summarize(outdir);
  return kExitOk;
}
