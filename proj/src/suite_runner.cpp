#include "ovt/suite_runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "ovt/episode_log.hpp"
#include "ovt/svg_plot.hpp"

namespace ovt {

namespace {

namespace fs = std::filesystem;

std::string episode_stem(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "episode_%03d", index);
  return buf;
}

SuiteSummary fold(const std::string& name, const std::string& controller,
                  std::vector<EpisodeOutcome> episodes) {
  SuiteSummary s;
  s.name = name;
  s.controller = controller;
  std::sort(episodes.begin(), episodes.end(),
            [](const EpisodeOutcome& a, const EpisodeOutcome& b) { return a.index < b.index; });
  s.trials = static_cast<int>(episodes.size());
  double dur_sum = 0.0;
  int dur_n = 0;
  std::vector<double> fronts;
  s.duration_min = 1e30;
  for (const EpisodeOutcome& e : episodes) {
    const EpisodeMetrics& m = e.metrics;
    s.successes += m.success ? 1 : 0;
    s.safe_count += m.safe ? 1 : 0;
    s.collisions += m.collision ? 1 : 0;
    s.declined += m.declined ? 1 : 0;
    s.faults += m.fault ? 1 : 0;
    s.timeouts += m.timeout ? 1 : 0;
    if (m.success) {
      s.duration_min = std::min(s.duration_min, m.duration);
      s.duration_max = std::max(s.duration_max, m.duration);
      dur_sum += m.duration;
      ++dur_n;
    }
    s.min_clearance_front = std::min(s.min_clearance_front, m.min_clearance_front);
    s.min_clearance_opp = std::min(s.min_clearance_opp, m.min_clearance_opp);
    fronts.push_back(m.min_clearance_front);
  }
  if (dur_n == 0) s.duration_min = 0.0;
  s.duration_mean = dur_n ? dur_sum / dur_n : 0.0;
  if (!fronts.empty()) {
    std::sort(fronts.begin(), fronts.end());
    const std::size_t n = fronts.size();
    s.median_min_clearance_front =
        n % 2 ? fronts[n / 2] : 0.5 * (fronts[n / 2 - 1] + fronts[n / 2]);
  }
  s.episodes = std::move(episodes);
  return s;
}

}  // namespace

SuiteResult run_suite(const ScenarioConfig& base_cfg, const std::string& outdir,
                      const SuiteOptions& opts) {
  ScenarioConfig cfg = base_cfg;
  if (!opts.controller_override.empty()) cfg.controller = opts.controller_override;
  if (opts.epsilon_override >= 0.0) cfg.epsilon = opts.epsilon_override;
  validate_config(cfg);

  if (opts.write_artifacts) fs::create_directories(outdir);
  const std::string config_echo = serialize_config(cfg);

  SuiteResult result;
  std::vector<EpisodeOutcome> outcomes(static_cast<std::size_t>(cfg.trials));
  if (opts.keep_logs) result.logs.resize(static_cast<std::size_t>(cfg.trials));

  std::atomic<int> next{0};
  const int jobs = std::max(1, std::min(opts.jobs, std::max(1, cfg.trials)));
  auto worker = [&]() {
    for (;;) {
      const int k = next.fetch_add(1);
      if (k >= cfg.trials) return;
      const EpisodeSetup setup = make_episode_setup(cfg, k);
      const FrameworkConfig fc = make_framework_config(cfg);
      TrajectoryLog log = cfg.controller == "mpcdc"
                              ? run_mpcdc(setup, fc, make_dc_spec(cfg))
                              : run_framework(setup, fc);
      log.config_text = config_echo;

      EpisodeOutcome out;
      out.index = k;
      out.seed = setup.seed;
      out.final_phase = log.final_phase;
      out.metrics = log.metrics;
      outcomes[static_cast<std::size_t>(k)] = out;

      if (opts.write_artifacts) {
        const std::string stem = (fs::path(outdir) / episode_stem(k)).string();
        write_episode_csv(log, stem + ".csv");
        write_episode_metrics(log, stem + ".metrics");
        if (opts.write_svg) write_episode_svg(log, stem + ".svg");
      }
      if (opts.keep_logs) result.logs[static_cast<std::size_t>(k)] = std::move(log);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  result.summary = fold(cfg.name, cfg.controller, std::move(outcomes));
  if (opts.write_artifacts) {
    std::ofstream os(fs::path(outdir) / "summary.txt");
    os << summary_to_text(result.summary);
  }
  return result;
}

std::string summary_to_text(const SuiteSummary& s) {
  std::ostringstream os;
  os.precision(17);
  os << "ovt-suite-summary v1\n";
  os << "name = " << s.name << "\n";
  os << "controller = " << s.controller << "\n";
  os << "trials = " << s.trials << "\n";
  os << "successes = " << s.successes << "\n";
  os << "safe = " << s.safe_count << "\n";
  os << "collisions = " << s.collisions << "\n";
  os << "declined = " << s.declined << "\n";
  os << "faults = " << s.faults << "\n";
  os << "timeouts = " << s.timeouts << "\n";
  os << "duration_min = " << s.duration_min << "\n";
  os << "duration_max = " << s.duration_max << "\n";
  os << "duration_mean = " << s.duration_mean << "\n";
  os << "min_clearance_front = " << s.min_clearance_front << "\n";
  os << "min_clearance_opp = " << s.min_clearance_opp << "\n";
  os << "median_min_clearance_front = " << s.median_min_clearance_front << "\n";
  for (const EpisodeOutcome& e : s.episodes) {
    os << "episode " << e.index << " seed " << e.seed << " phase " << to_string(e.final_phase)
       << " success " << (e.metrics.success ? 1 : 0) << " safe " << (e.metrics.safe ? 1 : 0)
       << " duration " << e.metrics.duration << " min_front " << e.metrics.min_clearance_front
       << " min_opp " << e.metrics.min_clearance_opp << "\n";
  }
  return os.str();
}

SuiteSummary summarize_dir(const std::string& outdir) {
  std::vector<EpisodeOutcome> outcomes;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(outdir))
    if (entry.path().extension() == ".metrics") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  int idx = 0;
  for (const fs::path& p : files) {
    EpisodeOutcome out;
    std::uint64_t seed = 0;
    EpisodePhase phase = EpisodePhase::pre_check;
    out.metrics = read_episode_metrics(p.string(), &phase, &seed);
    const std::string stem = p.stem().string();  // episode_###
    const std::size_t us = stem.find_last_of('_');
    out.index = us == std::string::npos ? idx : std::atoi(stem.c_str() + us + 1);
    out.seed = seed;
    out.final_phase = phase;
    outcomes.push_back(out);
    ++idx;
  }
  return fold(fs::path(outdir).filename().string(), "", std::move(outcomes));
}

}  // namespace ovt
