#pragma once

#include <string>
#include <vector>

#include "ovt/scenario_config.hpp"

namespace ovt {

struct EpisodeOutcome {
  int index = 0;
  std::uint64_t seed = 0;
  EpisodePhase final_phase = EpisodePhase::pre_check;
  EpisodeMetrics metrics;
};

struct SuiteSummary {
  std::string name;
  std::string controller;
  int trials = 0;
  int successes = 0, safe_count = 0, collisions = 0, declined = 0, faults = 0, timeouts = 0;
  double duration_min = 0.0, duration_max = 0.0, duration_mean = 0.0;  // over successes
  double min_clearance_front = 1e30, min_clearance_opp = 1e30;
  double median_min_clearance_front = 0.0;
  std::vector<EpisodeOutcome> episodes;
};

struct SuiteOptions {
  int jobs = 1;
  std::string controller_override;       // empty = use config
  double epsilon_override = -1.0;        // < 0 = use config
  bool write_svg = false;
  bool write_artifacts = true;           // per-episode CSV + metrics
  bool keep_logs = false;                // retain TrajectoryLogs in memory
};

struct SuiteResult {
  SuiteSummary summary;
  std::vector<TrajectoryLog> logs;  // filled when keep_logs
};

/// Execute trial_count episodes with split seeds; write per-episode CSVs,
/// metrics files, an aggregate summary, and optional SVG plots.
SuiteResult run_suite(const ScenarioConfig& cfg, const std::string& outdir,
                      const SuiteOptions& opts = SuiteOptions{});

std::string summary_to_text(const SuiteSummary& s);

/// Deterministic re-fold over the per-episode metrics files in a directory.
SuiteSummary summarize_dir(const std::string& outdir);

}  // namespace ovt
