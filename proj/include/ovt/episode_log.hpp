#pragma once

#include <string>

#include "ovt/simulator.hpp"

namespace ovt {

/// Versioned CSV with one row per plant substep; the '#' header carries the
/// seed, the replay-relevant geometry, and the full config echo.
void write_episode_csv(const TrajectoryLog& log, const std::string& path);
TrajectoryLog read_episode_csv(const std::string& path);

/// Per-episode structured-text metrics summary (versioned).
void write_episode_metrics(const TrajectoryLog& log, const std::string& path);
EpisodeMetrics read_episode_metrics(const std::string& path, EpisodePhase* phase = nullptr,
                                    std::uint64_t* seed = nullptr);

struct ReplayReport {
  bool ok = false;
  long first_bad_row = -1;
  std::string message;
  EpisodeMetrics metrics;  // recomputed
};

/// Re-integrate the plant from the logged inputs and confirm the state series
/// match within tol; recompute all metrics. Controller-free.
ReplayReport replay_episode(const TrajectoryLog& log, double tol = 1e-9);
ReplayReport replay_episode_file(const std::string& path, double tol = 1e-9);

}  // namespace ovt
