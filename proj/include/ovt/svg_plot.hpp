#pragma once

#include <string>

#include "ovt/simulator.hpp"

namespace ovt {

/// Episode picture: lane bands, vehicle rectangles at key frames, the
/// executed trajectories, and an h(t)/clearance(t) strip underneath. Drawn
/// purely from the episode's own rows.
void write_episode_svg(const TrajectoryLog& log, const std::string& path);

}  // namespace ovt
