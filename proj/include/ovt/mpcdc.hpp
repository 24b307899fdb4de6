#pragma once

#include <optional>

#include "ovt/transcription.hpp"

namespace ovt {

/// Baseline comparison controller: identical transcription and objective, but
/// the VL-CBF rows are replaced by raw node-wise ellipse distance constraints
/// h(x_e^i) >= 0. The geometry is shared with the VL-CBF setup so the
/// comparison is apples-to-apples.
struct DcConstraintSpec {
  EllipseBarrier geometry;
};

/// A scheduled vehicle the baseline keeps node-wise ellipse distance from.
struct DcObstacle {
  MotionProfile motion;
  double lane_y = 0.0;
};

TranscriptionProblem build_mpcdc(const EgoState& ego0, const DcObstacle& front,
                                 const GoalSpec& goal, const HorizonSpec& horizon,
                                 const VehicleParams& params, const DcConstraintSpec& dc,
                                 const std::optional<DcObstacle>& opposing = std::nullopt,
                                 const BuildOptions& opts = BuildOptions{});

}  // namespace ovt
