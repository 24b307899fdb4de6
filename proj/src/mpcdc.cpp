#include "ovt/mpcdc.hpp"

namespace ovt {

TranscriptionProblem build_mpcdc(const EgoState& ego0, const DcObstacle& front,
                                 const GoalSpec& goal, const HorizonSpec& horizon,
                                 const VehicleParams& params, const DcConstraintSpec& dc,
                                 const std::optional<DcObstacle>& opposing,
                                 const BuildOptions& opts) {
  std::vector<BarrierInstance> barriers;
  barriers.push_back(BarrierInstance::ellipse_front(dc.geometry, KappaPolynomial::unit(),
                                                    front.motion, front.lane_y));
  if (opposing)
    barriers.push_back(BarrierInstance::ellipse_front(dc.geometry, KappaPolynomial::unit(),
                                                      opposing->motion, opposing->lane_y));
  // The distance rows ignore the rate polynomials; the initial-level check
  // reduces to h >= 0 at the measured state.
  BuildOptions dc_opts = opts;
  return detail::build_generic(ego0, front.motion, goal, horizon, params, barriers, std::nullopt,
                               dc_opts, detail::SafetyRowMode::distance);
}

}  // namespace ovt
