#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ovt/geometry.hpp"
#include "ovt/rng.hpp"
#include "ovt/vehicle_models.hpp"
#include "ovt/vlcbf.hpp"

namespace ovt {

struct LaneGeometry {
  double width = 3.5;
  double ego_center_y = 0.0;
  double opp_center_y = 3.5;
};

/// Uniform perception noise injected into measurements of the other vehicles;
/// the ego's own state is measured exactly.
struct NoiseModel {
  bool enabled = true;
  double pos_range_far = 0.5;   // |mu_x|, |mu_y| beyond near_distance
  double pos_range_near = 0.1;  // |mu_x|, |mu_y| within near_distance
  double near_distance = 2.0;
  double vel_rel_range = 0.1;   // mu_v within +/-10% of actual
};

struct BehaviorPolicy {
  enum class Kind { constant_speed, piecewise_accel, vlcbf_follower };
  Kind kind = Kind::constant_speed;

  // piecewise_accel: accelerate at `accel_rate` while t in [window_begin,
  // window_end) and the speed magnitude is below `speed_cap`.
  double accel_rate = 0.0;
  double window_begin = 0.0;
  double window_end = 0.0;
  double speed_cap = 1e30;

  // vlcbf_follower: cruise toward a signed target speed, projected onto the
  // admissible set of its own longitudinal VL-CBF against the ego.
  KappaPolynomial kappa = KappaPolynomial::unit();
  double a_l = 8.0;
  double cruise_speed = 0.0;
  double cruise_gain = 1.0;
};

struct WorldState {
  double t = 0.0;
  EgoState ego;
  PointState front;
  bool has_opposing = false;
  PointState opposing;
};

struct ObjectMeasurement {
  double x = 0.0;
  double y = 0.0;
  double v = 0.0;
};

struct Measurement {
  double t = 0.0;
  EgoState ego;  // exact
  ObjectMeasurement front;
  bool opposing_detected = false;
  ObjectMeasurement opposing;
};

enum class EpisodePhase {
  pre_check,
  overtaking,
  aborting,
  done_forward,
  done_back,
  declined,
  fault,
  timeout,
};

std::string to_string(EpisodePhase p);

struct LogRow {
  double t = 0.0;
  double ego_x = 0.0, ego_y = 0.0, ego_psi = 0.0, ego_v = 0.0;
  double front_x = 0.0, front_v = 0.0;
  double opp_x = 0.0, opp_v = 0.0;  // NaN columns when absent
  double alpha = 0.0, beta = 0.0;   // input applied over the substep ending here
  int phase = 0;
  double h_ef = 0.0, h_eo = 0.0;
  double clearance_front = 0.0, clearance_opp = 0.0;
};

/// One controller iteration: which problems were attempted and how they went.
struct SolveRecord {
  double t = 0.0;
  int phase = 0;
  bool q1_attempted = false, q1_solved = false;
  bool q2_attempted = false, q2_solved = false;
  double t1 = 0.0, t2 = 0.0;  // estimated completion times when solved
  std::string event;
};

struct EpisodeMetrics {
  bool success = false;
  bool safe = false;
  bool collision = false;
  bool declined = false;
  bool fault = false;
  bool timeout = false;
  double duration = 0.0;
  double min_clearance_front = 1e30;
  double min_clearance_opp = 1e30;
  double min_h_ef = 1e30;
  double min_h_eo = 1e30;
  int controller_iterations = 0;
};

struct EpisodeSetup {
  std::uint64_t seed = 0;
  double substep = 1e-3;
  double max_duration = 30.0;
  double opp_sample_hz = 50.0;
  double detect_range = 150.0;
  LaneGeometry lanes;
  NoiseModel noise;

  EgoState ego0;
  VehicleParams ego_params;
  PointState front0;
  VehicleParams front_params;
  BehaviorPolicy front_policy;
  bool has_opposing = false;
  PointState opp0;
  VehicleParams opp_params;
  BehaviorPolicy opp_policy;

  // Geometry used for the logged h columns and metrics.
  EllipseBarrier log_ellipse;
  LongitudinalBarrier log_longitudinal;
  double log_epsilon = 0.3;
};

struct TrajectoryLog {
  std::uint64_t seed = 0;
  std::string config_text;  // canonical config echo for replay
  EpisodeSetup setup;
  std::vector<LogRow> rows;
  std::vector<SolveRecord> solves;
  std::vector<Measurement> measurements;
  std::vector<std::string> events;
  EpisodePhase final_phase = EpisodePhase::pre_check;
  EpisodeMetrics metrics;
};

/// What the controller wants done next.
struct ControlCommand {
  EgoInput u;
  double hold_s = 0.0;
  bool finished = false;  // episode complete (converged / declined)
  bool fault = false;     // distinguished fault, abort loudly
  EpisodePhase phase = EpisodePhase::overtaking;
  std::string note;
};

using ControllerHook = std::function<ControlCommand(const Measurement&, TrajectoryLog&)>;

/// Noisy measurement of the world. Uses the caller-provided noise stream; the
/// opposing vehicle is only reported within detect_range.
Measurement measure(const WorldState& w, const EpisodeSetup& setup, Rng& noise_rng);

/// The opposing vehicle's own control law: nominal cruise input projected
/// onto the admissible set of its longitudinal VL-CBF against the ego.
PointInput vlcbf_follower_input(const PointState& opp, const EgoState& ego,
                                const VehicleParams& ego_params, const KappaPolynomial& kappa_oe,
                                double a_l, double nominal);

/// Per-pair collision test and signed clearances at a world state.
struct ClearanceReport {
  double front = 1e30;
  double opp = 1e30;
  bool collision_front = false;
  bool collision_opp = false;
};
ClearanceReport collision_check(const WorldState& w, const EpisodeSetup& setup);

/// Plant substep for the ego: RK4 plus the physical v >= 0 clamp. Shared with
/// log replay so re-integration is bit-exact.
EgoState plant_step_ego(const EgoState& s, const EgoInput& u, const VehicleParams& p, double dt);

/// Closed-loop episode: fixed-substep plant, behaviors at the opposing
/// sampling rate, controller consulted per its own hold clock.
TrajectoryLog run_episode(const EpisodeSetup& setup, const ControllerHook& controller);

/// Recompute the metrics block from rows/records (used by replay).
EpisodeMetrics compute_metrics(const TrajectoryLog& log);

}  // namespace ovt
