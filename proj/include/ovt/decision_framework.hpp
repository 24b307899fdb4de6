#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ovt/mpcdc.hpp"
#include "ovt/overtaking_mpc.hpp"
#include "ovt/simulator.hpp"

namespace ovt {

enum class OpposingKind { autonomous, semi_autonomous };

/// What the ego assumes about oncoming traffic: a known VL-CBF strategy
/// (autonomous) or a worst-case acceleration/speed envelope (semi-autonomous,
/// human driver).
struct OpposingModelAssumption {
  OpposingKind kind = OpposingKind::autonomous;
  KappaPolynomial kappa_oe = KappaPolynomial::unit();  // known strategy
  double a_max = 1.6;    // worst-case approach acceleration (m/s^2)
  double v_limit = 19.4; // worst-case speed magnitude (m/s)
};

/// The quantities the rule table consumes, taken from the current iteration's
/// two solve results and the worst-case opposing rollouts.
struct DecisionInputs {
  double t1 = 0.0;
  double t2 = 0.0;
  double xo_q1_n = 0.0;  // worst-case opposing at the end of the Q1 plan
  double xe_q1_n = 0.0;  // planned ego at the end of the Q1 plan
  double xo_q2_n = 0.0;  // worst-case opposing at the end of the Q2 plan
  double x_g2 = 0.0;
  bool ego_in_ego_lane = false;
};

enum class Decision { overtake, go_back };

/// Rule table, checked in the fail-safe precedence 5, 3, 2, 1, 4; anything
/// that matches no row resolves to go_back.
Decision decide(const DecisionInputs& in);

/// Worst-case opposing prediction: maximum acceleration toward the ego until
/// the speed limit, rolled out on the given plan time grid (Euler, matching
/// the transcription). Returns N+1 states including the measured one.
std::vector<PointState> worst_case_opposing(const PointState& meas, double a_max, double v_limit,
                                            const std::vector<double>& dts);

struct FrameworkConfig {
  DualGoalsConfig goals;
  HorizonSpec horizon;
  VehicleParams params;  // ego limits
  StateBoxSpec state_box;
  EllipseBarrier front_ellipse;
  double epsilon = 0.3;                                 // enforced level for all barriers
  KappaPolynomial kappa_tail = KappaPolynomial::unit(); // tail shared by the barriers
  LongitudinalBarrier longitudinal;                     // a_l for h_eo/h_oe
  OpposingModelAssumption opposing_assumption;
  nlp::SolverOptions solver;
  double lane_width = 3.5;
  double q2_align_y_tol = 0.2;
  double q2_align_psi_tol = 0.05;

  KappaPolynomial kappa_at_level() const;  // tail with lambda0 = -kappa~(eps)
};

/// Start-of-maneuver gate: both problems pass the phase-1 probe and every
/// detected opposing vehicle satisfies Lambda_eo H_eo >= 0 and
/// Lambda_oe H_oe >= 0.
bool initial_feasibility_check(const Measurement& m, const FrameworkConfig& cfg,
                               std::string* why = nullptr);

/// The dual-MPC controller driving the two do-loops of the framework. One
/// instance per episode; feed it measurements through the simulator hook.
class DualMpcController {
 public:
  explicit DualMpcController(FrameworkConfig cfg);

  ControlCommand step(const Measurement& m, TrajectoryLog& log);
  EpisodePhase phase() const { return phase_; }

 private:
  MpcProblemSpec make_spec(const Measurement& m, WhichProblem which, const DualGoals& goals,
                           bool first_build) const;
  bool q2_retreat_complete(const Measurement& m, const DualGoals& goals) const;

  FrameworkConfig cfg_;
  EpisodePhase phase_ = EpisodePhase::pre_check;
  WarmStart warm_q1_, warm_q2_;
  bool coupled_q1_ = false, coupled_q2_ = false;
  bool first_iteration_ = true;
};

/// The baseline controller: single forward goal, node-wise distance rows, no
/// backup problem. On infeasibility it holds the last slip angle and brakes.
class MpcDcController {
 public:
  MpcDcController(FrameworkConfig cfg, DcConstraintSpec dc);

  ControlCommand step(const Measurement& m, TrajectoryLog& log);

 private:
  FrameworkConfig cfg_;
  DcConstraintSpec dc_;
  WarmStart warm_;
  double last_beta_ = 0.0;
  bool first_iteration_ = true;
};

/// Run a full closed-loop episode under the dual TO-CBF-MPC framework.
TrajectoryLog run_framework(const EpisodeSetup& setup, const FrameworkConfig& cfg);

/// Run a full closed-loop episode under the MPC-DC baseline.
TrajectoryLog run_mpcdc(const EpisodeSetup& setup, const FrameworkConfig& cfg,
                        const DcConstraintSpec& dc);

}  // namespace ovt
