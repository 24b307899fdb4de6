#pragma once

#include <optional>

#include "ovt/transcription.hpp"

namespace ovt {

enum class WhichProblem { q1, q2 };

struct DualGoalsConfig {
  double phi = 1.8;       // front-vehicle reaction time (s)
  double c = 25.0;        // fixed longitudinal gap between the two goals (m)
  double half_gap = 0.0;  // extra offset ahead of x_f + phi v_f (m)
  double eps_y = 0.3;
  double lane_center_y = 0.0;  // ego-lane centerline (both goals' y)
};

/// The two receding goals: p1 ahead of the front vehicle (overtake), p2
/// behind it (retreat). Re-placed from the measured front state every
/// iteration; x_g1 - x_g2 = c always.
struct DualGoals {
  GoalSpec p1;
  GoalSpec p2;
  double phi = 1.8;
  double c = 25.0;

  const GoalSpec& of(WhichProblem w) const { return w == WhichProblem::q1 ? p1 : p2; }
};

DualGoals place_goals(const PointState& front, const DualGoalsConfig& cfg);

/// Exact convergence predicate of the receding-horizon loop, evaluated on the
/// measured state: x_e >= x_g and y_e within the closed lateral band.
bool check_convergence(const EgoState& ego, const GoalSpec& goal);

/// Everything one TO-CBF-MPC solve needs.
struct MpcProblemSpec {
  EgoState ego;             // measured
  MotionProfile front;      // constant-velocity prediction from the measurement
  double front_lane_y = 0.0;
  GoalSpec goal;
  HorizonSpec horizon;
  VehicleParams params;
  EllipseBarrier front_ellipse;
  KappaPolynomial kappa_front = KappaPolynomial::unit();
  std::optional<OpposingCoupling> opposing;            // autonomous coupling
  std::optional<BarrierInstance> worst_case_barrier;   // semi-autonomous envelope
  BuildOptions build;
  nlp::SolverOptions solver;
  bool skip_convergence_check = false;
};

struct MpcIterationResult {
  WhichProblem which = WhichProblem::q1;
  SolveReport report;
  double estimated_time = 0.0;  // T = objective when solved
  EgoInput first_input;
  double first_dt = 0.0;
  bool converged = false;  // goal predicate already held; nothing was solved
  Layout layout;           // of the built problem (for warm-start shifting)
  ProblemCounts counts;
};

/// Shift a previous solution by one step (last entries repeated) as the warm
/// start for the next receding-horizon solve.
WarmStart shifted_warm_start(const Layout& layout, const ProblemCounts& counts,
                             const SolveReport& previous);

/// Build and solve one receding-horizon problem. Checks convergence first; a
/// converged measurement short-circuits the solve. Controls are never taken
/// from an unsolved problem (callers must check report status).
MpcIterationResult iterate(WhichProblem which, const MpcProblemSpec& spec,
                           const WarmStart* warm = nullptr);

}  // namespace ovt
