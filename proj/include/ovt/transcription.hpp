#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ovt/nlp_solver.hpp"
#include "ovt/vehicle_models.hpp"
#include "ovt/vlcbf.hpp"

namespace ovt {

struct HorizonSpec {
  int n = 50;           // prediction steps
  double t_max = 0.2;   // per-step upper bound (s)
  double dt_min = 1e-4; // per-step lower bound (s)
};

struct GoalSpec {
  double x_g = 0.0;
  double y_g = 0.0;
  double eps_y = 0.3;  // lateral band half-width
};

/// Scheduled longitudinal motion of a non-controlled vehicle: constant
/// acceleration until the speed reaches sign(accel) * v_cap, then constant.
struct MotionProfile {
  double x0 = 0.0;
  double v0 = 0.0;
  double accel = 0.0;
  double v_cap = 1e30;  // magnitude cap on the accelerated speed

  static MotionProfile constant(double x, double v) { return MotionProfile{x, v, 0.0, 1e30}; }

  double saturation_time() const;
  double x_at(double t) const;
  double v_at(double t) const;
  double a_at(double t) const;
};

/// One VL-CBF constraint family: a barrier shape guarding against one
/// scheduled vehicle, enforced through the rate polynomial at every step.
struct BarrierInstance {
  enum class Shape { ellipse, longitudinal };
  Shape shape = Shape::ellipse;
  EllipseBarrier ellipse;
  LongitudinalBarrier longitudinal;
  KappaPolynomial kappa = KappaPolynomial::unit();
  MotionProfile other;   // guarded vehicle's schedule
  double lane_y = 0.0;   // lateral centerline of the guarded vehicle

  static BarrierInstance ellipse_front(const EllipseBarrier& e, const KappaPolynomial& k,
                                       const MotionProfile& front, double lane_y);
  static BarrierInstance longitudinal_opposing(const LongitudinalBarrier& b,
                                               const KappaPolynomial& k,
                                               const MotionProfile& opposing);
};

/// Joint prediction of an autonomous opposing vehicle: its trajectory and
/// inputs become decision variables constrained by its own dynamics and by
/// the paired VL-CBF rows (one bounding the ego, one bounding the most
/// radical admissible opposing input).
struct OpposingCoupling {
  PointState initial;
  LongitudinalBarrier barrier;
  KappaPolynomial kappa_eo = KappaPolynomial::unit();
  KappaPolynomial kappa_oe = KappaPolynomial::unit();
  double input_limit = 8.0;  // |u_o| bound (a_l)
};

/// Ego state-constraint box applied at every node.
struct StateBoxSpec {
  double y_min = -0.83;
  double y_max = 4.33;
  double psi_min = -1.0;
  double psi_max = 1.0;
};

struct BuildOptions {
  bool check_initial_levels = true;
  StateBoxSpec state_box;
};

struct ProblemCounts {
  int defect_blocks = 0;
  int input_boxes = 0;
  int state_boxes = 0;
  int dt_bounds = 0;
  int terminal_rows = 0;
  int cbf_rows = 0;
  int opp_defect_blocks = 0;
  int opp_input_boxes = 0;
  int coupled_cbf_rows = 0;
};

/// Decision-vector layout. Node 0 is the measured state and is not a
/// decision variable; state nodes run 1..N, input/step nodes 0..N-1.
struct Layout {
  int n_nodes = 0;
  bool coupled = false;
  int num_vars = 0;
  int off_x = 0, off_u = 0, off_dt = 0, off_xo = -1, off_uo = -1;

  int x(int i, int c) const { return i == 0 ? -1 : off_x + (i - 1) * 4 + c; }
  int u(int i, int c) const { return off_u + i * 2 + c; }
  int dt(int i) const { return off_dt + i; }
  int xo(int i, int c) const { return i == 0 ? -1 : off_xo + (i - 1) * 2 + c; }
  int uo(int i) const { return off_uo + i; }
};

struct InitialInfeasibility : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class TranscriptionProblem;

namespace detail {
/// Safety-row flavor: VL-CBF residual rows at steps 0..N-1, or the baseline's
/// node-wise h >= 0 rows at nodes 1..N.
enum class SafetyRowMode { vlcbf, distance };

TranscriptionProblem build_generic(const EgoState& ego0, const MotionProfile& front,
                                   const GoalSpec& goal, const HorizonSpec& horizon,
                                   const VehicleParams& params,
                                   const std::vector<BarrierInstance>& barriers,
                                   const std::optional<OpposingCoupling>& opposing,
                                   const BuildOptions& opts, SafetyRowMode mode);
}  // namespace detail

/// The assembled free-time-step NLP. Immutable after build.
class TranscriptionProblem {
 public:
  const nlp::NlpProblem& nlp() const { return nlp_; }
  const Layout& layout() const { return layout_; }
  const ProblemCounts& counts() const { return counts_; }
  const HorizonSpec& horizon() const { return horizon_; }
  const GoalSpec& goal() const { return goal_; }
  const EgoState& ego0() const { return ego0_; }
  const VehicleParams& params() const { return params_; }
  const std::vector<BarrierInstance>& barriers() const { return barriers_; }
  const std::optional<OpposingCoupling>& opposing() const { return opposing_; }

  /// Canonical cold start: constant-velocity straight-line rollout.
  Eigen::VectorXd initial_guess() const;

  /// Versioned text dump of layout, bounds and rows (debugging aid).
  void dump(std::ostream& os) const;

  struct Decoded {
    std::vector<EgoState> ego;        // 0..N
    std::vector<EgoInput> inputs;     // 0..N-1
    std::vector<double> dts;          // 0..N-1
    std::vector<PointState> opposing; // 0..N when coupled
    std::vector<PointInput> opposing_inputs;
  };
  Decoded decode(const Eigen::VectorXd& z) const;

 private:
  friend TranscriptionProblem detail::build_generic(const EgoState&, const MotionProfile&,
                                                    const GoalSpec&, const HorizonSpec&,
                                                    const VehicleParams&,
                                                    const std::vector<BarrierInstance>&,
                                                    const std::optional<OpposingCoupling>&,
                                                    const BuildOptions&, detail::SafetyRowMode);

  nlp::NlpProblem nlp_;
  Layout layout_;
  ProblemCounts counts_;
  HorizonSpec horizon_;
  GoalSpec goal_;
  EgoState ego0_;
  VehicleParams params_;
  MotionProfile front_;
  std::vector<BarrierInstance> barriers_;
  std::optional<OpposingCoupling> opposing_;
};

struct SolveReport {
  nlp::SolveStatus status = nlp::SolveStatus::iteration_limit;
  double objective = 0.0;  // total planned time T (s) when solved
  TranscriptionProblem::Decoded trajectory;
  double max_violation = 0.0;
  double stationarity = 0.0;
  int iterations = 0;
  double wall_ms = 0.0;
  Eigen::VectorXd z;
  Eigen::VectorXd multipliers;

  bool solved() const { return status == nlp::SolveStatus::solved; }
  /// Numeric identity ignoring wall time (determinism checks).
  bool same_numerics(const SolveReport& o) const;
};

struct WarmStart {
  Eigen::VectorXd z;
  Eigen::VectorXd multipliers;
};

/// Assemble the time-optimal CBF-constrained problem. Throws
/// InitialInfeasibility when the measured initial state violates a barrier
/// level and the build options demand the start-of-maneuver check.
TranscriptionProblem build_problem(const EgoState& ego0, const MotionProfile& front,
                                   const GoalSpec& goal, const HorizonSpec& horizon,
                                   const VehicleParams& params,
                                   const std::vector<BarrierInstance>& barriers,
                                   const std::optional<OpposingCoupling>& opposing = std::nullopt,
                                   const BuildOptions& opts = BuildOptions{});

SolveReport solve(const TranscriptionProblem& p, const WarmStart* warm = nullptr,
                  const nlp::SolverOptions& sopts = nlp::SolverOptions{});

/// Cheap phase-1 feasibility check (minimize total violation).
bool feasibility_probe(const TranscriptionProblem& p,
                       const nlp::SolverOptions& sopts = nlp::SolverOptions{});

}  // namespace ovt
