#include "ovt/decision_framework.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ovt {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

Decision decide(const DecisionInputs& in) {
  const bool t1_gt_t2 = in.t1 > in.t2;
  const bool xo_gt_xe = in.xo_q1_n > in.xe_q1_n;
  const bool q2_clear = in.xo_q2_n > in.x_g2;
  const bool in_lane = in.ego_in_ego_lane;

  // Safety-negative rows first (5, 3), then the positive rows (2, 1, 4);
  // anything unmatched resolves to go_back.
  if (!xo_gt_xe) return Decision::go_back;                          // row 5
  if (!t1_gt_t2 && !in_lane) return Decision::go_back;              // row 3
  if (!t1_gt_t2 && in_lane) return Decision::overtake;              // row 2
  if (t1_gt_t2) return Decision::overtake;                          // row 1
  if (q2_clear) return Decision::overtake;                          // row 4
  return Decision::go_back;
}

std::vector<PointState> worst_case_opposing(const PointState& meas, double a_max, double v_limit,
                                            const std::vector<double>& dts) {
  std::vector<PointState> out;
  out.reserve(dts.size() + 1);
  PointState s = meas;
  out.push_back(s);
  for (double dt : dts) {
    const double x_next = s.x + dt * s.v;
    double v_next = s.v - a_max * dt;
    if (v_next < -v_limit) v_next = -v_limit;
    s = PointState{x_next, v_next};
    out.push_back(s);
  }
  return out;
}

KappaPolynomial FrameworkConfig::kappa_at_level() const {
  KappaPolynomial k = kappa_tail;
  k.lambda[0] = lambda0_for_level(kappa_tail, LevelSpec{epsilon});
  return k;
}

namespace {

MotionProfile worst_case_profile(const ObjectMeasurement& opp, double a_max, double v_limit) {
  return MotionProfile{opp.x, opp.v, -a_max, v_limit};
}

std::optional<OpposingCoupling> make_coupling(const Measurement& m, const FrameworkConfig& cfg) {
  if (!m.opposing_detected || cfg.opposing_assumption.kind != OpposingKind::autonomous)
    return std::nullopt;
  OpposingCoupling oc;
  oc.initial = PointState{m.opposing.x, m.opposing.v};
  oc.barrier = cfg.longitudinal;
  oc.kappa_eo = cfg.kappa_at_level();
  oc.kappa_oe = cfg.opposing_assumption.kappa_oe;
  oc.input_limit = cfg.longitudinal.a_l;
  return oc;
}

std::optional<BarrierInstance> make_worst_case_barrier(const Measurement& m,
                                                       const FrameworkConfig& cfg) {
  if (!m.opposing_detected || cfg.opposing_assumption.kind != OpposingKind::semi_autonomous)
    return std::nullopt;
  const MotionProfile prof = worst_case_profile(m.opposing, cfg.opposing_assumption.a_max,
                                                cfg.opposing_assumption.v_limit);
  return BarrierInstance::longitudinal_opposing(cfg.longitudinal, cfg.kappa_at_level(), prof);
}

/// iterate() with build-time initial-infeasibility mapped onto an unsolved
/// report instead of an exception escaping the control loop.
MpcIterationResult safe_iterate(WhichProblem which, const MpcProblemSpec& spec,
                                const WarmStart* warm) {
  try {
    return iterate(which, spec, warm);
  } catch (const InitialInfeasibility&) {
    MpcIterationResult out;
    out.which = which;
    out.report.status = nlp::SolveStatus::infeasible;
    return out;
  }
}

}  // namespace

bool initial_feasibility_check(const Measurement& m, const FrameworkConfig& cfg,
                               std::string* why) {
  // Condition (b): every detected opposing vehicle satisfies the initial
  // safety condition on both rate polynomials.
  if (m.opposing_detected) {
    const double ve = m.ego.v * std::cos(m.ego.psi);
    const double dv = ve - m.opposing.v;
    const double h = m.opposing.x - m.ego.x - dv * dv / (2.0 * cfg.longitudinal.a_l);
    if (kappa_eval(cfg.kappa_at_level(), h) < 0.0 ||
        kappa_eval(cfg.opposing_assumption.kappa_oe, h) < 0.0) {
      if (why) *why = "opposing initial safety condition violated";
      return false;
    }
  }

  // Condition (a): phase-1 probes of both problems.
  const DualGoals goals = place_goals(PointState{m.front.x, m.front.v}, cfg.goals);
  for (WhichProblem which : {WhichProblem::q1, WhichProblem::q2}) {
    std::vector<BarrierInstance> barriers;
    barriers.push_back(BarrierInstance::ellipse_front(
        cfg.front_ellipse, cfg.kappa_at_level(),
        MotionProfile::constant(m.front.x, m.front.v), m.front.y));
    if (auto wc = make_worst_case_barrier(m, cfg)) barriers.push_back(*wc);
    BuildOptions build;
    build.check_initial_levels = true;
    build.state_box = cfg.state_box;
    try {
      const TranscriptionProblem p =
          build_problem(m.ego, MotionProfile::constant(m.front.x, m.front.v), goals.of(which),
                        cfg.horizon, cfg.params, barriers, make_coupling(m, cfg), build);
      if (!feasibility_probe(p, cfg.solver)) {
        if (why) *why = which == WhichProblem::q1 ? "Q1 probe failed" : "Q2 probe failed";
        return false;
      }
    } catch (const InitialInfeasibility&) {
      if (why) *why = "initial barrier level violated";
      return false;
    }
  }
  return true;
}

DualMpcController::DualMpcController(FrameworkConfig cfg) : cfg_(std::move(cfg)) {}

MpcProblemSpec DualMpcController::make_spec(const Measurement& m, WhichProblem which,
                                            const DualGoals& goals, bool first_build) const {
  MpcProblemSpec s;
  s.ego = m.ego;
  s.front = MotionProfile::constant(m.front.x, m.front.v);
  s.front_lane_y = m.front.y;
  s.goal = goals.of(which);
  s.horizon = cfg_.horizon;
  s.params = cfg_.params;
  s.front_ellipse = cfg_.front_ellipse;
  s.kappa_front = cfg_.kappa_at_level();
  s.opposing = make_coupling(m, cfg_);
  s.worst_case_barrier = make_worst_case_barrier(m, cfg_);
  s.build.check_initial_levels = first_build;
  s.build.state_box = cfg_.state_box;
  s.solver = cfg_.solver;
  return s;
}

bool DualMpcController::q2_retreat_complete(const Measurement& m, const DualGoals& goals) const {
  const bool lane_aligned =
      std::abs(m.ego.y - cfg_.goals.lane_center_y) <= cfg_.q2_align_y_tol &&
      std::abs(m.ego.psi) < cfg_.q2_align_psi_tol;
  if (!lane_aligned) return false;
  if (check_convergence(m.ego, goals.p2)) return true;
  // A front vehicle that has outrun the ego's speed limit drags the retreat
  // goal away faster than the ego can close; the retreat counts as complete
  // once the ego sits lane-aligned behind the inflated safety ellipse.
  if (m.front.v <= 0.98 * cfg_.params.v_max) return false;
  const EllipseBarrier& e = cfg_.front_ellipse;
  const double dx = m.ego.x - m.front.x;
  const double dy = m.ego.y - m.front.y;
  const double h = e.beta1 * dx * dx + e.beta2 * dy * dy - e.beta3;
  return m.ego.x < m.front.x && h >= cfg_.epsilon;
}

ControlCommand DualMpcController::step(const Measurement& m, TrajectoryLog& log) {
  ControlCommand cmd;

  if (phase_ == EpisodePhase::pre_check) {
    std::string why;
    if (!initial_feasibility_check(m, cfg_, &why)) {
      phase_ = EpisodePhase::declined;
      cmd.finished = true;
      cmd.phase = phase_;
      cmd.note = "declined: " + why;
      return cmd;
    }
    phase_ = EpisodePhase::overtaking;
  }

  const DualGoals goals = place_goals(PointState{m.front.x, m.front.v}, cfg_.goals);
  const bool semi = cfg_.opposing_assumption.kind == OpposingKind::semi_autonomous;

  if (phase_ == EpisodePhase::overtaking) {
    MpcIterationResult q1 = safe_iterate(
        WhichProblem::q1, make_spec(m, WhichProblem::q1, goals, first_iteration_),
        (warm_q1_.z.size() && coupled_q1_ == m.opposing_detected) ? &warm_q1_ : nullptr);
    first_iteration_ = false;
    if (q1.converged) {
      phase_ = EpisodePhase::done_forward;
      cmd.finished = true;
      cmd.phase = phase_;
      cmd.note = "q1 converged";
      return cmd;
    }

    SolveRecord rec;
    rec.t = m.t;
    rec.phase = static_cast<int>(phase_);
    rec.q1_attempted = true;
    rec.q1_solved = q1.report.solved();
    rec.t1 = rec.q1_solved ? q1.estimated_time : kNan;
    if (rec.q1_solved) warm_q1_ = shifted_warm_start(q1.layout, q1.counts, q1.report);
    coupled_q1_ = m.opposing_detected;

    const bool need_q2 = m.opposing_detected || !rec.q1_solved;
    MpcIterationResult q2;
    if (need_q2) {
      MpcProblemSpec spec2 = make_spec(m, WhichProblem::q2, goals, false);
      spec2.skip_convergence_check = true;  // T2 is wanted even past the p2 mark
      q2 = safe_iterate(WhichProblem::q2, spec2,
                        (warm_q2_.z.size() && coupled_q2_ == m.opposing_detected) ? &warm_q2_
                                                                                  : nullptr);
      rec.q2_attempted = true;
      rec.q2_solved = q2.report.solved();
      rec.t2 = rec.q2_solved ? q2.estimated_time : kNan;
      if (rec.q2_solved) warm_q2_ = shifted_warm_start(q2.layout, q2.counts, q2.report);
      coupled_q2_ = m.opposing_detected;
    }

    bool overtaking = true;
    if (!rec.q1_solved) {
      overtaking = false;
      rec.event = "abort: q1 " + nlp::to_string(q1.report.status);
    } else if (m.opposing_detected && semi && rec.q2_solved) {
      DecisionInputs din;
      din.t1 = q1.estimated_time;
      din.t2 = q2.estimated_time;
      const auto wc1 =
          worst_case_opposing(PointState{m.opposing.x, m.opposing.v},
                              cfg_.opposing_assumption.a_max, cfg_.opposing_assumption.v_limit,
                              q1.report.trajectory.dts);
      const auto wc2 =
          worst_case_opposing(PointState{m.opposing.x, m.opposing.v},
                              cfg_.opposing_assumption.a_max, cfg_.opposing_assumption.v_limit,
                              q2.report.trajectory.dts);
      din.xo_q1_n = wc1.back().x;
      din.xe_q1_n = q1.report.trajectory.ego.back().x;
      din.xo_q2_n = wc2.back().x;
      din.x_g2 = goals.p2.x_g;
      din.ego_in_ego_lane =
          std::abs(m.ego.y - cfg_.goals.lane_center_y) <= 0.5 * cfg_.lane_width;
      const Decision d = decide(din);
      rec.event = d == Decision::overtake ? "decision: overtake" : "decision: go-back";
      if (d == Decision::go_back) overtaking = false;
    }

    if (overtaking) {
      cmd.u = q1.first_input;
      cmd.hold_s = q1.first_dt;
      cmd.phase = phase_;
      log.solves.push_back(rec);
      return cmd;
    }

    phase_ = EpisodePhase::aborting;
    if (rec.q2_solved) {
      cmd.u = q2.first_input;
      cmd.hold_s = q2.first_dt;
    } else if (rec.q2_attempted && !rec.q1_solved) {
      // Theorem 5 says this cannot happen under its hypotheses; fail loudly.
      cmd.fault = true;
      cmd.phase = EpisodePhase::fault;
      cmd.note = "fault: both Q1 and Q2 infeasible";
      rec.event = "fault: both-infeasible";
      log.solves.push_back(rec);
      return cmd;
    } else {
      cmd.u = EgoInput{-cfg_.params.a_l, 0.0};
      cmd.hold_s = 0.05;
      cmd.note = "go-back with q2 unsolved: braking";
    }
    cmd.phase = phase_;
    log.solves.push_back(rec);
    return cmd;
  }

  // Aborting: iterate Q2 until the retreat is complete (one-way; no Q1
  // control is ever applied from here on).
  if (q2_retreat_complete(m, goals)) {
    phase_ = EpisodePhase::done_back;
    cmd.finished = true;
    cmd.phase = phase_;
    cmd.note = "q2 converged";
    return cmd;
  }

  SolveRecord rec;
  rec.t = m.t;
  rec.phase = static_cast<int>(phase_);
  MpcProblemSpec spec2 = make_spec(m, WhichProblem::q2, goals, false);
  spec2.skip_convergence_check = true;  // alignment extras may still be pending
  MpcIterationResult q2 = safe_iterate(
      WhichProblem::q2, spec2,
      (warm_q2_.z.size() && coupled_q2_ == m.opposing_detected) ? &warm_q2_ : nullptr);
  rec.q2_attempted = true;
  rec.q2_solved = q2.report.solved();
  rec.t2 = rec.q2_solved ? q2.estimated_time : kNan;
  coupled_q2_ = m.opposing_detected;

  if (rec.q2_solved) {
    warm_q2_ = shifted_warm_start(q2.layout, q2.counts, q2.report);
    cmd.u = q2.first_input;
    cmd.hold_s = q2.first_dt;
    cmd.phase = phase_;
    log.solves.push_back(rec);
    return cmd;
  }

  // Q2 infeasible inside the abort loop: consult Q1 for the record; both
  // failing is the distinguished fault.
  MpcProblemSpec spec1 = make_spec(m, WhichProblem::q1, goals, false);
  spec1.skip_convergence_check = true;
  MpcIterationResult q1 = safe_iterate(WhichProblem::q1, spec1, nullptr);
  rec.q1_attempted = true;
  rec.q1_solved = q1.report.solved();
  rec.t1 = rec.q1_solved ? q1.estimated_time : kNan;
  if (!rec.q1_solved) {
    cmd.fault = true;
    cmd.phase = EpisodePhase::fault;
    cmd.note = "fault: both Q1 and Q2 infeasible";
    rec.event = "fault: both-infeasible";
    log.solves.push_back(rec);
    return cmd;
  }
  rec.event = "q2 infeasible, q1 feasible: braking fallback";
  cmd.u = EgoInput{-cfg_.params.a_l, 0.0};
  cmd.hold_s = 0.05;
  cmd.phase = phase_;
  log.solves.push_back(rec);
  return cmd;
}

MpcDcController::MpcDcController(FrameworkConfig cfg, DcConstraintSpec dc)
    : cfg_(std::move(cfg)), dc_(dc) {}

ControlCommand MpcDcController::step(const Measurement& m, TrajectoryLog& log) {
  ControlCommand cmd;
  cmd.phase = EpisodePhase::overtaking;
  const DualGoals goals = place_goals(PointState{m.front.x, m.front.v}, cfg_.goals);

  if (check_convergence(m.ego, goals.p1)) {
    cmd.finished = true;
    cmd.phase = EpisodePhase::done_forward;
    cmd.note = "goal reached";
    return cmd;
  }

  SolveRecord rec;
  rec.t = m.t;
  rec.phase = static_cast<int>(EpisodePhase::overtaking);
  rec.q1_attempted = true;

  const DcObstacle front{MotionProfile::constant(m.front.x, m.front.v), m.front.y};
  std::optional<DcObstacle> opp;
  if (m.opposing_detected)
    opp = DcObstacle{MotionProfile::constant(m.opposing.x, m.opposing.v), m.opposing.y};

  BuildOptions build;
  build.check_initial_levels = false;  // the baseline has no level semantics
  build.state_box = cfg_.state_box;
  SolveReport rep;
  bool built = false;
  try {
    const TranscriptionProblem p = build_mpcdc(m.ego, front, goals.p1, cfg_.horizon, cfg_.params,
                                               dc_, opp, build);
    rep = solve(p, warm_.z.size() ? &warm_ : nullptr, cfg_.solver);
    built = true;
    if (rep.solved()) warm_ = shifted_warm_start(p.layout(), p.counts(), rep);
  } catch (const std::exception& e) {
    rec.event = std::string("dc build failed: ") + e.what();
  }

  rec.q1_solved = built && rep.solved();
  rec.t1 = rec.q1_solved ? rep.objective : kNan;
  log.solves.push_back(rec);

  if (rec.q1_solved) {
    last_beta_ = rep.trajectory.inputs[0].beta;
    cmd.u = rep.trajectory.inputs[0];
    cmd.hold_s = rep.trajectory.dts[0];
    return cmd;
  }
  // No backup strategy: hold the last slip angle and brake hard.
  cmd.u = EgoInput{-cfg_.params.a_l, last_beta_};
  cmd.hold_s = 0.05;
  cmd.note = "dc infeasible: brake";
  return cmd;
}

TrajectoryLog run_framework(const EpisodeSetup& setup, const FrameworkConfig& cfg) {
  auto ctrl = std::make_shared<DualMpcController>(cfg);
  return run_episode(setup, [ctrl](const Measurement& m, TrajectoryLog& log) {
    return ctrl->step(m, log);
  });
}

TrajectoryLog run_mpcdc(const EpisodeSetup& setup, const FrameworkConfig& cfg,
                        const DcConstraintSpec& dc) {
  auto ctrl = std::make_shared<MpcDcController>(cfg, dc);
  return run_episode(setup, [ctrl](const Measurement& m, TrajectoryLog& log) {
    return ctrl->step(m, log);
  });
}

}  // namespace ovt
