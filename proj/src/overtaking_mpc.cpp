#include "ovt/overtaking_mpc.hpp"

#include <algorithm>
#include <cmath>

namespace ovt {

DualGoals place_goals(const PointState& front, const DualGoalsConfig& cfg) {
  DualGoals g;
  g.phi = cfg.phi;
  g.c = cfg.c;
  const double x1 = front.x + cfg.phi * front.v + cfg.half_gap;
  g.p1 = GoalSpec{x1, cfg.lane_center_y, cfg.eps_y};
  g.p2 = GoalSpec{x1 - cfg.c, cfg.lane_center_y, cfg.eps_y};
  return g;
}

bool check_convergence(const EgoState& ego, const GoalSpec& goal) {
  return ego.x >= goal.x_g && std::abs(ego.y - goal.y_g) <= goal.eps_y;
}

WarmStart shifted_warm_start(const Layout& L, const ProblemCounts& counts,
                             const SolveReport& previous) {
  WarmStart w;
  const int N = L.n_nodes;
  if (previous.z.size() != L.num_vars) return w;  // structure changed: cold start

  Eigen::VectorXd z = previous.z;
  for (int i = 1; i <= N - 1; ++i)
    for (int c = 0; c < 4; ++c) z[L.x(i, c)] = previous.z[L.x(i + 1, c)];
  for (int i = 0; i < N - 1; ++i) {
    for (int c = 0; c < 2; ++c) z[L.u(i, c)] = previous.z[L.u(i + 1, c)];
    z[L.dt(i)] = previous.z[L.dt(i + 1)];
  }
  if (L.coupled) {
    for (int i = 1; i <= N - 1; ++i)
      for (int c = 0; c < 2; ++c) z[L.xo(i, c)] = previous.z[L.xo(i + 1, c)];
    for (int i = 0; i < N - 1; ++i) z[L.uo(i)] = previous.z[L.uo(i + 1)];
  }
  w.z = std::move(z);

  // Shift the multipliers block-wise along the row layout convention: ego
  // defects, per-barrier rows, terminal, opposing defects, coupled pairs.
  const int total_rows = 4 * counts.defect_blocks + counts.cbf_rows + counts.terminal_rows +
                         2 * counts.opp_defect_blocks + counts.coupled_cbf_rows;
  if (previous.multipliers.size() == total_rows) {
    Eigen::VectorXd mult = previous.multipliers;
    int off = 0;
    auto shift_blocks = [&](int blocks, int rows_per_block) {
      for (int i = 0; i + 1 < blocks; ++i)
        for (int r = 0; r < rows_per_block; ++r)
          mult[off + i * rows_per_block + r] =
              previous.multipliers[off + (i + 1) * rows_per_block + r];
      off += blocks * rows_per_block;
    };
    shift_blocks(counts.defect_blocks, 4);
    const int families = counts.cbf_rows / std::max(1, N);
    for (int b = 0; b < families; ++b) shift_blocks(N, 1);
    off += counts.terminal_rows;
    if (L.coupled) {
      shift_blocks(counts.opp_defect_blocks, 2);
      shift_blocks(counts.coupled_cbf_rows / 2, 2);
    }
    w.multipliers = std::move(mult);
  }
  return w;
}

MpcIterationResult iterate(WhichProblem which, const MpcProblemSpec& spec, const WarmStart* warm) {
  MpcIterationResult out;
  out.which = which;

  if (!spec.skip_convergence_check && check_convergence(spec.ego, spec.goal)) {
    out.converged = true;
    return out;
  }

  std::vector<BarrierInstance> barriers;
  barriers.push_back(BarrierInstance::ellipse_front(spec.front_ellipse, spec.kappa_front,
                                                    spec.front, spec.front_lane_y));
  if (spec.worst_case_barrier) barriers.push_back(*spec.worst_case_barrier);

  const TranscriptionProblem p = build_problem(spec.ego, spec.front, spec.goal, spec.horizon,
                                               spec.params, barriers, spec.opposing, spec.build);
  out.layout = p.layout();
  out.counts = p.counts();
  out.report = solve(p, warm, spec.solver);
  if (out.report.solved()) {
    out.estimated_time = out.report.objective;
    out.first_input = out.report.trajectory.inputs[0];
    out.first_dt = out.report.trajectory.dts[0];
  }
  return out;
}

}  // namespace ovt
