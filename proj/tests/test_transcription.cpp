#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ovt/rng.hpp"
#include "ovt/transcription.hpp"

using namespace ovt;

namespace {

const VehicleParams kParams{};

TranscriptionProblem q1_like_problem(double goal_offset = 0.3 * 6.94, double t_max = 0.2,
                                     double ellipse_a = 6.0) {
  EgoState ego{10, 0, 0, 10};
  MotionProfile front = MotionProfile::constant(64, 6.94);
  KappaPolynomial kap{{-0.3, 1.0}};
  EllipseBarrier ell = EllipseBarrier::from_axes(ellipse_a, 3.0);
  GoalSpec goal{64 + goal_offset, 0.0, 0.3};
  HorizonSpec hz{50, t_max, 1e-4};
  std::vector<BarrierInstance> barriers{BarrierInstance::ellipse_front(ell, kap, front, 0.0)};
  return build_problem(ego, front, goal, hz, kParams, barriers);
}

nlp::SolverOptions desk_options() {
  nlp::SolverOptions so;
  so.rho0 = 100.0;
  so.iter_limit = 4000;
  return so;
}

TranscriptionProblem coupled_problem() {
  EgoState ego{10, 0.5, 0.05, 10};
  MotionProfile front = MotionProfile::constant(55, 7.0);
  KappaPolynomial kap{{-0.3, 1.0}};
  EllipseBarrier ell = EllipseBarrier::from_axes(6.0, 3.0);
  GoalSpec goal{80, 0.0, 0.3};
  HorizonSpec hz{50, 0.2, 1e-4};
  std::vector<BarrierInstance> barriers{
      BarrierInstance::ellipse_front(ell, kap, front, 0.0),
      BarrierInstance::longitudinal_opposing(LongitudinalBarrier{8.0}, kap,
                                             MotionProfile{260, -10, -1.0, 19.4})};
  OpposingCoupling oc;
  oc.initial = PointState{250, -11};
  oc.barrier = LongitudinalBarrier{8.0};
  oc.kappa_eo = kap;
  oc.kappa_oe = kap;
  return build_problem(ego, front, goal, hz, kParams, barriers, oc);
}

}  // namespace

TEST_CASE("counting contract: ego-only problem") {
  const TranscriptionProblem p = q1_like_problem();
  const ProblemCounts& c = p.counts();
  CHECK(c.defect_blocks == 50);
  CHECK(c.input_boxes == 50);
  CHECK(c.state_boxes == 50);
  CHECK(c.dt_bounds == 50);
  CHECK(c.terminal_rows == 2);
  CHECK(c.cbf_rows == 50);
  CHECK(c.opp_defect_blocks == 0);
  CHECK(c.coupled_cbf_rows == 0);
  CHECK(p.nlp().rows.size() == 4 * 50 + 50 + 2);
  CHECK(p.nlp().n == 7 * 50);
}

TEST_CASE("counting contract: coupled problem adds opposing blocks") {
  const TranscriptionProblem p = coupled_problem();
  const ProblemCounts& c = p.counts();
  CHECK(c.defect_blocks == 50);
  CHECK(c.cbf_rows == 100);  // ellipse + worst-case longitudinal
  CHECK(c.terminal_rows == 2);
  CHECK(c.opp_defect_blocks == 50);
  CHECK(c.opp_input_boxes == 50);
  CHECK(c.coupled_cbf_rows == 100);
  CHECK(p.nlp().rows.size() == 200 + 100 + 2 + 100 + 100);
  CHECK(p.nlp().n == 10 * 50);
}

TEST_CASE("sparsity follows the per-step coupling") {
  const TranscriptionProblem p = q1_like_problem();
  const Layout& L = p.layout();
  const int N = L.n_nodes;
  auto node_of = [&](int var) {
    if (var >= L.off_dt) return var - L.off_dt;      // dt_i
    if (var >= L.off_u) return (var - L.off_u) / 2;  // u_i
    return (var - L.off_x) / 4 + 1;                  // x_i, i in 1..N
  };
  int defect_idx = 0;
  for (const auto& row : p.nlp().rows) {
    if (row.tag == nlp::RowTag::defect_ego) {
      const int i = defect_idx / 4;
      for (int v : row.support) {
        const int nd = node_of(v);
        CHECK(nd >= i);
        CHECK(nd <= i + 1);
      }
      ++defect_idx;
    } else if (row.tag == nlp::RowTag::cbf) {
      // Node variables at one step plus the strictly-earlier time prefix.
      int max_state_node = 0;
      for (int v : row.support)
        if (v < L.off_dt) max_state_node = std::max(max_state_node, node_of(v));
      for (int v : row.support)
        if (v >= L.off_dt) CHECK(node_of(v) < std::max(1, max_state_node));
    }
  }
  CHECK(defect_idx == 4 * N);
}

TEST_CASE("analytic jacobians match finite differences at random points") {
  const TranscriptionProblem p = coupled_problem();
  Rng rng(42);
  Eigen::VectorXd z = p.initial_guess();
  std::vector<double> g(96);
  double worst = 0.0;
  for (int pt = 0; pt < 50; ++pt) {
    Eigen::VectorXd zr = z;
    for (int i = 0; i < zr.size(); ++i)
      zr[i] += rng.uniform(-0.02, 0.02) * std::max(1.0, std::abs(zr[i]));
    for (int i = 0; i < p.horizon().n; ++i)
      zr[p.layout().dt(i)] = std::max(0.01, zr[p.layout().dt(i)]);

    // One random row per point keeps the test fast while covering all kinds.
    const auto& rows = p.nlp().rows;
    const auto& row = rows[rng.next_u64() % rows.size()];
    row.eval(zr.data(), g.data());
    for (std::size_t j = 0; j < row.support.size(); ++j) {
      const int vi = row.support[j];
      const double h = 1e-6 * std::max(1.0, std::abs(zr[vi]));
      Eigen::VectorXd a = zr, b = zr;
      a[vi] += h;
      b[vi] -= h;
      const double fd = (row.eval(a.data(), nullptr) - row.eval(b.data(), nullptr)) / (2 * h);
      const double err = std::abs(fd - g[j]) / std::max(1.0, std::abs(fd));
      worst = std::max(worst, err);
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("degenerate two-step problem solves to the closed form") {
  // Goal already behind the ego with the lateral band satisfied: every
  // constraint holds with both steps at the lower bound, so J* = 2 dt_min.
  EgoState ego{50, 0, 0, 5};
  MotionProfile front = MotionProfile::constant(500, 5);  // far away
  GoalSpec goal{45, 0.0, 0.3};
  HorizonSpec hz{2, 0.2, 1e-4};
  KappaPolynomial kap{{-0.3, 1.0}};
  std::vector<BarrierInstance> barriers{
      BarrierInstance::ellipse_front(EllipseBarrier::from_axes(6, 3), kap, front, 0.0)};
  const TranscriptionProblem p = build_problem(ego, front, goal, hz, kParams, barriers);
  const SolveReport rep = solve(p, nullptr, desk_options());
  REQUIRE(rep.solved());
  CHECK(std::abs(rep.objective - 2e-4) <= 1e-6);
}

TEST_CASE("straight-road reach problem hits the kinematic optimum") {
  // v pinned to 10 by the state box; 50 m at 10 m/s is 5 s.
  VehicleParams params = kParams;
  params.v_min = 10.0;
  params.v_max = 10.0;
  EgoState ego{0, 0, 0, 10};
  MotionProfile front = MotionProfile::constant(1000, 0);
  GoalSpec goal{50, 0.0, 0.3};
  HorizonSpec hz{50, 0.2, 1e-4};
  const TranscriptionProblem p = build_problem(ego, front, goal, hz, params, {});
  const SolveReport rep = solve(p, nullptr, desk_options());
  REQUIRE(rep.solved());
  CHECK(std::abs(rep.objective - 5.0) <= 1e-2);
}

TEST_CASE("initial-level rejection and the bypass flag") {
  EgoState ego{10, 0, 0, 10};
  MotionProfile front = MotionProfile::constant(12, 6.94);  // inside the ellipse
  KappaPolynomial kap{{-0.3, 1.0}};
  std::vector<BarrierInstance> barriers{
      BarrierInstance::ellipse_front(EllipseBarrier::from_axes(6, 3), kap, front, 0.0)};
  GoalSpec goal{40, 0, 0.3};
  HorizonSpec hz{10, 0.2, 1e-4};
  CHECK_THROWS_AS(build_problem(ego, front, goal, hz, kParams, barriers), InitialInfeasibility);
  BuildOptions relaxed;
  relaxed.check_initial_levels = false;
  CHECK_NOTHROW(build_problem(ego, front, goal, hz, kParams, barriers, std::nullopt, relaxed));
}

TEST_CASE("head-on construction violating the braking inequality is infeasible") {
  // H + v_e - v_o < 0 at the start: no admissible inputs exist at node 0.
  VehicleParams params = kParams;
  params.v_max = 20.0;
  EgoState ego{0, 0, 0, 20};
  MotionProfile front = MotionProfile::constant(500, 5);
  GoalSpec goal{60, 0, 0.3};
  HorizonSpec hz{20, 0.2, 1e-4};
  OpposingCoupling oc;
  oc.initial = PointState{50, -20};  // h = 50 - 100 = -50, residual cap -10
  oc.barrier = LongitudinalBarrier{8.0};
  oc.kappa_eo = KappaPolynomial{{0.0, 1.0}};
  oc.kappa_oe = KappaPolynomial{{0.0, 1.0}};
  BuildOptions relaxed;
  relaxed.check_initial_levels = false;
  const TranscriptionProblem p = build_problem(ego, front, goal, hz, params, {}, oc, relaxed);
  const SolveReport rep = solve(p, nullptr, desk_options());
  CHECK(rep.status == nlp::SolveStatus::infeasible);
  CHECK_FALSE(feasibility_probe(p, desk_options()));
}

TEST_CASE("feasibility probe consistency") {
  const TranscriptionProblem p = q1_like_problem();
  const SolveReport rep = solve(p, nullptr, desk_options());
  REQUIRE(rep.solved());
  CHECK(feasibility_probe(p, desk_options()));  // solved implies probe-true

  // Probe of a problem with trivially satisfiable rows.
  EgoState ego{0, 0, 0, 5};
  const TranscriptionProblem easy =
      build_problem(ego, MotionProfile::constant(1000, 0), GoalSpec{-10, 0, 0.3},
                    HorizonSpec{5, 0.2, 1e-4}, kParams, {});
  CHECK(feasibility_probe(easy, desk_options()));
}

TEST_CASE("solved trajectories replay through the euler step and satisfy the safety rows") {
  const TranscriptionProblem p = q1_like_problem();
  const SolveReport rep = solve(p, nullptr, desk_options());
  REQUIRE(rep.solved());
  const auto& tr = rep.trajectory;

  const auto& rows = p.nlp().rows;
  for (int i = 0; i < p.horizon().n; ++i) {
    const EgoState propagated =
        step_euler(tr.ego[static_cast<std::size_t>(i)], tr.inputs[static_cast<std::size_t>(i)],
                   kParams, tr.dts[static_cast<std::size_t>(i)]);
    const EgoState& node = tr.ego[static_cast<std::size_t>(i) + 1];
    const double scale = rows[static_cast<std::size_t>(4 * i)].scale;
    const double tol = 1e-6 / std::min(scale, 1.0) + 1e-9;
    CHECK(std::abs(node.x - propagated.x) <= tol);
    CHECK(std::abs(node.y - propagated.y) <= tol);
    CHECK(std::abs(node.psi - propagated.psi) <= tol);
    CHECK(std::abs(node.v - propagated.v) <= tol);
  }

  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].tag != nlp::RowTag::cbf) continue;
    const double val = rows[k].scale * rows[k].eval(rep.z.data(), nullptr);
    CHECK(val >= -1e-6);
  }
}

TEST_CASE("tightening t_max never decreases the optimum") {
  double prev = 0.0;
  bool first = true;
  for (double t_max : {0.2, 0.15, 0.1}) {
    const TranscriptionProblem p = q1_like_problem(0.3 * 6.94, t_max);
    const SolveReport rep = solve(p, nullptr, desk_options());
    REQUIRE(rep.solved());
    if (!first) CHECK(rep.objective >= prev - 1e-4);
    prev = rep.objective;
    first = false;
  }
}

TEST_CASE("identical problem and warm start give bit-identical reports") {
  const TranscriptionProblem p = q1_like_problem();
  const SolveReport cold = solve(p, nullptr, desk_options());
  REQUIRE(cold.solved());
  WarmStart w{cold.z, cold.multipliers};
  const SolveReport a = solve(p, &w, desk_options());
  const SolveReport b = solve(p, &w, desk_options());
  CHECK(a.same_numerics(b));
  // Warm-started re-solve of an unchanged problem stays at the optimum.
  CHECK(std::abs(a.objective - cold.objective) <= 1e-4 * (1.0 + cold.objective));
}

TEST_CASE("problem dump is versioned") {
  const TranscriptionProblem p = q1_like_problem();
  std::ostringstream os;
  p.dump(os);
  CHECK(os.str().rfind("tocbf-nlp-dump v1\n", 0) == 0);
  CHECK(os.str().find("rows") != std::string::npos);
}

TEST_CASE("motion profile closed form") {
  const MotionProfile m{100, -10, -1.6, 19.4};
  CHECK(m.v_at(0.0) == doctest::Approx(-10.0));
  const double ts = m.saturation_time();
  CHECK(ts == doctest::Approx((19.4 - 10.0) / 1.6));
  CHECK(m.v_at(ts + 5.0) == doctest::Approx(-19.4));
  const double t = ts + 2.0;
  double x_num = 100, acc = 0;
  const double h = 1e-4;
  while (acc < t) {
    x_num += m.v_at(acc) * h;
    acc += h;
  }
  CHECK(std::abs(m.x_at(t) - x_num) < 1e-2);
}
