#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ovt/nlp_solver.hpp"

using namespace ovt::nlp;
using Eigen::VectorXd;

namespace {

NlpProblem circle_problem() {
  // min x + y  s.t.  x^2 + y^2 = 1; optimum at (-r2, -r2), J = -sqrt(2).
  NlpProblem p;
  p.n = 2;
  p.cost_grad = VectorXd::Ones(2);
  p.lb = VectorXd::Constant(2, -10.0);
  p.ub = VectorXd::Constant(2, 10.0);
  Row r;
  r.kind = RowKind::equality;
  r.support = {0, 1};
  r.eval = [](const double* z, double* g) {
    if (g) {
      g[0] = 2 * z[0];
      g[1] = 2 * z[1];
    }
    return z[0] * z[0] + z[1] * z[1] - 1.0;
  };
  p.rows.push_back(r);
  return p;
}

}  // namespace

TEST_CASE("equality-constrained linear objective") {
  const NlpProblem p = circle_problem();
  VectorXd z0(2);
  z0 << 0.5, -0.5;
  const SolveResult r = solve_nlp(p, z0, SolverOptions{});
  CHECK(r.status == SolveStatus::solved);
  CHECK(r.objective == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-5));
  CHECK(r.max_violation <= 1e-6);
}

TEST_CASE("inequality and bound interplay") {
  // min x s.t. x^2 >= 4, x in [0, 10] -> x = 2.
  NlpProblem p;
  p.n = 1;
  p.cost_grad = VectorXd::Ones(1);
  p.lb = VectorXd::Constant(1, 0.0);
  p.ub = VectorXd::Constant(1, 10.0);
  Row r;
  r.kind = RowKind::inequality_ge;
  r.support = {0};
  r.eval = [](const double* z, double* g) {
    if (g) g[0] = 2 * z[0];
    return z[0] * z[0] - 4.0;
  };
  p.rows.push_back(r);
  VectorXd z0(1);
  z0 << 5.0;
  const SolveResult res = solve_nlp(p, z0, SolverOptions{});
  CHECK(res.status == SolveStatus::solved);
  CHECK(res.z[0] == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("pure bound optimum") {
  // min x + y with x in [3, 10], y in [-1, 1] -> (3, -1).
  NlpProblem p;
  p.n = 2;
  p.cost_grad = VectorXd::Ones(2);
  p.lb = VectorXd(2);
  p.ub = VectorXd(2);
  p.lb << 3.0, -1.0;
  p.ub << 10.0, 1.0;
  VectorXd z0(2);
  z0 << 7.0, 0.4;
  const SolveResult res = solve_nlp(p, z0, SolverOptions{});
  CHECK(res.status == SolveStatus::solved);
  CHECK(res.z[0] == doctest::Approx(3.0));
  CHECK(res.z[1] == doctest::Approx(-1.0));
}

TEST_CASE("contradictory rows are reported infeasible") {
  // x >= 1 and -x >= 1 cannot both hold.
  NlpProblem p;
  p.n = 1;
  p.cost_grad = VectorXd::Zero(1);
  p.lb = VectorXd::Constant(1, -10.0);
  p.ub = VectorXd::Constant(1, 10.0);
  Row a;
  a.kind = RowKind::inequality_ge;
  a.support = {0};
  a.eval = [](const double* z, double* g) {
    if (g) g[0] = 1.0;
    return z[0] - 1.0;
  };
  Row b;
  b.kind = RowKind::inequality_ge;
  b.support = {0};
  b.eval = [](const double* z, double* g) {
    if (g) g[0] = -1.0;
    return -z[0] - 1.0;
  };
  p.rows.push_back(a);
  p.rows.push_back(b);
  VectorXd z0(1);
  z0 << 0.0;
  const SolveResult res = solve_nlp(p, z0, SolverOptions{});
  CHECK(res.status == SolveStatus::infeasible);
  CHECK(res.max_violation > 1e-4);
}

TEST_CASE("phase-1 finds a feasible point when one exists") {
  const NlpProblem p = circle_problem();
  VectorXd z0(2), z_out;
  z0 << 4.0, 4.0;
  const double v = phase1_min_violation(p, z0, SolverOptions{}, &z_out);
  CHECK(v <= 1e-6);
  CHECK(std::abs(z_out.squaredNorm() - 1.0) < 1e-5);
}

TEST_CASE("determinism: identical inputs give bit-identical outputs") {
  const NlpProblem p = circle_problem();
  VectorXd z0(2);
  z0 << 0.3, 0.9;
  const SolveResult a = solve_nlp(p, z0, SolverOptions{});
  const SolveResult b = solve_nlp(p, z0, SolverOptions{});
  CHECK(a.status == b.status);
  CHECK(a.objective == b.objective);
  CHECK(a.iterations == b.iterations);
  REQUIRE(a.z.size() == b.z.size());
  for (int i = 0; i < a.z.size(); ++i) CHECK(a.z[i] == b.z[i]);
}
