#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ovt/vehicle_models.hpp"

using namespace ovt;

namespace {
const VehicleParams kParams{};  // l_r = 1.4

EgoState dense_euler_reference(EgoState s, const EgoInput& u, const VehicleParams& p, double t,
                               double h = 1e-5) {
  const int steps = static_cast<int>(std::llround(t / h));
  for (int i = 0; i < steps; ++i) s = step_euler(s, u, p, h);
  return s;
}
}  // namespace

TEST_CASE("ego derivative matches the bicycle model term by term") {
  SUBCASE("zero slip decouples the lateral terms") {
    const EgoDerivative d = ego_derivative({0, 0, 0, 10}, {1, 0}, kParams);
    CHECK(d.dx == doctest::Approx(10.0));
    CHECK(d.dy == doctest::Approx(0.0));
    CHECK(d.dpsi == doctest::Approx(0.0));
    CHECK(d.dv == doctest::Approx(1.0));
  }
  SUBCASE("slip couples into y and heading rate") {
    const EgoDerivative d = ego_derivative({0, 0, 0, 10}, {0, 0.1}, kParams);
    CHECK(d.dx == doctest::Approx(10.0));
    CHECK(d.dy == doctest::Approx(1.0));
    CHECK(d.dpsi == doctest::Approx(10.0 * 0.1 / 1.4));
    CHECK(d.dv == doctest::Approx(0.0));
  }
  SUBCASE("heading-aligned with the y axis") {
    const EgoDerivative d = ego_derivative({5, 2, M_PI / 2, 8}, {0.5, 0}, kParams);
    CHECK(d.dx == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(d.dy == doctest::Approx(8.0));
    CHECK(d.dpsi == doctest::Approx(0.0));
    CHECK(d.dv == doctest::Approx(0.5));
  }
}

TEST_CASE("point derivative is the double integrator") {
  const PointDerivative d1 = point_derivative({100, -15}, {0});
  CHECK(d1.dx == -15.0);
  CHECK(d1.dv == 0.0);
  const PointDerivative d2 = point_derivative({64, 8.3}, {1.6});
  CHECK(d2.dx == 8.3);
  CHECK(d2.dv == 1.6);
  const PointDerivative d3 = point_derivative({0, 0}, {0});
  CHECK(d3.dx == 0.0);
  CHECK(d3.dv == 0.0);
}

TEST_CASE("euler step") {
  const EgoState s1 = step_euler(EgoState{0, 0, 0, 10}, EgoInput{1, 0}, kParams, 0.1);
  CHECK(s1.x == doctest::Approx(1.0));
  CHECK(s1.y == doctest::Approx(0.0));
  CHECK(s1.psi == doctest::Approx(0.0));
  CHECK(s1.v == doctest::Approx(10.1));

  const PointState p1 = step_euler(PointState{0, 10}, PointInput{0}, 0.5);
  CHECK(p1.x == doctest::Approx(5.0));
  CHECK(p1.v == doctest::Approx(10.0));

  const EgoState s2 = step_euler(EgoState{0, 0, 0, 10}, EgoInput{0, 0.1}, kParams, 0.02);
  CHECK(s2.x == doctest::Approx(0.2));
  CHECK(s2.y == doctest::Approx(0.02));
  CHECK(s2.psi == doctest::Approx(0.1 * 10.0 / 1.4 * 0.02));
  CHECK(s2.v == doctest::Approx(10.0));

  CHECK_THROWS_AS(step_euler(EgoState{}, EgoInput{}, kParams, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(step_euler(PointState{}, PointInput{}, -0.1), std::invalid_argument);
}

TEST_CASE("rk4 step") {
  SUBCASE("exact for the double integrator") {
    const PointState p = step_rk4(PointState{0, 10}, PointInput{2}, 1.0);
    CHECK(p.x == doctest::Approx(11.0));
    CHECK(p.v == doctest::Approx(12.0));
  }
  SUBCASE("straight-line coasting") {
    const EgoState s = step_rk4(EgoState{0, 0, 0, 10}, EgoInput{0, 0}, kParams, 1.0);
    CHECK(s.x == doctest::Approx(10.0));
    CHECK(s.y == doctest::Approx(0.0));
    CHECK(s.psi == doctest::Approx(0.0));
    CHECK(s.v == doctest::Approx(10.0));
  }
  SUBCASE("against a dense Euler reference") {
    // Richardson-extrapolated dense Euler kills its O(h) error, leaving a
    // reference good to ~1e-10 over this half-second arc.
    const EgoState s0{0, 0, 0, 10};
    const EgoInput u{0, 0.2};
    const EgoState e1 = dense_euler_reference(s0, u, kParams, 0.5, 1e-5);
    const EgoState e2 = dense_euler_reference(s0, u, kParams, 0.5, 5e-6);
    const EgoState ref{2 * e2.x - e1.x, 2 * e2.y - e1.y, 2 * e2.psi - e1.psi, 2 * e2.v - e1.v};

    // Composed quarter-steps track the reference to the stated tolerance; a
    // single half-second step carries its own fourth-order truncation error.
    EgoState fine = s0;
    for (int i = 0; i < 50; ++i) fine = step_rk4(fine, u, kParams, 0.01);
    CHECK(std::abs(fine.x - ref.x) < 1e-6);
    CHECK(std::abs(fine.y - ref.y) < 1e-6);
    CHECK(std::abs(fine.psi - ref.psi) < 1e-6);
    CHECK(std::abs(fine.v - ref.v) < 1e-6);

    const EgoState got = step_rk4(s0, u, kParams, 0.5);
    CHECK(std::abs(got.x - ref.x) < 5e-4);
    CHECK(std::abs(got.y - ref.y) < 5e-4);
    CHECK(std::abs(got.psi - ref.psi) < 5e-4);
    CHECK(std::abs(got.v - ref.v) < 5e-4);
  }
  CHECK_THROWS_AS(step_rk4(EgoState{}, EgoInput{}, kParams, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(step_rk4(PointState{}, PointInput{}, 0.0), std::invalid_argument);
}

TEST_CASE("euler and rk4 agree to second order as dt shrinks") {
  const EgoState s{3, -1, 0.2, 12};
  const EgoInput u{1.5, 0.15};
  double prev_ratio = 0.0;
  int idx = 0;
  for (double dt : {1e-2, 1e-3, 1e-4}) {
    const EgoState a = step_euler(s, u, kParams, dt);
    const EgoState b = step_rk4(s, u, kParams, dt);
    const double diff = std::abs(a.x - b.x) + std::abs(a.y - b.y) + std::abs(a.psi - b.psi) +
                        std::abs(a.v - b.v);
    const double ratio = diff / (dt * dt);  // should approach a constant
    if (idx > 0) CHECK(ratio == doctest::Approx(prev_ratio).epsilon(0.2));
    prev_ratio = ratio;
    ++idx;
  }
}

TEST_CASE("ego derivative is affine in the input") {
  const EgoState s{1, 2, 0.3, 9};
  const EgoInput u1{2, 0.1}, u2{-1, 0.05}, sum{1, 0.15}, zero{0, 0};
  const EgoDerivative d12 = ego_derivative(s, sum, kParams);
  const EgoDerivative d1 = ego_derivative(s, u1, kParams);
  const EgoDerivative d2 = ego_derivative(s, u2, kParams);
  const EgoDerivative d0 = ego_derivative(s, zero, kParams);
  CHECK(d12.dx - d1.dx - d2.dx + d0.dx == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(d12.dy - d1.dy - d2.dy + d0.dy == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(d12.dpsi - d1.dpsi - d2.dpsi + d0.dpsi == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(d12.dv - d1.dv - d2.dv + d0.dv == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("zero slip at zero heading keeps y and psi constant") {
  EgoState e{0, 1.5, 0, 14};
  EgoState r = e;
  for (int i = 0; i < 100; ++i) {
    e = step_euler(e, EgoInput{2.0, 0.0}, kParams, 0.01);
    r = step_rk4(r, EgoInput{2.0, 0.0}, kParams, 0.01);
  }
  CHECK(e.y == 1.5);
  CHECK(e.psi == 0.0);
  CHECK(r.y == 1.5);
  CHECK(r.psi == 0.0);
}

TEST_CASE("rk4 reproduces the closed form for the point model") {
  PointState p{2, -4};
  const double a = 1.3;
  double t = 0.0;
  for (int i = 0; i < 57; ++i) {
    p = step_rk4(p, PointInput{a}, 0.01);
    t += 0.01;
  }
  CHECK(p.x == doctest::Approx(2 - 4 * t + 0.5 * a * t * t).epsilon(1e-12));
  CHECK(p.v == doctest::Approx(-4 + a * t).epsilon(1e-12));
}
