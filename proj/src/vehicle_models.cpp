#include "ovt/vehicle_models.hpp"

#include <cmath>

namespace ovt {

namespace {

void require_positive_dt(double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
}

}  // namespace

EgoDerivative ego_derivative(const EgoState& s, const EgoInput& u, const VehicleParams& p) {
  const double c = std::cos(s.psi);
  const double sn = std::sin(s.psi);
  EgoDerivative d;
  d.dx = s.v * c - s.v * sn * u.beta;
  d.dy = s.v * sn + s.v * c * u.beta;
  d.dpsi = (s.v / p.l_r) * u.beta;
  d.dv = u.alpha;
  return d;
}

EgoDerivative ego_drift(const EgoState& s) {
  EgoDerivative d;
  d.dx = s.v * std::cos(s.psi);
  d.dy = s.v * std::sin(s.psi);
  d.dpsi = 0.0;
  d.dv = 0.0;
  return d;
}

PointDerivative point_derivative(const PointState& s, const PointInput& u) {
  return PointDerivative{s.v, u.alpha};
}

EgoState step_euler(const EgoState& s, const EgoInput& u, const VehicleParams& p, double dt) {
  require_positive_dt(dt);
  const EgoDerivative d = ego_derivative(s, u, p);
  return EgoState{s.x + dt * d.dx, s.y + dt * d.dy, s.psi + dt * d.dpsi, s.v + dt * d.dv};
}

PointState step_euler(const PointState& s, const PointInput& u, double dt) {
  require_positive_dt(dt);
  return PointState{s.x + dt * s.v, s.v + dt * u.alpha};
}

EgoState step_rk4(const EgoState& s, const EgoInput& u, const VehicleParams& p, double dt) {
  require_positive_dt(dt);
  auto plus = [](const EgoState& a, const EgoDerivative& d, double h) {
    return EgoState{a.x + h * d.dx, a.y + h * d.dy, a.psi + h * d.dpsi, a.v + h * d.dv};
  };
  const EgoDerivative k1 = ego_derivative(s, u, p);
  const EgoDerivative k2 = ego_derivative(plus(s, k1, 0.5 * dt), u, p);
  const EgoDerivative k3 = ego_derivative(plus(s, k2, 0.5 * dt), u, p);
  const EgoDerivative k4 = ego_derivative(plus(s, k3, dt), u, p);
  const double w = dt / 6.0;
  return EgoState{s.x + w * (k1.dx + 2 * k2.dx + 2 * k3.dx + k4.dx),
                  s.y + w * (k1.dy + 2 * k2.dy + 2 * k3.dy + k4.dy),
                  s.psi + w * (k1.dpsi + 2 * k2.dpsi + 2 * k3.dpsi + k4.dpsi),
                  s.v + w * (k1.dv + 2 * k2.dv + 2 * k3.dv + k4.dv)};
}

PointState step_rk4(const PointState& s, const PointInput& u, double dt) {
  require_positive_dt(dt);
  // Exact for constant acceleration.
  return PointState{s.x + dt * s.v + 0.5 * dt * dt * u.alpha, s.v + dt * u.alpha};
}

}  // namespace ovt
