#pragma once

#include <array>
#include <stdexcept>

namespace ovt {

/// Kinematic bicycle state of the ego vehicle: longitudinal/lateral position
/// of the c.g., heading, and forward speed.
struct EgoState {
  double x = 0.0;    // m
  double y = 0.0;    // m
  double psi = 0.0;  // rad
  double v = 0.0;    // m/s, forward (never negative)
};

/// Ego input: acceleration at the c.g. and slip angle.
struct EgoInput {
  double alpha = 0.0;  // m/s^2
  double beta = 0.0;   // rad
};

/// Double-integrator state for the front and opposing vehicles. Velocity is
/// signed: opposing traffic drives in -x.
struct PointState {
  double x = 0.0;  // m
  double v = 0.0;  // m/s
};

struct PointInput {
  double alpha = 0.0;  // m/s^2
};

struct VehicleParams {
  double length = 4.885;     // m
  double width = 1.840;      // m
  double l_r = 1.4;          // m, c.g. to rear axle
  double alpha_max = 8.0;    // m/s^2
  double beta_max = 0.4;     // rad
  double v_min = 0.0;        // m/s
  double v_max = 19.4;       // m/s
  double a_l = 8.0;          // m/s^2, max deceleration magnitude
};

struct EgoDerivative {
  double dx = 0.0, dy = 0.0, dpsi = 0.0, dv = 0.0;
};

struct PointDerivative {
  double dx = 0.0, dv = 0.0;
};

/// f(x) + g(x)u of the bicycle model:
/// [v cos(psi) - v sin(psi) b, v sin(psi) + v cos(psi) b, (v/l_r) b, a].
EgoDerivative ego_derivative(const EgoState& s, const EgoInput& u, const VehicleParams& p);

/// Drift term f(x) alone (zero input).
EgoDerivative ego_drift(const EgoState& s);

/// Double integrator: (v, alpha).
PointDerivative point_derivative(const PointState& s, const PointInput& u);

/// One forward-Euler step; matches the transcription defect constraints.
EgoState step_euler(const EgoState& s, const EgoInput& u, const VehicleParams& p, double dt);
PointState step_euler(const PointState& s, const PointInput& u, double dt);

/// Classical RK4 step; exact for the double integrator.
EgoState step_rk4(const EgoState& s, const EgoInput& u, const VehicleParams& p, double dt);
PointState step_rk4(const PointState& s, const PointInput& u, double dt);

}  // namespace ovt
