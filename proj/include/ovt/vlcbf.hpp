#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "ovt/vehicle_models.hpp"

namespace ovt {

/// Coefficients of the class-Ke rate polynomial
///   kappa(h) = lambda0 + lambda1 h + lambda2 h^3 + ... + lambdam h^(2m-1).
/// lambda0 <= 0 is the level parameter; the tail coefficients are >= 0 with
/// at least one strictly positive so the tail is strictly increasing.
struct KappaPolynomial {
  std::vector<double> lambda;  // [lambda0, lambda1, ..., lambdam], m >= 1

  std::size_t order() const { return lambda.empty() ? 0 : lambda.size() - 1; }
  bool valid() const;

  /// kappa with lambda0 = 0 and unit linear tail; enforces the zero level.
  static KappaPolynomial unit();
};

/// Target super-level value: the barrier enforces h >= epsilon.
struct LevelSpec {
  double epsilon = 0.0;
};

/// Longitudinal braking-distance barrier between an ego-lane vehicle and
/// oncoming traffic: h = x_o - x_e - (v_e^x - v_o^x)^2 / (2 a_l).
struct LongitudinalBarrier {
  double a_l = 8.0;  // m/s^2
};

/// Ellipse barrier around the front vehicle:
///   h = beta1 (x_e - x_f)^2 + beta2 (y_e - y_f)^2 - beta3,
/// with beta1 = 1/a^2, beta2 = 1/b^2, beta3 = 1 so h = 0 traces the ellipse
/// with semi-axes a (longitudinal) and b (lateral).
struct EllipseBarrier {
  double beta1 = 1.0 / 49.0;
  double beta2 = 1.0 / 9.0;
  double beta3 = 1.0;

  static EllipseBarrier from_axes(double a, double b);
  double semi_axis_a() const;
  double semi_axis_b() const;
};

/// Barrier value plus the pieces of its time derivative along the flow:
/// dh/dt = Lf + Lg . u + dh_dt_explicit, where dh_dt_explicit carries the
/// other vehicle's motion.
struct BarrierEvaluation {
  double h = 0.0;
  std::array<double, 4> dh_dx{};  // gradient w.r.t. the controlled state
  double dh_dt = 0.0;             // explicit time partial
  double lf = 0.0;                // drift Lie derivative
  std::array<double, 2> lg{};     // input Lie derivative row
};

/// kappa(h) for the full polynomial (including lambda0).
double kappa_eval(const KappaPolynomial& k, double h);

/// Tail kappa~(h) (lambda0 ignored).
double kappa_tail_eval(const KappaPolynomial& k, double h);

/// d kappa / dh (lambda0 drops out).
double kappa_derivative(const KappaPolynomial& k, double h);

/// Level parameter realizing a target level: lambda0 = -kappa~(eps).
double lambda0_for_level(const KappaPolynomial& tail, const LevelSpec& eps);

/// Inverse map: the unique eps >= 0 with kappa~(eps) = -lambda0 (bisection).
LevelSpec level_of_lambda0(const KappaPolynomial& k);

enum class LongitudinalRole {
  ego_side,       // controlled state is the ego (bicycle model)
  opposing_side,  // controlled state is the opposing double integrator
};

/// Longitudinal barrier between the ego and an opposing vehicle. The
/// non-controlled vehicle enters as a time-varying parameter; its current
/// acceleration feeds dh_dt. With role = opposing_side the gradient/Lie
/// fields refer to the opposing (x, v) state and other_accel is the ego's
/// longitudinal acceleration d(v cos psi)/dt.
BarrierEvaluation eval_longitudinal(const LongitudinalBarrier& b, const EgoState& ego,
                                    const PointState& opp, const VehicleParams& params,
                                    LongitudinalRole role = LongitudinalRole::ego_side,
                                    double other_accel = 0.0);

/// Ellipse barrier around the front vehicle; y_f is the front vehicle's lane
/// centerline (its model has no lateral state). front_accel feeds dh_dt.
BarrierEvaluation eval_ellipse(const EllipseBarrier& b, const EgoState& ego,
                               const PointState& front, double front_lane_y,
                               double front_accel = 0.0);

/// Lf + Lg.u + dh_dt + kappa(h); u is admissible at this state iff >= 0.
double vlcbf_residual(const BarrierEvaluation& be, const EgoInput& u, const KappaPolynomial& k);
double vlcbf_residual(const BarrierEvaluation& be, const PointInput& u, const KappaPolynomial& k);

/// Feasibility inequality of the mutual-braking argument: true iff
/// H + v_e^x - v_o^x >= 0, with H the least of the two Lambda.H values.
/// Requires v_e^x - v_o^x > 0 (ego forward, opposing toward it).
bool max_brake_feasibility(double h_min, double v_e_x, double v_o_x);

}  // namespace ovt
