#include "ovt/vlcbf.hpp"

#include <cmath>
#include <stdexcept>

namespace ovt {

bool KappaPolynomial::valid() const {
  if (lambda.size() < 2) return false;
  if (lambda[0] > 0.0) return false;
  bool tail_positive = false;
  for (std::size_t i = 1; i < lambda.size(); ++i) {
    if (lambda[i] < 0.0) return false;
    if (lambda[i] > 0.0) tail_positive = true;
  }
  return tail_positive;
}

KappaPolynomial KappaPolynomial::unit() { return KappaPolynomial{{0.0, 1.0}}; }

double kappa_tail_eval(const KappaPolynomial& k, double h) {
  double sum = 0.0;
  double pw = h;  // h^(2i-1), starting at h^1
  const double h2 = h * h;
  for (std::size_t i = 1; i < k.lambda.size(); ++i) {
    sum += k.lambda[i] * pw;
    pw *= h2;
  }
  return sum;
}

double kappa_eval(const KappaPolynomial& k, double h) {
  return (k.lambda.empty() ? 0.0 : k.lambda[0]) + kappa_tail_eval(k, h);
}

double kappa_derivative(const KappaPolynomial& k, double h) {
  double sum = 0.0;
  double pw = 1.0;  // h^(2i-2)
  const double h2 = h * h;
  for (std::size_t i = 1; i < k.lambda.size(); ++i) {
    sum += k.lambda[i] * static_cast<double>(2 * i - 1) * pw;
    pw *= h2;
  }
  return sum;
}

double lambda0_for_level(const KappaPolynomial& tail, const LevelSpec& eps) {
  if (eps.epsilon < 0.0) throw std::invalid_argument("lambda0_for_level: epsilon must be >= 0");
  return -kappa_tail_eval(tail, eps.epsilon);
}

LevelSpec level_of_lambda0(const KappaPolynomial& k) {
  const double target = -k.lambda[0];  // kappa~(eps) = target, target >= 0
  if (target <= 0.0) return LevelSpec{0.0};
  // kappa~ is strictly increasing on [0, inf) and unbounded; bracket then bisect.
  double lo = 0.0, hi = 1.0;
  while (kappa_tail_eval(k, hi) < target) {
    hi *= 2.0;
    if (hi > 1e18) throw std::runtime_error("level_of_lambda0: failed to bracket level");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (kappa_tail_eval(k, mid) < target)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-14 * (1.0 + hi)) break;
  }
  return LevelSpec{0.5 * (lo + hi)};
}

EllipseBarrier EllipseBarrier::from_axes(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("EllipseBarrier: axes must be > 0");
  return EllipseBarrier{1.0 / (a * a), 1.0 / (b * b), 1.0};
}

double EllipseBarrier::semi_axis_a() const { return std::sqrt(beta3 / beta1); }
double EllipseBarrier::semi_axis_b() const { return std::sqrt(beta3 / beta2); }

BarrierEvaluation eval_longitudinal(const LongitudinalBarrier& b, const EgoState& ego,
                                    const PointState& opp, const VehicleParams& params,
                                    LongitudinalRole role, double other_accel) {
  const double c = std::cos(ego.psi);
  const double sn = std::sin(ego.psi);
  const double ve_x = ego.v * c;
  const double dv = ve_x - opp.v;  // v_e^x - v_o^x

  BarrierEvaluation out;
  out.h = opp.x - ego.x - dv * dv / (2.0 * b.a_l);

  if (role == LongitudinalRole::ego_side) {
    // Controlled state: ego (x, y, psi, v). alpha_e^x = d(v cos psi)/dt is
    // input-linear: alpha cos psi - (v^2/l_r) sin psi * beta. The slip angle
    // also moves x_e itself (x_e dot = v cos psi - v beta sin psi), which
    // puts a + v sin psi term into the beta column.
    out.dh_dx = {-1.0, 0.0, dv * ego.v * sn / b.a_l, -dv * c / b.a_l};
    out.lf = -ve_x;
    out.lg = {-dv * c / b.a_l,
              ego.v * sn + dv * ego.v * ego.v * sn / (params.l_r * b.a_l)};
    // Opposing enters as a time-varying parameter with accel = other_accel.
    out.dh_dt = opp.v + dv * other_accel / b.a_l;
  } else {
    // Controlled state: opposing (x, v) double integrator.
    out.dh_dx = {1.0, dv / b.a_l, 0.0, 0.0};
    out.lf = opp.v;
    out.lg = {dv / b.a_l, 0.0};
    // Ego enters as a parameter; other_accel is alpha_e^x.
    out.dh_dt = -ve_x - dv * other_accel / b.a_l;
  }
  return out;
}

BarrierEvaluation eval_ellipse(const EllipseBarrier& b, const EgoState& ego,
                               const PointState& front, double front_lane_y,
                               double front_accel) {
  const double dx = ego.x - front.x;
  const double dy = ego.y - front_lane_y;
  const double c = std::cos(ego.psi);
  const double sn = std::sin(ego.psi);

  BarrierEvaluation out;
  out.h = b.beta1 * dx * dx + b.beta2 * dy * dy - b.beta3;
  out.dh_dx = {2.0 * b.beta1 * dx, 2.0 * b.beta2 * dy, 0.0, 0.0};
  out.lf = 2.0 * b.beta1 * dx * ego.v * c + 2.0 * b.beta2 * dy * ego.v * sn;
  out.lg = {0.0, -2.0 * b.beta1 * dx * ego.v * sn + 2.0 * b.beta2 * dy * ego.v * c};
  // Front vehicle moves longitudinally only; front_accel shifts its velocity
  // but enters h only through x_f, so dh/dt needs just v_f.
  out.dh_dt = -2.0 * b.beta1 * dx * front.v;
  (void)front_accel;
  return out;
}

double vlcbf_residual(const BarrierEvaluation& be, const EgoInput& u, const KappaPolynomial& k) {
  return be.lf + be.lg[0] * u.alpha + be.lg[1] * u.beta + be.dh_dt + kappa_eval(k, be.h);
}

double vlcbf_residual(const BarrierEvaluation& be, const PointInput& u, const KappaPolynomial& k) {
  return be.lf + be.lg[0] * u.alpha + be.dh_dt + kappa_eval(k, be.h);
}

bool max_brake_feasibility(double h_min, double v_e_x, double v_o_x) {
  if (!(v_e_x - v_o_x > 0.0))
    throw std::invalid_argument("max_brake_feasibility: requires v_e^x - v_o^x > 0");
  return h_min + v_e_x - v_o_x >= 0.0;
}

}  // namespace ovt
