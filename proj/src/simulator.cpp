#include "ovt/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ovt {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

std::string to_string(EpisodePhase p) {
  switch (p) {
    case EpisodePhase::pre_check: return "pre-check";
    case EpisodePhase::overtaking: return "overtaking";
    case EpisodePhase::aborting: return "aborting";
    case EpisodePhase::done_forward: return "done-forward";
    case EpisodePhase::done_back: return "done-back";
    case EpisodePhase::declined: return "declined";
    case EpisodePhase::fault: return "fault";
    case EpisodePhase::timeout: return "timeout";
  }
  return "?";
}

Measurement measure(const WorldState& w, const EpisodeSetup& setup, Rng& noise_rng) {
  Measurement m;
  m.t = w.t;
  m.ego = w.ego;

  auto noisy = [&](double x, double y, double v) {
    ObjectMeasurement o{x, y, v};
    if (setup.noise.enabled) {
      const double dist = std::hypot(x - w.ego.x, y - w.ego.y);
      const double r = dist > setup.noise.near_distance ? setup.noise.pos_range_far
                                                        : setup.noise.pos_range_near;
      o.x += noise_rng.uniform(-r, r);
      o.y += noise_rng.uniform(-r, r);
      o.v *= 1.0 + noise_rng.uniform(-setup.noise.vel_rel_range, setup.noise.vel_rel_range);
    }
    return o;
  };

  m.front = noisy(w.front.x, setup.lanes.ego_center_y, w.front.v);
  if (w.has_opposing) {
    const double gap = std::hypot(w.opposing.x - w.ego.x, setup.lanes.opp_center_y - w.ego.y);
    if (gap <= setup.detect_range) {
      m.opposing_detected = true;
      m.opposing = noisy(w.opposing.x, setup.lanes.opp_center_y, w.opposing.v);
    }
  }
  return m;
}

PointInput vlcbf_follower_input(const PointState& opp, const EgoState& ego,
                                const VehicleParams& ego_params, const KappaPolynomial& kappa_oe,
                                double a_l, double nominal) {
  const LongitudinalBarrier b{a_l};
  const BarrierEvaluation be =
      eval_longitudinal(b, ego, opp, ego_params, LongitudinalRole::opposing_side, 0.0);
  double u = nominal;
  // Residual is affine in u_o with slope lg[0] = (v_e^x - v_o^x)/a_l; when the
  // slope has magnitude, the admissible set is a half-line.
  const double slope = be.lg[0];
  const double rest = be.lf + be.dh_dt + kappa_eval(kappa_oe, be.h);
  if (std::abs(slope) > 1e-12) {
    const double u_bound = -rest / slope;
    if (slope > 0.0)
      u = std::max(u, u_bound);
    else
      u = std::min(u, u_bound);
  }
  return PointInput{std::clamp(u, -a_l, a_l)};
}

ClearanceReport collision_check(const WorldState& w, const EpisodeSetup& setup) {
  ClearanceReport rep;
  const Obb ego{w.ego.x, w.ego.y, w.ego.psi, setup.ego_params.length, setup.ego_params.width};
  const Obb front{w.front.x, setup.lanes.ego_center_y, 0.0, setup.front_params.length,
                  setup.front_params.width};
  rep.front = obb_clearance(ego, front);
  rep.collision_front = rep.front <= 0.0;
  if (w.has_opposing) {
    const Obb opp{w.opposing.x, setup.lanes.opp_center_y, 0.0, setup.opp_params.length,
                  setup.opp_params.width};
    rep.opp = obb_clearance(ego, opp);
    rep.collision_opp = rep.opp <= 0.0;
  }
  return rep;
}

EgoState plant_step_ego(const EgoState& s, const EgoInput& u, const VehicleParams& p, double dt) {
  EgoState out = step_rk4(s, u, p, dt);
  if (out.v < 0.0) out.v = 0.0;  // the ego never reverses
  return out;
}

namespace {

double behavior_input(const BehaviorPolicy& pol, const PointState& self, double t) {
  switch (pol.kind) {
    case BehaviorPolicy::Kind::constant_speed: return 0.0;
    case BehaviorPolicy::Kind::piecewise_accel: {
      if (t < pol.window_begin || t >= pol.window_end) return 0.0;
      if (std::abs(self.v) >= pol.speed_cap &&
          ((self.v >= 0 && pol.accel_rate > 0) || (self.v <= 0 && pol.accel_rate < 0)))
        return 0.0;
      return pol.accel_rate;
    }
    case BehaviorPolicy::Kind::vlcbf_follower: return 0.0;  // handled by caller (needs the ego)
  }
  return 0.0;
}

}  // namespace

EpisodeMetrics compute_metrics(const TrajectoryLog& log) {
  EpisodeMetrics m;
  m.duration = log.rows.empty() ? 0.0 : log.rows.back().t;
  for (const LogRow& r : log.rows) {
    if (std::isfinite(r.clearance_front))
      m.min_clearance_front = std::min(m.min_clearance_front, r.clearance_front);
    if (std::isfinite(r.clearance_opp))
      m.min_clearance_opp = std::min(m.min_clearance_opp, r.clearance_opp);
    if (std::isfinite(r.h_ef)) m.min_h_ef = std::min(m.min_h_ef, r.h_ef);
    if (std::isfinite(r.h_eo)) m.min_h_eo = std::min(m.min_h_eo, r.h_eo);
  }
  m.collision = m.min_clearance_front <= 0.0 ||
                (log.setup.has_opposing && m.min_clearance_opp <= 0.0);
  m.success = log.final_phase == EpisodePhase::done_forward && !m.collision;
  m.declined = log.final_phase == EpisodePhase::declined;
  m.fault = log.final_phase == EpisodePhase::fault;
  m.timeout = log.final_phase == EpisodePhase::timeout;
  m.safe = !m.collision && m.min_clearance_front > 0.0 &&
           (!log.setup.has_opposing || m.min_clearance_opp > 0.0);
  m.controller_iterations = static_cast<int>(log.solves.size());
  return m;
}

TrajectoryLog run_episode(const EpisodeSetup& setup, const ControllerHook& controller) {
  TrajectoryLog log;
  log.seed = setup.seed;
  log.setup = setup;

  Rng noise_rng = make_stream(setup.seed, RngStream::noise);

  WorldState w;
  w.t = 0.0;
  w.ego = setup.ego0;
  w.front = setup.front0;
  w.has_opposing = setup.has_opposing;
  w.opposing = setup.opp0;

  const double dt = setup.substep;
  const double tick = 1.0 / setup.opp_sample_hz;

  // Cached opposing measurement, refreshed at the sampling rate.
  ObjectMeasurement opp_cache;
  bool opp_cache_valid = false;
  long last_opp_tick = -1;
  double opp_input_cached = 0.0;
  long last_follower_tick = -1;

  auto log_state_row = [&](const EgoInput& applied, int phase) {
    LogRow r;
    r.t = w.t;
    r.ego_x = w.ego.x;
    r.ego_y = w.ego.y;
    r.ego_psi = w.ego.psi;
    r.ego_v = w.ego.v;
    r.front_x = w.front.x;
    r.front_v = w.front.v;
    r.opp_x = w.has_opposing ? w.opposing.x : kNan;
    r.opp_v = w.has_opposing ? w.opposing.v : kNan;
    r.alpha = applied.alpha;
    r.beta = applied.beta;
    r.phase = phase;
    const BarrierEvaluation ef =
        eval_ellipse(setup.log_ellipse, w.ego, w.front, setup.lanes.ego_center_y);
    r.h_ef = ef.h;
    if (w.has_opposing) {
      const BarrierEvaluation eo = eval_longitudinal(setup.log_longitudinal, w.ego, w.opposing,
                                                     setup.ego_params);
      r.h_eo = eo.h;
    } else {
      r.h_eo = kNan;
    }
    const ClearanceReport c = collision_check(w, setup);
    r.clearance_front = c.front;
    r.clearance_opp = w.has_opposing ? c.opp : kNan;
    log.rows.push_back(r);
    return c;
  };

  int phase_code = static_cast<int>(EpisodePhase::pre_check);
  log_state_row(EgoInput{}, phase_code);

  while (w.t < setup.max_duration - 0.5 * dt) {
    // Controller measurement: fresh front, opposing at the sampling rate.
    Measurement m = measure(w, setup, noise_rng);
    if (m.opposing_detected) {
      const long t_idx = static_cast<long>(std::floor(w.t / tick + 1e-9));
      if (t_idx != last_opp_tick || !opp_cache_valid) {
        opp_cache = m.opposing;
        opp_cache_valid = true;
        last_opp_tick = t_idx;
      } else {
        m.opposing = opp_cache;
      }
    } else {
      opp_cache_valid = false;
    }
    log.measurements.push_back(m);

    const ControlCommand cmd = controller(m, log);
    phase_code = static_cast<int>(cmd.phase);
    if (!cmd.note.empty()) log.events.push_back(cmd.note);
    if (cmd.fault) {
      log.final_phase = EpisodePhase::fault;
      log.metrics = compute_metrics(log);
      return log;
    }
    if (cmd.finished) {
      log.final_phase = cmd.phase;
      log.metrics = compute_metrics(log);
      return log;
    }

    const int hold_steps = std::max(1, static_cast<int>(std::llround(cmd.hold_s / dt)));
    for (int k = 0; k < hold_steps && w.t < setup.max_duration - 0.5 * dt; ++k) {
      // Behavior inputs for the scheduled vehicles.
      const double front_u = behavior_input(setup.front_policy, w.front, w.t);
      double opp_u = 0.0;
      if (w.has_opposing) {
        if (setup.opp_policy.kind == BehaviorPolicy::Kind::vlcbf_follower) {
          const long f_idx = static_cast<long>(std::floor(w.t / tick + 1e-9));
          if (f_idx != last_follower_tick) {
            const double nominal =
                setup.opp_policy.cruise_gain * (setup.opp_policy.cruise_speed - w.opposing.v);
            opp_input_cached =
                vlcbf_follower_input(w.opposing, w.ego, setup.ego_params, setup.opp_policy.kappa,
                                     setup.opp_policy.a_l,
                                     std::clamp(nominal, -setup.opp_policy.a_l,
                                                setup.opp_policy.a_l))
                    .alpha;
            last_follower_tick = f_idx;
          }
          opp_u = opp_input_cached;
        } else {
          opp_u = behavior_input(setup.opp_policy, w.opposing, w.t);
        }
      }

      w.ego = plant_step_ego(w.ego, cmd.u, setup.ego_params, dt);
      w.front = step_rk4(w.front, PointInput{front_u}, dt);
      if (w.has_opposing) w.opposing = step_rk4(w.opposing, PointInput{opp_u}, dt);
      w.t += dt;

      const ClearanceReport c = log_state_row(cmd.u, phase_code);
      if (c.collision_front || c.collision_opp) {
        log.events.push_back("collision");
        log.final_phase = EpisodePhase::fault;
        log.metrics = compute_metrics(log);
        return log;
      }
    }
  }

  log.final_phase = EpisodePhase::timeout;
  log.metrics = compute_metrics(log);
  return log;
}

}  // namespace ovt
