#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ovt/decision_framework.hpp"

namespace ovt {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat key-value scenario description (section headers, one key per line).
/// Unknown keys are rejected; serialization is canonical so configs
/// round-trip exactly.
struct ScenarioConfig {
  // [meta]
  int version = 1;
  std::string name = "scenario";

  // [suite]
  std::string controller = "vlcbf-dual";  // vlcbf-dual | mpcdc
  int trials = 1;
  std::uint64_t master_seed = 1;
  double max_duration = 30.0;

  // [lane]
  double lane_width = 3.5;

  // [ego]
  double ego_x0 = 10.0, ego_y0 = 0.0, ego_psi0 = 0.0, ego_v0 = 10.0;
  double ego_length = 4.885, ego_width = 1.84, ego_l_r = 1.4;
  double ego_alpha_max = 8.0, ego_beta_max = 0.4;
  double ego_v_min = 0.0, ego_v_max = 19.4, ego_a_l = 8.0;

  // [front]
  double front_x0 = 64.0, front_v0 = 8.3;
  double front_length = 4.885, front_width = 1.84;
  std::string front_policy = "constant";  // constant | accel
  double front_accel_rate = 0.0;
  double front_accel_rate_min = 0.0, front_accel_rate_max = 0.0;  // per-trial draw when max>min
  double front_accel_window_begin = 0.0, front_accel_window_end = 0.0;
  double front_speed_cap = 1e30;

  // [opposing]
  bool opp_present = false;
  double opp_x0 = 380.0, opp_v0 = -8.0;
  double opp_v0_min = 0.0, opp_v0_max = 0.0;  // per-trial draw when max>min (signed)
  double opp_length = 4.885, opp_width = 1.84;
  std::string opp_policy = "constant";  // constant | accel | vlcbf
  double opp_accel_rate = 0.0;
  double opp_accel_window_begin = 0.0, opp_accel_window_end = 0.0;
  double opp_speed_cap = 1e30;
  double opp_cruise_speed = -8.0;
  std::string opp_autonomy = "autonomous";  // autonomous | semi
  double opp_a_max = 1.6, opp_v_limit = 19.4;
  double detect_range = 150.0;

  // [barrier]
  double ellipse_a = 7.0, ellipse_b = 3.0;
  double epsilon = 0.3;
  std::string lambda_tail = "1.0";     // comma list lambda1, lambda2, ...
  std::string lambda_tail_oe = "1.0";  // opposing vehicle's own tail
  double a_l = 8.0;

  // [goals]
  double phi = 1.8, c = 25.0, half_gap = 0.0, eps_y = 0.3;

  // [horizon]
  int horizon_n = 50;
  double t_max = 0.2, dt_min = 1e-4;

  // [noise]
  bool noise_enabled = true;
  double noise_pos_far = 0.5, noise_pos_near = 0.1, noise_near_dist = 2.0, noise_vel_rel = 0.1;

  // [sim]
  double substep = 1e-3;
  double opp_sample_hz = 50.0;

  // [solver]
  double feas_tol = 1e-6, opt_tol = 1e-6;
  int iter_limit = 3000;

  // [state_box]
  double box_y_min = -0.83, box_y_max = 4.33, box_psi_max = 1.0;
};

ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config_file(const std::string& path);
std::string serialize_config(const ScenarioConfig& cfg);
void validate_config(const ScenarioConfig& cfg);

std::vector<double> parse_lambda_tail(const std::string& comma_list);

/// Instantiate trial `k` of a suite: deterministic per-trial seed plus any
/// configured scenario draws from the dedicated scenario stream.
EpisodeSetup make_episode_setup(const ScenarioConfig& cfg, int trial_index);
FrameworkConfig make_framework_config(const ScenarioConfig& cfg);
DcConstraintSpec make_dc_spec(const ScenarioConfig& cfg);

}  // namespace ovt
