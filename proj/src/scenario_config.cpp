#include "ovt/scenario_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <variant>

namespace ovt {

namespace {

using DblPtr = double ScenarioConfig::*;
using IntPtr = int ScenarioConfig::*;
using BoolPtr = bool ScenarioConfig::*;
using StrPtr = std::string ScenarioConfig::*;
using U64Ptr = std::uint64_t ScenarioConfig::*;

struct FieldDef {
  const char* section;
  const char* key;
  std::variant<DblPtr, IntPtr, BoolPtr, StrPtr, U64Ptr> ref;
};

const std::vector<FieldDef>& fields() {
  static const std::vector<FieldDef> defs = {
      {"meta", "version", &ScenarioConfig::version},
      {"meta", "name", &ScenarioConfig::name},
      {"suite", "controller", &ScenarioConfig::controller},
      {"suite", "trials", &ScenarioConfig::trials},
      {"suite", "master_seed", &ScenarioConfig::master_seed},
      {"suite", "max_duration", &ScenarioConfig::max_duration},
      {"lane", "width", &ScenarioConfig::lane_width},
      {"ego", "x0", &ScenarioConfig::ego_x0},
      {"ego", "y0", &ScenarioConfig::ego_y0},
      {"ego", "psi0", &ScenarioConfig::ego_psi0},
      {"ego", "v0", &ScenarioConfig::ego_v0},
      {"ego", "length", &ScenarioConfig::ego_length},
      {"ego", "width", &ScenarioConfig::ego_width},
      {"ego", "l_r", &ScenarioConfig::ego_l_r},
      {"ego", "alpha_max", &ScenarioConfig::ego_alpha_max},
      {"ego", "beta_max", &ScenarioConfig::ego_beta_max},
      {"ego", "v_min", &ScenarioConfig::ego_v_min},
      {"ego", "v_max", &ScenarioConfig::ego_v_max},
      {"ego", "a_l", &ScenarioConfig::ego_a_l},
      {"front", "x0", &ScenarioConfig::front_x0},
      {"front", "v0", &ScenarioConfig::front_v0},
      {"front", "length", &ScenarioConfig::front_length},
      {"front", "width", &ScenarioConfig::front_width},
      {"front", "policy", &ScenarioConfig::front_policy},
      {"front", "accel_rate", &ScenarioConfig::front_accel_rate},
      {"front", "accel_rate_min", &ScenarioConfig::front_accel_rate_min},
      {"front", "accel_rate_max", &ScenarioConfig::front_accel_rate_max},
      {"front", "accel_window_begin", &ScenarioConfig::front_accel_window_begin},
      {"front", "accel_window_end", &ScenarioConfig::front_accel_window_end},
      {"front", "speed_cap", &ScenarioConfig::front_speed_cap},
      {"opposing", "present", &ScenarioConfig::opp_present},
      {"opposing", "x0", &ScenarioConfig::opp_x0},
      {"opposing", "v0", &ScenarioConfig::opp_v0},
      {"opposing", "v0_min", &ScenarioConfig::opp_v0_min},
      {"opposing", "v0_max", &ScenarioConfig::opp_v0_max},
      {"opposing", "length", &ScenarioConfig::opp_length},
      {"opposing", "width", &ScenarioConfig::opp_width},
      {"opposing", "policy", &ScenarioConfig::opp_policy},
      {"opposing", "accel_rate", &ScenarioConfig::opp_accel_rate},
      {"opposing", "accel_window_begin", &ScenarioConfig::opp_accel_window_begin},
      {"opposing", "accel_window_end", &ScenarioConfig::opp_accel_window_end},
      {"opposing", "speed_cap", &ScenarioConfig::opp_speed_cap},
      {"opposing", "cruise_speed", &ScenarioConfig::opp_cruise_speed},
      {"opposing", "autonomy", &ScenarioConfig::opp_autonomy},
      {"opposing", "a_max", &ScenarioConfig::opp_a_max},
      {"opposing", "v_limit", &ScenarioConfig::opp_v_limit},
      {"opposing", "detect_range", &ScenarioConfig::detect_range},
      {"barrier", "ellipse_a", &ScenarioConfig::ellipse_a},
      {"barrier", "ellipse_b", &ScenarioConfig::ellipse_b},
      {"barrier", "epsilon", &ScenarioConfig::epsilon},
      {"barrier", "lambda_tail", &ScenarioConfig::lambda_tail},
      {"barrier", "lambda_tail_oe", &ScenarioConfig::lambda_tail_oe},
      {"barrier", "a_l", &ScenarioConfig::a_l},
      {"goals", "phi", &ScenarioConfig::phi},
      {"goals", "c", &ScenarioConfig::c},
      {"goals", "half_gap", &ScenarioConfig::half_gap},
      {"goals", "eps_y", &ScenarioConfig::eps_y},
      {"horizon", "n", &ScenarioConfig::horizon_n},
      {"horizon", "t_max", &ScenarioConfig::t_max},
      {"horizon", "dt_min", &ScenarioConfig::dt_min},
      {"noise", "enabled", &ScenarioConfig::noise_enabled},
      {"noise", "pos_far", &ScenarioConfig::noise_pos_far},
      {"noise", "pos_near", &ScenarioConfig::noise_pos_near},
      {"noise", "near_dist", &ScenarioConfig::noise_near_dist},
      {"noise", "vel_rel", &ScenarioConfig::noise_vel_rel},
      {"sim", "substep", &ScenarioConfig::substep},
      {"sim", "opp_sample_hz", &ScenarioConfig::opp_sample_hz},
      {"solver", "feas_tol", &ScenarioConfig::feas_tol},
      {"solver", "opt_tol", &ScenarioConfig::opt_tol},
      {"solver", "iter_limit", &ScenarioConfig::iter_limit},
      {"state_box", "y_min", &ScenarioConfig::box_y_min},
      {"state_box", "y_max", &ScenarioConfig::box_y_max},
      {"state_box", "psi_max", &ScenarioConfig::box_psi_max},
  };
  return defs;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void assign(ScenarioConfig& cfg, const FieldDef& f, const std::string& raw, int line_no) {
  const std::string value = trim(raw);
  auto fail = [&](const char* what) {
    throw ConfigError("config line " + std::to_string(line_no) + ": " + what + " for key '" +
                      f.key + "'");
  };
  if (std::holds_alternative<DblPtr>(f.ref)) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(value, &pos);
      if (pos != value.size()) fail("trailing characters");
      cfg.*std::get<DblPtr>(f.ref) = v;
    } catch (const std::exception&) {
      fail("expected a number");
    }
  } else if (std::holds_alternative<IntPtr>(f.ref)) {
    try {
      std::size_t pos = 0;
      const int v = std::stoi(value, &pos);
      if (pos != value.size()) fail("trailing characters");
      cfg.*std::get<IntPtr>(f.ref) = v;
    } catch (const std::exception&) {
      fail("expected an integer");
    }
  } else if (std::holds_alternative<U64Ptr>(f.ref)) {
    try {
      std::size_t pos = 0;
      const std::uint64_t v = std::stoull(value, &pos);
      if (pos != value.size()) fail("trailing characters");
      cfg.*std::get<U64Ptr>(f.ref) = v;
    } catch (const std::exception&) {
      fail("expected an unsigned integer");
    }
  } else if (std::holds_alternative<BoolPtr>(f.ref)) {
    if (value == "true" || value == "1")
      cfg.*std::get<BoolPtr>(f.ref) = true;
    else if (value == "false" || value == "0")
      cfg.*std::get<BoolPtr>(f.ref) = false;
    else
      fail("expected true/false");
  } else {
    cfg.*std::get<StrPtr>(f.ref) = value;
  }
}

std::string field_to_string(const ScenarioConfig& cfg, const FieldDef& f) {
  if (std::holds_alternative<DblPtr>(f.ref)) return format_double(cfg.*std::get<DblPtr>(f.ref));
  if (std::holds_alternative<IntPtr>(f.ref)) return std::to_string(cfg.*std::get<IntPtr>(f.ref));
  if (std::holds_alternative<U64Ptr>(f.ref)) return std::to_string(cfg.*std::get<U64Ptr>(f.ref));
  if (std::holds_alternative<BoolPtr>(f.ref))
    return cfg.*std::get<BoolPtr>(f.ref) ? "true" : "false";
  return cfg.*std::get<StrPtr>(f.ref);
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = line.substr(eq + 1);
    const FieldDef* found = nullptr;
    for (const FieldDef& f : fields())
      if (section == f.section && key == f.key) {
        found = &f;
        break;
      }
    if (!found)
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + section +
                        "." + key + "'");
    assign(cfg, *found, value, line_no);
  }
  validate_config(cfg);
  return cfg;
}

ScenarioConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ScenarioConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const FieldDef& f : fields()) {
    if (section != f.section) {
      if (!section.empty()) os << "\n";
      section = f.section;
      os << "[" << section << "]\n";
    }
    os << f.key << " = " << field_to_string(cfg, f) << "\n";
  }
  return os.str();
}

std::vector<double> parse_lambda_tail(const std::string& comma_list) {
  std::vector<double> tail;
  std::istringstream in(comma_list);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    tail.push_back(std::stod(tok));
  }
  if (tail.empty()) throw ConfigError("lambda tail must have at least one coefficient");
  return tail;
}

void validate_config(const ScenarioConfig& cfg) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  require(cfg.version == 1, "unsupported config version");
  require(cfg.controller == "vlcbf-dual" || cfg.controller == "mpcdc",
          "controller must be vlcbf-dual or mpcdc");
  require(cfg.trials >= 0, "trials must be >= 0");
  require(cfg.max_duration > 0, "max_duration must be > 0");
  require(cfg.lane_width > 0, "lane width must be > 0");
  require(cfg.ego_v0 >= 0, "ego v0 must be >= 0");
  require(cfg.front_policy == "constant" || cfg.front_policy == "accel",
          "front policy must be constant or accel");
  require(cfg.opp_policy == "constant" || cfg.opp_policy == "accel" ||
              cfg.opp_policy == "vlcbf",
          "opposing policy must be constant, accel or vlcbf");
  require(cfg.opp_autonomy == "autonomous" || cfg.opp_autonomy == "semi",
          "opposing autonomy must be autonomous or semi");
  require(cfg.epsilon >= 0, "epsilon must be >= 0");
  require(cfg.horizon_n >= 2, "horizon n must be >= 2");
  require(cfg.dt_min > 0 && cfg.dt_min < cfg.t_max, "need 0 < dt_min < t_max");
  require(cfg.eps_y > 0, "eps_y must be > 0");
  require(cfg.c > 0, "goal gap c must be > 0");
  require(cfg.ellipse_a > 0.5 * cfg.ego_length, "ellipse_a must clear half the vehicle length");
  require(cfg.ellipse_b > 0.5 * cfg.ego_width, "ellipse_b must clear half the vehicle width");
  require(cfg.a_l > 0, "a_l must be > 0");
  require(cfg.substep > 0, "substep must be > 0");
  require(cfg.opp_sample_hz > 0, "opp_sample_hz must be > 0");
  require(std::abs(cfg.front_accel_rate) <= cfg.ego_a_l + 1e-9 &&
              std::abs(cfg.front_accel_rate_max) <= cfg.ego_a_l + 1e-9,
          "front acceleration must respect the input limit");

  // Rate polynomials must be valid class-Ke tails.
  for (const std::string* s : {&cfg.lambda_tail, &cfg.lambda_tail_oe}) {
    const std::vector<double> tail = parse_lambda_tail(*s);
    bool positive = false;
    for (double v : tail) {
      require(v >= 0, "lambda tail coefficients must be >= 0");
      if (v > 0) positive = true;
    }
    require(positive, "lambda tail needs a positive coefficient");
  }
}

namespace {

KappaPolynomial kappa_from_tail(const std::string& tail_str, double epsilon) {
  const std::vector<double> tail = parse_lambda_tail(tail_str);
  KappaPolynomial k;
  k.lambda.resize(tail.size() + 1);
  k.lambda[0] = 0.0;
  std::copy(tail.begin(), tail.end(), k.lambda.begin() + 1);
  k.lambda[0] = lambda0_for_level(k, LevelSpec{epsilon});
  return k;
}

}  // namespace

EpisodeSetup make_episode_setup(const ScenarioConfig& cfg, int trial_index) {
  EpisodeSetup s;
  s.seed = episode_seed(cfg.master_seed, trial_index);
  s.substep = cfg.substep;
  s.max_duration = cfg.max_duration;
  s.opp_sample_hz = cfg.opp_sample_hz;
  s.detect_range = cfg.detect_range;
  s.lanes = LaneGeometry{cfg.lane_width, 0.0, cfg.lane_width};
  s.noise = NoiseModel{cfg.noise_enabled, cfg.noise_pos_far, cfg.noise_pos_near,
                       cfg.noise_near_dist, cfg.noise_vel_rel};

  s.ego0 = EgoState{cfg.ego_x0, cfg.ego_y0, cfg.ego_psi0, cfg.ego_v0};
  s.ego_params = VehicleParams{cfg.ego_length, cfg.ego_width,    cfg.ego_l_r, cfg.ego_alpha_max,
                               cfg.ego_beta_max, cfg.ego_v_min, cfg.ego_v_max, cfg.ego_a_l};

  // Scenario draws come from their own stream so noise draws never perturb
  // them. Draw order is fixed: front rate, then opposing speed.
  Rng scenario = make_stream(s.seed, RngStream::scenario);
  double front_rate = cfg.front_accel_rate;
  if (cfg.front_accel_rate_max > cfg.front_accel_rate_min)
    front_rate = scenario.uniform(cfg.front_accel_rate_min, cfg.front_accel_rate_max);
  double opp_v0 = cfg.opp_v0;
  if (cfg.opp_v0_max > cfg.opp_v0_min) opp_v0 = scenario.uniform(cfg.opp_v0_min, cfg.opp_v0_max);

  s.front0 = PointState{cfg.front_x0, cfg.front_v0};
  s.front_params = s.ego_params;
  s.front_params.length = cfg.front_length;
  s.front_params.width = cfg.front_width;
  if (cfg.front_policy == "accel") {
    s.front_policy.kind = BehaviorPolicy::Kind::piecewise_accel;
    s.front_policy.accel_rate = front_rate;
    s.front_policy.window_begin = cfg.front_accel_window_begin;
    s.front_policy.window_end = cfg.front_accel_window_end;
    s.front_policy.speed_cap = cfg.front_speed_cap;
  }

  s.has_opposing = cfg.opp_present;
  if (s.has_opposing) {
    s.opp0 = PointState{cfg.opp_x0, opp_v0};
    s.opp_params = s.ego_params;
    s.opp_params.length = cfg.opp_length;
    s.opp_params.width = cfg.opp_width;
    if (cfg.opp_policy == "accel") {
      s.opp_policy.kind = BehaviorPolicy::Kind::piecewise_accel;
      s.opp_policy.accel_rate = cfg.opp_accel_rate;
      s.opp_policy.window_begin = cfg.opp_accel_window_begin;
      s.opp_policy.window_end = cfg.opp_accel_window_end;
      s.opp_policy.speed_cap = cfg.opp_speed_cap;
    } else if (cfg.opp_policy == "vlcbf") {
      s.opp_policy.kind = BehaviorPolicy::Kind::vlcbf_follower;
      s.opp_policy.kappa = kappa_from_tail(cfg.lambda_tail_oe, cfg.epsilon);
      s.opp_policy.a_l = cfg.a_l;
      s.opp_policy.cruise_speed = cfg.opp_cruise_speed;
      s.opp_policy.cruise_gain = 1.0;
    }
  }

  s.log_ellipse = EllipseBarrier::from_axes(cfg.ellipse_a, cfg.ellipse_b);
  s.log_longitudinal = LongitudinalBarrier{cfg.a_l};
  s.log_epsilon = cfg.epsilon;
  return s;
}

FrameworkConfig make_framework_config(const ScenarioConfig& cfg) {
  FrameworkConfig f;
  f.goals = DualGoalsConfig{cfg.phi, cfg.c, cfg.half_gap, cfg.eps_y, 0.0};
  f.horizon = HorizonSpec{cfg.horizon_n, cfg.t_max, cfg.dt_min};
  f.params = VehicleParams{cfg.ego_length, cfg.ego_width,    cfg.ego_l_r, cfg.ego_alpha_max,
                           cfg.ego_beta_max, cfg.ego_v_min, cfg.ego_v_max, cfg.ego_a_l};
  f.state_box = StateBoxSpec{cfg.box_y_min, cfg.box_y_max, -cfg.box_psi_max, cfg.box_psi_max};
  f.front_ellipse = EllipseBarrier::from_axes(cfg.ellipse_a, cfg.ellipse_b);
  f.epsilon = cfg.epsilon;
  {
    const std::vector<double> tail = parse_lambda_tail(cfg.lambda_tail);
    f.kappa_tail.lambda.resize(tail.size() + 1);
    f.kappa_tail.lambda[0] = 0.0;
    std::copy(tail.begin(), tail.end(), f.kappa_tail.lambda.begin() + 1);
  }
  f.longitudinal = LongitudinalBarrier{cfg.a_l};
  f.opposing_assumption.kind = cfg.opp_autonomy == "semi" ? OpposingKind::semi_autonomous
                                                          : OpposingKind::autonomous;
  f.opposing_assumption.kappa_oe = kappa_from_tail(cfg.lambda_tail_oe, cfg.epsilon);
  f.opposing_assumption.a_max = cfg.opp_a_max;
  f.opposing_assumption.v_limit = cfg.opp_v_limit;
  f.solver = nlp::SolverOptions{};
  f.solver.feas_tol = cfg.feas_tol;
  f.solver.opt_tol = cfg.opt_tol;
  f.solver.iter_limit = cfg.iter_limit;
  f.lane_width = cfg.lane_width;
  return f;
}

DcConstraintSpec make_dc_spec(const ScenarioConfig& cfg) {
  return DcConstraintSpec{EllipseBarrier::from_axes(cfg.ellipse_a, cfg.ellipse_b)};
}

}  // namespace ovt
