#include "ovt/episode_log.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

namespace ovt {

namespace {

constexpr const char* kLogVersion = "ovt-episode-log v1";
constexpr const char* kMetricsVersion = "ovt-episode-metrics v1";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

EpisodePhase phase_from_string(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(EpisodePhase::timeout); ++i)
    if (to_string(static_cast<EpisodePhase>(i)) == s) return static_cast<EpisodePhase>(i);
  return EpisodePhase::fault;
}

}  // namespace

void write_episode_csv(const TrajectoryLog& log, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write log: " + path);
  const EpisodeSetup& s = log.setup;
  os << "# " << kLogVersion << "\n";
  os << "# seed = " << log.seed << "\n";
  os << "# final_phase = " << to_string(log.final_phase) << "\n";
  os << "# substep = " << fmt(s.substep) << "\n";
  os << "# has_opposing = " << (s.has_opposing ? 1 : 0) << "\n";
  os << "# ego_length = " << fmt(s.ego_params.length) << "\n";
  os << "# ego_width = " << fmt(s.ego_params.width) << "\n";
  os << "# ego_l_r = " << fmt(s.ego_params.l_r) << "\n";
  os << "# front_length = " << fmt(s.front_params.length) << "\n";
  os << "# front_width = " << fmt(s.front_params.width) << "\n";
  os << "# opp_length = " << fmt(s.opp_params.length) << "\n";
  os << "# opp_width = " << fmt(s.opp_params.width) << "\n";
  os << "# lane_width = " << fmt(s.lanes.width) << "\n";
  os << "# lane_ego_y = " << fmt(s.lanes.ego_center_y) << "\n";
  os << "# lane_opp_y = " << fmt(s.lanes.opp_center_y) << "\n";
  os << "# ellipse_a = " << fmt(s.log_ellipse.semi_axis_a()) << "\n";
  os << "# ellipse_b = " << fmt(s.log_ellipse.semi_axis_b()) << "\n";
  os << "# a_l = " << fmt(s.log_longitudinal.a_l) << "\n";
  os << "# epsilon = " << fmt(s.log_epsilon) << "\n";
  os << "# config-begin\n";
  {
    std::istringstream cfg(log.config_text);
    std::string line;
    while (std::getline(cfg, line)) os << "# " << line << "\n";
  }
  os << "# config-end\n";
  os << "t,ego_x,ego_y,ego_psi,ego_v,front_x,front_v,opp_x,opp_v,alpha,beta,phase,h_ef,h_eo,"
        "clearance_front,clearance_opp\n";
  for (const LogRow& r : log.rows) {
    os << fmt(r.t) << ',' << fmt(r.ego_x) << ',' << fmt(r.ego_y) << ',' << fmt(r.ego_psi) << ','
       << fmt(r.ego_v) << ',' << fmt(r.front_x) << ',' << fmt(r.front_v) << ',' << fmt(r.opp_x)
       << ',' << fmt(r.opp_v) << ',' << fmt(r.alpha) << ',' << fmt(r.beta) << ',' << r.phase
       << ',' << fmt(r.h_ef) << ',' << fmt(r.h_eo) << ',' << fmt(r.clearance_front) << ','
       << fmt(r.clearance_opp) << "\n";
  }
}

TrajectoryLog read_episode_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read log: " + path);
  TrajectoryLog log;
  std::map<std::string, std::string> header;
  std::string line;
  bool version_seen = false;
  bool in_config = false;
  std::ostringstream config_text;
  bool columns_seen = false;

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("# ", 0) == 0 || line == "#") {
      std::string body = line.size() > 2 ? line.substr(2) : "";
      if (body == kLogVersion) {
        version_seen = true;
        continue;
      }
      if (body == "config-begin") {
        in_config = true;
        continue;
      }
      if (body == "config-end") {
        in_config = false;
        continue;
      }
      if (in_config) {
        config_text << body << "\n";
        continue;
      }
      const std::size_t eq = body.find('=');
      if (eq != std::string::npos) {
        std::string k = body.substr(0, eq);
        std::string v = body.substr(eq + 1);
        while (!k.empty() && k.back() == ' ') k.pop_back();
        while (!v.empty() && v.front() == ' ') v.erase(v.begin());
        header[k] = v;
      }
      continue;
    }
    if (!columns_seen) {  // column header line
      columns_seen = true;
      continue;
    }
    LogRow r;
    double phase_val = 0;
    std::array<double*, 16> cols = {&r.t,     &r.ego_x,  &r.ego_y, &r.ego_psi,
                                    &r.ego_v, &r.front_x, &r.front_v, &r.opp_x,
                                    &r.opp_v, &r.alpha,  &r.beta,  &phase_val,
                                    &r.h_ef,  &r.h_eo,   &r.clearance_front, &r.clearance_opp};
    std::istringstream ls(line);
    std::string tok;
    for (double* dst : cols) {
      if (!std::getline(ls, tok, ','))
        throw std::runtime_error("log row with missing columns: " + path);
      *dst = std::strtod(tok.c_str(), nullptr);
    }
    r.phase = static_cast<int>(phase_val);
    log.rows.push_back(r);
  }
  if (!version_seen) throw std::runtime_error("not an episode log (missing version line)");

  log.config_text = config_text.str();
  auto get = [&](const char* k, double dflt) {
    auto it = header.find(k);
    return it == header.end() ? dflt : std::strtod(it->second.c_str(), nullptr);
  };
  log.seed = header.count("seed") ? std::strtoull(header["seed"].c_str(), nullptr, 10) : 0;
  log.final_phase =
      header.count("final_phase") ? phase_from_string(header["final_phase"]) : EpisodePhase::fault;
  EpisodeSetup& s = log.setup;
  s.seed = log.seed;
  s.substep = get("substep", 1e-3);
  s.has_opposing = get("has_opposing", 0) != 0;
  s.ego_params.length = get("ego_length", 4.885);
  s.ego_params.width = get("ego_width", 1.84);
  s.ego_params.l_r = get("ego_l_r", 1.4);
  s.front_params.length = get("front_length", 4.885);
  s.front_params.width = get("front_width", 1.84);
  s.opp_params.length = get("opp_length", 4.885);
  s.opp_params.width = get("opp_width", 1.84);
  s.lanes.width = get("lane_width", 3.5);
  s.lanes.ego_center_y = get("lane_ego_y", 0.0);
  s.lanes.opp_center_y = get("lane_opp_y", 3.5);
  s.log_ellipse = EllipseBarrier::from_axes(get("ellipse_a", 7.0), get("ellipse_b", 3.0));
  s.log_longitudinal.a_l = get("a_l", 8.0);
  s.log_epsilon = get("epsilon", 0.3);
  if (!log.rows.empty()) {
    s.ego0 = EgoState{log.rows[0].ego_x, log.rows[0].ego_y, log.rows[0].ego_psi,
                      log.rows[0].ego_v};
    s.front0 = PointState{log.rows[0].front_x, log.rows[0].front_v};
    if (s.has_opposing) s.opp0 = PointState{log.rows[0].opp_x, log.rows[0].opp_v};
  }
  log.metrics = compute_metrics(log);
  return log;
}

void write_episode_metrics(const TrajectoryLog& log, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write metrics: " + path);
  const EpisodeMetrics& m = log.metrics;
  os << kMetricsVersion << "\n";
  os << "seed = " << log.seed << "\n";
  os << "final_phase = " << to_string(log.final_phase) << "\n";
  os << "success = " << (m.success ? 1 : 0) << "\n";
  os << "safe = " << (m.safe ? 1 : 0) << "\n";
  os << "collision = " << (m.collision ? 1 : 0) << "\n";
  os << "declined = " << (m.declined ? 1 : 0) << "\n";
  os << "fault = " << (m.fault ? 1 : 0) << "\n";
  os << "timeout = " << (m.timeout ? 1 : 0) << "\n";
  os << "duration = " << fmt(m.duration) << "\n";
  os << "min_clearance_front = " << fmt(m.min_clearance_front) << "\n";
  os << "min_clearance_opp = " << fmt(m.min_clearance_opp) << "\n";
  os << "min_h_ef = " << fmt(m.min_h_ef) << "\n";
  os << "min_h_eo = " << fmt(m.min_h_eo) << "\n";
  os << "controller_iterations = " << m.controller_iterations << "\n";
  for (const std::string& e : log.events) os << "event = " << e << "\n";
}

EpisodeMetrics read_episode_metrics(const std::string& path, EpisodePhase* phase,
                                    std::uint64_t* seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read metrics: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsVersion)
    throw std::runtime_error("not a metrics file: " + path);
  EpisodeMetrics m;
  while (std::getline(in, line)) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string k = line.substr(0, eq);
    std::string v = line.substr(eq + 1);
    while (!k.empty() && k.back() == ' ') k.pop_back();
    while (!v.empty() && v.front() == ' ') v.erase(v.begin());
    if (k == "seed" && seed) *seed = std::strtoull(v.c_str(), nullptr, 10);
    else if (k == "final_phase" && phase) *phase = phase_from_string(v);
    else if (k == "success") m.success = v == "1";
    else if (k == "safe") m.safe = v == "1";
    else if (k == "collision") m.collision = v == "1";
    else if (k == "declined") m.declined = v == "1";
    else if (k == "fault") m.fault = v == "1";
    else if (k == "timeout") m.timeout = v == "1";
    else if (k == "duration") m.duration = std::strtod(v.c_str(), nullptr);
    else if (k == "min_clearance_front") m.min_clearance_front = std::strtod(v.c_str(), nullptr);
    else if (k == "min_clearance_opp") m.min_clearance_opp = std::strtod(v.c_str(), nullptr);
    else if (k == "min_h_ef") m.min_h_ef = std::strtod(v.c_str(), nullptr);
    else if (k == "min_h_eo") m.min_h_eo = std::strtod(v.c_str(), nullptr);
    else if (k == "controller_iterations") m.controller_iterations = std::atoi(v.c_str());
  }
  return m;
}

ReplayReport replay_episode(const TrajectoryLog& log, double tol) {
  ReplayReport rep;
  if (log.rows.size() < 2) {
    rep.ok = true;
    rep.metrics = compute_metrics(log);
    return rep;
  }
  const double dt = log.setup.substep;
  EgoState ego{log.rows[0].ego_x, log.rows[0].ego_y, log.rows[0].ego_psi, log.rows[0].ego_v};
  PointState front{log.rows[0].front_x, log.rows[0].front_v};
  PointState opp{log.rows[0].opp_x, log.rows[0].opp_v};
  const bool has_opp = log.setup.has_opposing;

  for (std::size_t k = 1; k < log.rows.size(); ++k) {
    const LogRow& r = log.rows[k];
    ego = plant_step_ego(ego, EgoInput{r.alpha, r.beta}, log.setup.ego_params, dt);
    front = step_rk4(front, PointInput{(r.front_v - front.v) / dt}, dt);
    if (has_opp) opp = step_rk4(opp, PointInput{(r.opp_v - opp.v) / dt}, dt);

    double err = std::max({std::abs(ego.x - r.ego_x), std::abs(ego.y - r.ego_y),
                           std::abs(ego.psi - r.ego_psi), std::abs(ego.v - r.ego_v),
                           std::abs(front.x - r.front_x), std::abs(front.v - r.front_v)});
    if (has_opp)
      err = std::max({err, std::abs(opp.x - r.opp_x), std::abs(opp.v - r.opp_v)});
    if (!(err <= tol)) {
      rep.ok = false;
      rep.first_bad_row = static_cast<long>(k);
      std::ostringstream msg;
      msg << "replay mismatch at row " << k << " (t=" << r.t << "): max deviation " << err;
      rep.message = msg.str();
      return rep;
    }
    // Keep the logged states as the reference trajectory to avoid tolerance
    // accumulation over long horizons.
    ego = EgoState{r.ego_x, r.ego_y, r.ego_psi, r.ego_v};
    front = PointState{r.front_x, r.front_v};
    if (has_opp) opp = PointState{r.opp_x, r.opp_v};
  }
  rep.ok = true;
  rep.metrics = compute_metrics(log);
  return rep;
}

ReplayReport replay_episode_file(const std::string& path, double tol) {
  return replay_episode(read_episode_csv(path), tol);
}

}  // namespace ovt
