#include "ovt/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ovt/geometry.hpp"

namespace ovt {

namespace {

struct Mapper {
  double x0, x1;      // world x range
  double px_w, px_h;  // panel pixels
  double y_top_world = 7.0, y_bot_world = -3.0;
  double off_y = 0.0;

  double X(double wx) const { return (wx - x0) / (x1 - x0) * px_w; }
  double Y(double wy) const {
    return off_y + (y_top_world - wy) / (y_top_world - y_bot_world) * px_h;
  }
};

void polyline(std::ostream& os, const std::string& color, const std::string& pts, double w,
              const char* dash = nullptr) {
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << w << "\"";
  if (dash) os << " stroke-dasharray=\"" << dash << "\"";
  os << " points=\"" << pts << "\"/>\n";
}

void rect_poly(std::ostream& os, const Mapper& m, const Obb& o, const std::string& color) {
  const auto c = obb_corners(o);
  std::ostringstream pts;
  for (int i = 0; i < 5; ++i) {
    const auto& p = c[static_cast<std::size_t>(i % 4)];
    pts << m.X(p[0]) << ',' << m.Y(p[1]) << ' ';
  }
  os << "<polyline fill=\"" << color << "\" fill-opacity=\"0.25\" stroke=\"" << color
     << "\" stroke-width=\"1\" points=\"" << pts.str() << "\"/>\n";
}

}  // namespace

void write_episode_svg(const TrajectoryLog& log, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write svg: " + path);
  const auto& rows = log.rows;
  const double W = 1000, H_road = 220, H_strip = 160, pad = 40;
  const double H = H_road + H_strip + 3 * pad;

  double xmin = 1e30, xmax = -1e30, tmax = 1e-9;
  for (const LogRow& r : rows) {
    xmin = std::min({xmin, r.ego_x, r.front_x});
    xmax = std::max({xmax, r.ego_x, r.front_x});
    if (std::isfinite(r.opp_x)) {
      xmin = std::min(xmin, r.opp_x);
      xmax = std::max(xmax, r.opp_x);
    }
    tmax = std::max(tmax, r.t);
  }
  if (rows.empty()) {
    xmin = 0;
    xmax = 1;
  }
  Mapper m{xmin - 10, xmax + 10, W, H_road};
  m.off_y = pad;

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W + 2 * pad << "\" height=\"" << H
     << "\" viewBox=\"" << -pad << " 0 " << W + 2 * pad << " " << H << "\">\n";
  os << "<rect x=\"" << -pad << "\" y=\"0\" width=\"" << W + 2 * pad << "\" height=\"" << H
     << "\" fill=\"white\"/>\n";

  // Lane bands and boundaries.
  const double half = 0.5 * log.setup.lanes.width;
  const double lane_edges[3] = {log.setup.lanes.ego_center_y - half,
                                log.setup.lanes.ego_center_y + half,
                                log.setup.lanes.opp_center_y + half};
  os << "<rect x=\"0\" y=\"" << m.Y(lane_edges[2]) << "\" width=\"" << W << "\" height=\""
     << m.Y(lane_edges[0]) - m.Y(lane_edges[2]) << "\" fill=\"#f2f2f2\"/>\n";
  for (double e : lane_edges) {
    std::ostringstream pts;
    pts << m.X(m.x0) << ',' << m.Y(e) << ' ' << m.X(m.x1) << ',' << m.Y(e);
    polyline(os, "#888888", pts.str(), 1.0, e == lane_edges[1] ? "8,6" : nullptr);
  }

  // Executed trajectories.
  std::ostringstream ego_pts, front_pts, opp_pts;
  bool any_opp = false;
  for (const LogRow& r : rows) {
    ego_pts << m.X(r.ego_x) << ',' << m.Y(r.ego_y) << ' ';
    front_pts << m.X(r.front_x) << ',' << m.Y(log.setup.lanes.ego_center_y) << ' ';
    if (std::isfinite(r.opp_x)) {
      opp_pts << m.X(r.opp_x) << ',' << m.Y(log.setup.lanes.opp_center_y) << ' ';
      any_opp = true;
    }
  }
  polyline(os, "black", ego_pts.str(), 1.6);
  polyline(os, "#cc3333", front_pts.str(), 0.8, "2,4");
  if (any_opp) polyline(os, "#3355cc", opp_pts.str(), 0.8, "2,4");

  // Vehicle rectangles at key frames (about every second).
  const std::size_t stride =
      rows.empty() ? 1 : std::max<std::size_t>(1, rows.size() / std::max(1.0, tmax));
  for (std::size_t k = 0; k < rows.size(); k += stride) {
    const LogRow& r = rows[k];
    rect_poly(os, m,
              Obb{r.ego_x, r.ego_y, r.ego_psi, log.setup.ego_params.length,
                  log.setup.ego_params.width},
              "#118833");
    rect_poly(os, m,
              Obb{r.front_x, log.setup.lanes.ego_center_y, 0.0, log.setup.front_params.length,
                  log.setup.front_params.width},
              "#cc3333");
    if (std::isfinite(r.opp_x))
      rect_poly(os, m,
                Obb{r.opp_x, log.setup.lanes.opp_center_y, 0.0, log.setup.opp_params.length,
                    log.setup.opp_params.width},
                "#3355cc");
  }
  os << "<text x=\"4\" y=\"" << pad - 10 << "\" font-size=\"13\">seed " << log.seed << "  "
     << to_string(log.final_phase) << "</text>\n";

  // h / clearance strip.
  const double strip_top = H_road + 2 * pad;
  double hmax = 1.0, hmin = 0.0;
  for (const LogRow& r : rows) {
    if (std::isfinite(r.h_ef)) {
      hmax = std::max(hmax, r.h_ef);
      hmin = std::min(hmin, r.h_ef);
    }
    if (std::isfinite(r.clearance_front)) hmax = std::max(hmax, r.clearance_front);
  }
  auto SX = [&](double t) { return t / tmax * W; };
  auto SY = [&](double v) {
    return strip_top + (hmax - v) / std::max(1e-9, hmax - hmin) * H_strip;
  };
  std::ostringstream h_pts, cl_pts, zero_pts, eps_pts;
  for (const LogRow& r : rows) {
    if (std::isfinite(r.h_ef)) h_pts << SX(r.t) << ',' << SY(r.h_ef) << ' ';
    if (std::isfinite(r.clearance_front)) cl_pts << SX(r.t) << ',' << SY(r.clearance_front) << ' ';
  }
  zero_pts << SX(0) << ',' << SY(0) << ' ' << SX(tmax) << ',' << SY(0);
  eps_pts << SX(0) << ',' << SY(log.setup.log_epsilon) << ' ' << SX(tmax) << ','
          << SY(log.setup.log_epsilon);
  polyline(os, "#bbbbbb", zero_pts.str(), 1.0);
  polyline(os, "#88aa88", eps_pts.str(), 1.0, "4,4");
  polyline(os, "#118833", h_pts.str(), 1.4);
  polyline(os, "#cc8833", cl_pts.str(), 1.2, "6,3");
  os << "<text x=\"4\" y=\"" << strip_top - 8
     << "\" font-size=\"12\">h_ef (green), front clearance (orange), level (dashed)</text>\n";
  os << "</svg>\n";
}

}  // namespace ovt
