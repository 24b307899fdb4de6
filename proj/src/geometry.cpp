#include "ovt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ovt {

namespace {

using Pt = std::array<double, 2>;

double dot(const Pt& a, const Pt& b) { return a[0] * b[0] + a[1] * b[1]; }

Pt sub(const Pt& a, const Pt& b) { return {a[0] - b[0], a[1] - b[1]}; }

double point_segment_distance(const Pt& p, const Pt& a, const Pt& b) {
  const Pt ab = sub(b, a);
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(sub(p, a), ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Pt q{a[0] + t * ab[0], a[1] + t * ab[1]};
  return std::hypot(p[0] - q[0], p[1] - q[1]);
}

}  // namespace

std::array<Pt, 4> obb_corners(const Obb& o) {
  const double c = std::cos(o.heading), s = std::sin(o.heading);
  const double hl = 0.5 * o.length, hw = 0.5 * o.width;
  std::array<Pt, 4> out;
  const double ex[4] = {+hl, +hl, -hl, -hl};
  const double ey[4] = {+hw, -hw, -hw, +hw};
  for (int i = 0; i < 4; ++i)
    out[static_cast<std::size_t>(i)] = {o.cx + c * ex[i] - s * ey[i],
                                        o.cy + s * ex[i] + c * ey[i]};
  return out;
}

double obb_clearance(const Obb& a, const Obb& b) {
  const auto ca = obb_corners(a);
  const auto cb = obb_corners(b);

  // Separating-axis pass over the four face normals. Track the smallest
  // overlap for the penetration depth and whether any axis separates.
  const Pt axes[4] = {{std::cos(a.heading), std::sin(a.heading)},
                      {-std::sin(a.heading), std::cos(a.heading)},
                      {std::cos(b.heading), std::sin(b.heading)},
                      {-std::sin(b.heading), std::cos(b.heading)}};
  bool separated = false;
  double min_overlap = std::numeric_limits<double>::infinity();
  for (const Pt& ax : axes) {
    double alo = std::numeric_limits<double>::infinity(), ahi = -alo;
    double blo = alo, bhi = -alo;
    for (const Pt& p : ca) {
      const double v = dot(p, ax);
      alo = std::min(alo, v);
      ahi = std::max(ahi, v);
    }
    for (const Pt& p : cb) {
      const double v = dot(p, ax);
      blo = std::min(blo, v);
      bhi = std::max(bhi, v);
    }
    const double overlap = std::min(ahi, bhi) - std::max(alo, blo);
    if (overlap < 0.0) separated = true;
    min_overlap = std::min(min_overlap, overlap);
  }
  if (!separated) return -std::max(min_overlap, 0.0);

  // Disjoint: exact distance via vertex-to-edge over both rectangles.
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    const auto& a0 = ca[static_cast<std::size_t>(i)];
    const auto& a1 = ca[static_cast<std::size_t>((i + 1) % 4)];
    for (const Pt& p : cb) d = std::min(d, point_segment_distance(p, a0, a1));
  }
  for (int i = 0; i < 4; ++i) {
    const auto& b0 = cb[static_cast<std::size_t>(i)];
    const auto& b1 = cb[static_cast<std::size_t>((i + 1) % 4)];
    for (const Pt& p : ca) d = std::min(d, point_segment_distance(p, b0, b1));
  }
  return d;
}

}  // namespace ovt
