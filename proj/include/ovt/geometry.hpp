#pragma once

#include <array>

namespace ovt {

/// Oriented bounding rectangle in the road plane.
struct Obb {
  double cx = 0.0;
  double cy = 0.0;
  double heading = 0.0;  // rad
  double length = 4.885;
  double width = 1.840;
};

/// Signed clearance between two rectangles: the Euclidean gap when disjoint,
/// minus the penetration depth when overlapping. Zero exactly at first touch.
double obb_clearance(const Obb& a, const Obb& b);

inline bool obb_overlap(const Obb& a, const Obb& b) { return obb_clearance(a, b) <= 0.0; }

std::array<std::array<double, 2>, 4> obb_corners(const Obb& o);

}  // namespace ovt
