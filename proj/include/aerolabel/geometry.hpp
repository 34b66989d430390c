#pragma once

#include <span>

namespace aerolabel {

/// Continuous image or world coordinates. Pixel (col, row) has its centre at
/// (col + 0.5, row + 0.5).
struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

inline constexpr double kPixelCenterOffset = 0.5;

double squared_distance_to_segment(Point2 p, Point2 a, Point2 b);

/// Even-odd rule. Points exactly on an edge follow the half-open crossing test.
bool point_in_polygon(Point2 p, std::span<const Point2> ring);

/// Signed shoelace area; positive when the ring runs counter-clockwise in a
/// y-up frame.
double signed_area(std::span<const Point2> ring);

}  // namespace aerolabel
