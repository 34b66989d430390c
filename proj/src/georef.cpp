#include "aerolabel/georef.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "aerolabel/error.hpp"

namespace aerolabel {

namespace {

constexpr double kDegenerateAreaTol = 1e-9;
constexpr double kSingularTol = 1e-12;

void check_zoom(int z) {
  if (z < 0 || z > kMaxZoom) {
    throw Error(ErrorCode::OutOfProjectionBounds, "zoom " + std::to_string(z) + " outside 0..22");
  }
}

double cross(Point2 o, Point2 p, Point2 q) {
  return (p.x - o.x) * (q.y - o.y) - (p.y - o.y) * (q.x - o.x);
}

Point2 centroid(std::span<const Point2> pts) {
  Point2 m;
  for (const Point2& p : pts) {
    m.x += p.x;
    m.y += p.y;
  }
  m.x /= double(pts.size());
  m.y /= double(pts.size());
  return m;
}

double mean_spread(std::span<const Point2> pts, Point2 center) {
  double s = 0.0;
  for (const Point2& p : pts) s += std::hypot(p.x - center.x, p.y - center.y);
  return s / double(pts.size());
}

// Twice the largest triangle area spanned by the farthest pair and any third
// point, compared against the squared bounding-box diagonal.
void check_not_collinear(std::span<const Point2> pts) {
  double min_x = pts[0].x, max_x = min_x, min_y = pts[0].y, max_y = min_y;
  for (const Point2& p : pts) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double diag2 = (max_x - min_x) * (max_x - min_x) + (max_y - min_y) * (max_y - min_y);
  std::size_t ia = 0, ib = 0;
  double far2 = -1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double dx = pts[j].x - pts[i].x;
      const double dy = pts[j].y - pts[i].y;
      if (dx * dx + dy * dy > far2) {
        far2 = dx * dx + dy * dy;
        ia = i;
        ib = j;
      }
    }
  }
  double twice_area = 0.0;
  for (const Point2& p : pts) twice_area = std::max(twice_area, std::abs(cross(pts[ia], pts[ib], p)));
  if (diag2 == 0.0 || twice_area <= kDegenerateAreaTol * diag2) {
    throw Error(ErrorCode::DegenerateControlPoints, "control points are collinear");
  }
}

}  // namespace

double world_size(int z) { return std::ldexp(kTileSize, z); }

Point2 latlon_to_world_px(LatLon geo, int z) {
  check_zoom(z);
  if (!(std::abs(geo.lat) <= kMaxLatitude) || !(geo.lon >= -180.0 && geo.lon <= 180.0)) {
    throw Error(ErrorCode::OutOfProjectionBounds, "coordinate outside the Web Mercator domain");
  }
  const double size = world_size(z);
  const double phi = geo.lat * std::numbers::pi / 180.0;
  const double x = (geo.lon + 180.0) / 360.0 * size;
  const double y = (1.0 - std::log(std::tan(phi) + 1.0 / std::cos(phi)) / std::numbers::pi) / 2.0 * size;
  return {x, y};
}

LatLon world_px_to_latlon(Point2 world, int z) {
  check_zoom(z);
  const double size = world_size(z);
  if (!(world.x >= 0.0 && world.x <= size) || !(world.y >= 0.0 && world.y <= size)) {
    throw Error(ErrorCode::OutOfProjectionBounds, "world pixel outside the projection square");
  }
  const double lon = world.x / size * 360.0 - 180.0;
  const double n = std::numbers::pi * (1.0 - 2.0 * world.y / size);
  const double lat = std::atan(std::sinh(n)) * 180.0 / std::numbers::pi;
  return {lat, lon};
}

Point2 apply_affine(const AffineTransform& t, Point2 p) {
  return {t.a * p.x + t.b * p.y + t.c, t.d * p.x + t.e * p.y + t.f};
}

AffineTransform invert_affine(const AffineTransform& t) {
  const double det = t.det();
  const double scale = std::max(std::abs(t.a * t.e), std::abs(t.b * t.d));
  if (!std::isfinite(det) || det == 0.0 || std::abs(det) <= kSingularTol * scale) {
    throw Error(ErrorCode::SingularTransform, "affine transform is not invertible");
  }
  AffineTransform inv;
  inv.a = t.e / det;
  inv.b = -t.b / det;
  inv.d = -t.d / det;
  inv.e = t.a / det;
  inv.c = -(inv.a * t.c + inv.b * t.f);
  inv.f = -(inv.d * t.c + inv.e * t.f);
  return inv;
}

AffineTransform compose(const AffineTransform& second, const AffineTransform& first) {
  AffineTransform r;
  r.a = second.a * first.a + second.b * first.d;
  r.b = second.a * first.b + second.b * first.e;
  r.c = second.a * first.c + second.b * first.f + second.c;
  r.d = second.d * first.a + second.e * first.d;
  r.e = second.d * first.b + second.e * first.e;
  r.f = second.d * first.c + second.e * first.f + second.f;
  return r;
}

AffineTransform estimate_affine(std::span<const Point2> image_points,
                                std::span<const Point2> world_points) {
  if (image_points.size() != world_points.size()) {
    throw Error(ErrorCode::InvalidArgument, "control point lists differ in length");
  }
  if (image_points.size() < 3) {
    throw Error(ErrorCode::DegenerateControlPoints, "at least three control points are required");
  }
  for (std::size_t i = 0; i < image_points.size(); ++i) {
    if (!std::isfinite(image_points[i].x) || !std::isfinite(image_points[i].y) ||
        !std::isfinite(world_points[i].x) || !std::isfinite(world_points[i].y)) {
      throw Error(ErrorCode::InvalidArgument, "control point is not finite");
    }
  }
  check_not_collinear(image_points);

  AffineTransform t;
  if (image_points.size() == 3) {
    // Differences against the first pair remove the translation; the remaining
    // 2x2 system is solved exactly for each output row.
    const Point2 p0 = image_points[0], p1 = image_points[1], p2 = image_points[2];
    const Point2 q0 = world_points[0], q1 = world_points[1], q2 = world_points[2];
    const double m11 = p1.x - p0.x, m12 = p1.y - p0.y;
    const double m21 = p2.x - p0.x, m22 = p2.y - p0.y;
    const double det = m11 * m22 - m12 * m21;
    const double u1 = q1.x - q0.x, u2 = q2.x - q0.x;
    const double v1 = q1.y - q0.y, v2 = q2.y - q0.y;
    t.a = (u1 * m22 - m12 * u2) / det;
    t.b = (m11 * u2 - u1 * m21) / det;
    t.d = (v1 * m22 - m12 * v2) / det;
    t.e = (m11 * v2 - v1 * m21) / det;
    t.c = q0.x - (t.a * p0.x + t.b * p0.y);
    t.f = q0.y - (t.d * p0.x + t.e * p0.y);
  } else {
    // Centred normal equations: the translation decouples from the linear part.
    const Point2 pm = centroid(image_points);
    const Point2 qm = centroid(world_points);
    double sxx = 0, sxy = 0, syy = 0, ux = 0, uy = 0, vx = 0, vy = 0;
    for (std::size_t i = 0; i < image_points.size(); ++i) {
      const double x = image_points[i].x - pm.x;
      const double y = image_points[i].y - pm.y;
      const double u = world_points[i].x - qm.x;
      const double v = world_points[i].y - qm.y;
      sxx += x * x;
      sxy += x * y;
      syy += y * y;
      ux += u * x;
      uy += u * y;
      vx += v * x;
      vy += v * y;
    }
    const double det = sxx * syy - sxy * sxy;
    if (!(det > kDegenerateAreaTol * kDegenerateAreaTol * (sxx + syy) * (sxx + syy))) {
      throw Error(ErrorCode::DegenerateControlPoints, "normal equations are rank deficient");
    }
    t.a = (ux * syy - uy * sxy) / det;
    t.b = (uy * sxx - ux * sxy) / det;
    t.d = (vx * syy - vy * sxy) / det;
    t.e = (vy * sxx - vx * sxy) / det;
    t.c = qm.x - (t.a * pm.x + t.b * pm.y);
    t.f = qm.y - (t.d * pm.x + t.e * pm.y);
  }

  const double src = mean_spread(image_points, centroid(image_points));
  const double dst = mean_spread(world_points, centroid(world_points));
  const double scale = dst / src;
  if (!std::isfinite(t.det()) || std::abs(t.det()) <= kSingularTol * scale * scale) {
    throw Error(ErrorCode::SingularTransform, "fitted transform is singular");
  }
  return t;
}

GeoReference estimate_affine(std::span<const ControlPointPair> pairs, int anchor_zoom) {
  check_zoom(anchor_zoom);
  std::vector<Point2> image;
  std::vector<Point2> world;
  image.reserve(pairs.size());
  world.reserve(pairs.size());
  for (const ControlPointPair& pair : pairs) {
    image.push_back(pair.image);
    world.push_back(latlon_to_world_px(pair.geo, anchor_zoom));
  }
  return {estimate_affine(image, world), anchor_zoom};
}

GeoReference make_georeference(const AffineTransform& transform, int anchor_zoom) {
  check_zoom(anchor_zoom);
  invert_affine(transform);
  return {transform, anchor_zoom};
}

}  // namespace aerolabel
