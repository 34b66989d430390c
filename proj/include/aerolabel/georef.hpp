#pragma once

#include <span>
#include <vector>

#include "aerolabel/geometry.hpp"

namespace aerolabel {

inline constexpr double kMaxLatitude = 85.05112878;
inline constexpr double kTileSize = 256.0;
inline constexpr int kMaxZoom = 22;
inline constexpr double kEarthRadiusM = 6378137.0;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
  bool operator==(const LatLon&) const = default;
};

/// Side of the world-pixel square at zoom `z`: 256 * 2^z.
double world_size(int z);

/// Spherical Web Mercator, origin at the top-left of the projection square.
/// Throws OutOfProjectionBounds.
Point2 latlon_to_world_px(LatLon geo, int z);
LatLon world_px_to_latlon(Point2 world, int z);

/// (x, y) -> (a x + b y + c, d x + e y + f)
struct AffineTransform {
  double a = 1.0, b = 0.0, c = 0.0;
  double d = 0.0, e = 1.0, f = 0.0;

  static AffineTransform identity() { return {}; }
  double det() const { return a * e - b * d; }
  bool operator==(const AffineTransform&) const = default;
};

Point2 apply_affine(const AffineTransform& t, Point2 p);
/// Throws SingularTransform.
AffineTransform invert_affine(const AffineTransform& t);
/// Applies `first`, then `second`.
AffineTransform compose(const AffineTransform& second, const AffineTransform& first);

struct ControlPointPair {
  Point2 image;
  LatLon geo;
  bool operator==(const ControlPointPair&) const = default;
};

/// Image pixels -> world pixels at `anchor_zoom`.
struct GeoReference {
  AffineTransform transform;
  int anchor_zoom = 18;
  bool operator==(const GeoReference&) const = default;
};

inline constexpr int kDefaultAnchorZoom = 18;

/// Fits image -> world-pixel correspondences. Exactly three pairs are solved
/// exactly; more pairs use least squares. Throws DegenerateControlPoints when the
/// image points are (near) collinear and SingularTransform when the fitted
/// linear part collapses.
AffineTransform estimate_affine(std::span<const Point2> image_points,
                                std::span<const Point2> world_points);

/// Same fit with geographic targets converted to world pixels at `anchor_zoom`.
GeoReference estimate_affine(std::span<const ControlPointPair> pairs,
                             int anchor_zoom = kDefaultAnchorZoom);

/// Throws SingularTransform or OutOfProjectionBounds (zoom outside 0..22).
GeoReference make_georeference(const AffineTransform& transform, int anchor_zoom);

}  // namespace aerolabel
