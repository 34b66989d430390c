#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "json.hpp"

#include "aerolabel/geometry.hpp"
#include "aerolabel/project.hpp"

namespace aerolabel {

inline constexpr std::uint32_t kTilePixels = 256;

/// 256x256 RGBA tile, row-major.
struct OverlayTile {
  std::vector<Rgba8> pixels = std::vector<Rgba8>(kTilePixels * kTilePixels);
  bool operator==(const OverlayTile&) const = default;
};

/// Class-coloured overlay for slippy-map tile (z, x, y). Each tile pixel centre is
/// taken to anchor-zoom world pixels, pulled back through the inverse affine and
/// sampled nearest-neighbour from the segment map. Throws NotGeoreferenced.
OverlayTile render_overlay_tile(const Project& project, int z, std::uint32_t x, std::uint32_t y,
                                std::uint8_t alpha);

/// One outer ring with its holes, in image coordinates (pixel corners).
struct PixelPolygon {
  std::vector<Point2> outer;
  std::vector<std::vector<Point2>> holes;
};

/// Boundary rings of every segment, traced along pixel edges with collinear
/// runs merged. Diagonal-only contacts are kept apart (4-connectivity).
std::map<SegmentId, std::vector<PixelPolygon>> trace_segment_polygons(const SegmentMap& segmap);

/// GeoJSON FeatureCollection, one feature per segment, [lon, lat] order with
/// counter-clockwise exteriors. Throws NotGeoreferenced.
nlohmann::json export_geojson(const Project& project);

}  // namespace aerolabel
