#include "aerolabel/overlay.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "aerolabel/error.hpp"
#include "aerolabel/stats.hpp"

namespace aerolabel {

namespace {

const GeoReference& require_georef(const Project& project) {
  if (!project.georef) throw Error(ErrorCode::NotGeoreferenced, "project has no georeference");
  return *project.georef;
}

// Slack in image pixels for the tile cull; far above accumulated rounding.
constexpr double kCullMargin = 1e-3;

}  // namespace

OverlayTile render_overlay_tile(const Project& project, int z, std::uint32_t x, std::uint32_t y,
                                std::uint8_t alpha) {
  const GeoReference& georef = require_georef(project);
  const SegmentMap& segmap = require_segments(project);
  if (z < 0 || z > kMaxZoom) {
    throw Error(ErrorCode::OutOfProjectionBounds, "zoom outside 0..22");
  }
  const std::uint64_t tiles_per_side = std::uint64_t{1} << z;
  if (x >= tiles_per_side || y >= tiles_per_side) {
    throw Error(ErrorCode::OutOfProjectionBounds, "tile index outside the zoom level");
  }

  OverlayTile tile;
  const AffineTransform inv = invert_affine(georef.transform);
  const double scale = std::ldexp(1.0, georef.anchor_zoom - z);
  const double origin_x = double(x) * kTilePixels;
  const double origin_y = double(y) * kTilePixels;

  // Cull tiles whose pulled-back parallelogram misses the image.
  {
    double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
    double min_y = min_x, max_y = -min_x;
    for (double cy : {origin_y, origin_y + kTilePixels}) {
      for (double cx : {origin_x, origin_x + kTilePixels}) {
        const Point2 p = apply_affine(inv, {cx * scale, cy * scale});
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
      }
    }
    if (max_x < -kCullMargin || min_x > segmap.width() + kCullMargin ||
        max_y < -kCullMargin || min_y > segmap.height() + kCullMargin) {
      return tile;
    }
  }

  // Colour lookup per segment, resolved once.
  std::unordered_map<SegmentId, Rgba8> color_of;
  color_of.reserve(segmap.registry().size());
  for (const auto& [id, info] : segmap.registry()) {
    auto it = project.class_map.find(id);
    if (it == project.class_map.end()) continue;
    if (const ClassDef* def = project.classes.find(it->second)) {
      color_of[id] = {def->color.r, def->color.g, def->color.b, alpha};
    }
  }

  const double w = segmap.width();
  const double h = segmap.height();
  for (std::uint32_t j = 0; j < kTilePixels; ++j) {
    for (std::uint32_t i = 0; i < kTilePixels; ++i) {
      const Point2 world{(origin_x + i + kPixelCenterOffset) * scale,
                         (origin_y + j + kPixelCenterOffset) * scale};
      const Point2 img = apply_affine(inv, world);
      const double col = std::floor(img.x);
      const double row = std::floor(img.y);
      if (!(col >= 0.0 && col < w && row >= 0.0 && row < h)) continue;
      const SegmentId id = segmap.at(static_cast<std::uint32_t>(col), static_cast<std::uint32_t>(row));
      if (id == kUnassigned) continue;
      auto it = color_of.find(id);
      if (it != color_of.end()) tile.pixels[std::size_t(j) * kTilePixels + i] = it->second;
    }
  }
  return tile;
}

namespace {

// Directions in image coordinates (y down): east, south, west, north.
constexpr std::array<int, 4> kDx{1, 0, -1, 0};
constexpr std::array<int, 4> kDy{0, 1, 0, -1};

struct BoundaryEdge {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint8_t dir = 0;
};

std::uint64_t vertex_key(std::uint32_t x, std::uint32_t y) {
  return (std::uint64_t{y} << 32) | x;
}

struct TracedRing {
  std::vector<Point2> vertices;
  Point2 left_probe;  // pixel centre just left of the first edge
  double area = 0.0;
};

// Each segment's interior lies to the right of its edges, so outer rings come
// out with positive shoelace area and holes negative. At pinch vertices the
// walk prefers the right turn, which keeps diagonal neighbours apart.
std::vector<TracedRing> trace_rings(const std::vector<BoundaryEdge>& edges) {
  std::unordered_map<std::uint64_t, std::array<std::int64_t, 4>> outgoing;
  outgoing.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    auto [it, inserted] = outgoing.try_emplace(vertex_key(edges[i].x, edges[i].y));
    if (inserted) it->second.fill(-1);
    it->second[edges[i].dir] = static_cast<std::int64_t>(i);
  }
  std::vector<char> used(edges.size(), 0);
  std::vector<TracedRing> rings;
  for (std::size_t start = 0; start < edges.size(); ++start) {
    if (used[start]) continue;
    TracedRing ring;
    std::vector<std::uint8_t> dirs;
    std::size_t cur = start;
    used[start] = 1;
    const BoundaryEdge& first = edges[start];
    ring.left_probe = {first.x + 0.5 * kDx[first.dir] + 0.5 * kDx[(first.dir + 3) % 4],
                       first.y + 0.5 * kDy[first.dir] + 0.5 * kDy[(first.dir + 3) % 4]};
    while (true) {
      const BoundaryEdge& e = edges[cur];
      ring.vertices.push_back({double(e.x), double(e.y)});
      dirs.push_back(e.dir);
      const std::uint32_t vx = static_cast<std::uint32_t>(std::int64_t(e.x) + kDx[e.dir]);
      const std::uint32_t vy = static_cast<std::uint32_t>(std::int64_t(e.y) + kDy[e.dir]);
      const auto& out = outgoing.at(vertex_key(vx, vy));
      std::int64_t next = -1;
      for (int turn : {1, 0, 3}) {
        const std::int64_t cand = out[(e.dir + turn) % 4];
        if (cand >= 0 && (!used[cand] || std::size_t(cand) == start)) {
          next = cand;
          break;
        }
      }
      if (next < 0) throw Error(ErrorCode::InvalidArgument, "boundary walk failed to close");
      if (std::size_t(next) == start) break;
      used[next] = 1;
      cur = std::size_t(next);
    }
    // Drop vertices that continue straight on.
    std::vector<Point2> merged;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      const std::uint8_t prev = dirs[(i + dirs.size() - 1) % dirs.size()];
      if (dirs[i] != prev) merged.push_back(ring.vertices[i]);
    }
    ring.vertices = std::move(merged);
    ring.area = signed_area(ring.vertices);
    rings.push_back(std::move(ring));
  }
  return rings;
}

}  // namespace

std::map<SegmentId, std::vector<PixelPolygon>> trace_segment_polygons(const SegmentMap& segmap) {
  const std::uint32_t w = segmap.width();
  const std::uint32_t h = segmap.height();
  std::unordered_map<SegmentId, std::vector<BoundaryEdge>> edges;
  for (std::uint32_t row = 0; row < h; ++row) {
    for (std::uint32_t col = 0; col < w; ++col) {
      const SegmentId s = segmap.at(col, row);
      if (s == kUnassigned) continue;
      auto& list = edges[s];
      if (row == 0 || segmap.at(col, row - 1) != s) list.push_back({col, row, 0});
      if (col + 1 == w || segmap.at(col + 1, row) != s) list.push_back({col + 1, row, 1});
      if (row + 1 == h || segmap.at(col, row + 1) != s) list.push_back({col + 1, row + 1, 2});
      if (col == 0 || segmap.at(col - 1, row) != s) list.push_back({col, row + 1, 3});
    }
  }

  std::map<SegmentId, std::vector<PixelPolygon>> out;
  for (const auto& [id, info] : segmap.registry()) {
    std::vector<TracedRing> rings = trace_rings(edges.at(id));
    std::vector<PixelPolygon> polys;
    std::vector<double> outer_area;
    for (TracedRing& r : rings) {
      if (r.area > 0.0) {
        polys.push_back({std::move(r.vertices), {}});
        outer_area.push_back(r.area);
      }
    }
    for (TracedRing& r : rings) {
      if (r.area > 0.0) continue;
      // The innermost outer ring around the hole owns it.
      std::size_t owner = polys.size();
      for (std::size_t i = 0; i < polys.size(); ++i) {
        if (point_in_polygon(r.left_probe, polys[i].outer) &&
            (owner == polys.size() || outer_area[i] < outer_area[owner])) {
          owner = i;
        }
      }
      if (owner == polys.size()) throw Error(ErrorCode::InvalidArgument, "hole without an outer ring");
      polys[owner].holes.push_back(std::move(r.vertices));
    }
    out.emplace(id, std::move(polys));
  }
  return out;
}

nlohmann::json export_geojson(const Project& project) {
  const GeoReference& georef = require_georef(project);
  const SegmentMap& segmap = require_segments(project);
  const double area_per_pixel = pixel_area_m2(georef, segmap.width(), segmap.height());

  auto to_geo_ring = [&](const std::vector<Point2>& ring, bool exterior) {
    std::vector<Point2> lonlat;
    lonlat.reserve(ring.size() + 1);
    for (const Point2& p : ring) {
      const LatLon g = world_px_to_latlon(apply_affine(georef.transform, p), georef.anchor_zoom);
      lonlat.push_back({g.lon, g.lat});
    }
    const double area = signed_area(lonlat);
    if ((exterior && area < 0.0) || (!exterior && area > 0.0)) {
      std::reverse(lonlat.begin(), lonlat.end());
    }
    nlohmann::json coords = nlohmann::json::array();
    for (const Point2& p : lonlat) coords.push_back({p.x, p.y});
    coords.push_back(coords.front());
    return coords;
  };

  nlohmann::json features = nlohmann::json::array();
  for (const auto& [id, polygons] : trace_segment_polygons(segmap)) {
    std::vector<nlohmann::json> parts;
    for (const PixelPolygon& poly : polygons) {
      nlohmann::json rings = nlohmann::json::array();
      rings.push_back(to_geo_ring(poly.outer, true));
      for (const auto& hole : poly.holes) rings.push_back(to_geo_ring(hole, false));
      parts.push_back(std::move(rings));
    }
    nlohmann::json geometry;
    if (parts.size() == 1) {
      geometry = {{"type", "Polygon"}, {"coordinates", parts.front()}};
    } else {
      geometry = {{"type", "MultiPolygon"}, {"coordinates", parts}};
    }
    const SegmentInfo& info = segmap.registry().at(id);
    nlohmann::json props;
    props["segment_id"] = id;
    auto cls = project.class_map.find(id);
    if (cls != project.class_map.end()) {
      props["class_id"] = cls->second;
      const ClassDef* def = project.classes.find(cls->second);
      props["class_name"] = def ? def->name : "";
    } else {
      props["class_id"] = nullptr;
      props["class_name"] = nullptr;
    }
    props["pixel_count"] = info.pixel_count;
    props["area_m2"] = double(info.pixel_count) * area_per_pixel;
    features.push_back({{"type", "Feature"}, {"geometry", geometry}, {"properties", props}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

}  // namespace aerolabel
