#include "aerolabel/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "aerolabel/error.hpp"

namespace aerolabel {

namespace {

struct GridEdge {
  double weight;
  std::uint32_t a;
  std::uint32_t b;
};

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1), internal_(n, 0.0) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Returns the surviving root. Larger set wins, ties go to the smaller index.
  std::uint32_t unite(std::uint32_t ra, std::uint32_t rb, double weight) {
    if (size_[ra] < size_[rb] || (size_[ra] == size_[rb] && rb < ra)) std::swap(ra, rb);
    parent_[rb] = ra;
    size_[ra] += size_[rb];
    internal_[ra] = std::max({internal_[ra], internal_[rb], weight});
    return ra;
  }

  std::uint32_t size(std::uint32_t root) const { return size_[root]; }
  double internal(std::uint32_t root) const { return internal_[root]; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
  std::vector<double> internal_;
};

double color_distance(const Rgb8& p, const Rgb8& q) {
  const double dr = double(p.r) - q.r;
  const double dg = double(p.g) - q.g;
  const double db = double(p.b) - q.b;
  return std::sqrt(dr * dr + dg * dg + db * db);
}

// Edges come out in (pixel index, right-before-down) order; the stable sort
// keeps that order among equal weights.
std::vector<GridEdge> sorted_grid_edges(const RasterImage& image) {
  const std::uint32_t w = image.width();
  const std::uint32_t h = image.height();
  std::vector<GridEdge> edges;
  edges.reserve(2 * std::size_t(w) * h);
  const auto px = image.pixels();
  for (std::uint32_t row = 0; row < h; ++row) {
    for (std::uint32_t col = 0; col < w; ++col) {
      const std::uint32_t p = row * w + col;
      if (col + 1 < w) edges.push_back({color_distance(px[p], px[p + 1]), p, p + 1});
      if (row + 1 < h) edges.push_back({color_distance(px[p], px[p + w]), p, p + w});
    }
  }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const GridEdge& x, const GridEdge& y) { return x.weight < y.weight; });
  return edges;
}

SegmentId checked_fresh_id(SegmentId max_id) {
  if (max_id == std::numeric_limits<SegmentId>::max()) {
    throw Error(ErrorCode::InvalidArgument, "segment id space exhausted");
  }
  return max_id + 1;
}

// Components of equal non-zero id under 4-adjacency, numbered 1.. in scan order.
std::vector<std::uint32_t> equal_id_components(const SegmentMap& segmap,
                                               std::uint32_t* count) {
  const std::uint32_t w = segmap.width();
  const std::uint32_t h = segmap.height();
  const auto ids = segmap.ids();
  std::vector<std::uint32_t> comp(ids.size(), 0);
  std::vector<std::size_t> stack;
  std::uint32_t next = 1;
  for (std::size_t start = 0; start < ids.size(); ++start) {
    if (ids[start] == kUnassigned || comp[start] != 0) continue;
    const SegmentId id = ids[start];
    comp[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const std::size_t col = p % w;
      const std::size_t row = p / w;
      auto visit = [&](std::size_t q) {
        if (ids[q] == id && comp[q] == 0) {
          comp[q] = next;
          stack.push_back(q);
        }
      };
      if (col > 0) visit(p - 1);
      if (col + 1 < w) visit(p + 1);
      if (row > 0) visit(p - w);
      if (row + 1 < h) visit(p + w);
    }
    ++next;
  }
  *count = next - 1;
  return comp;
}

}  // namespace

SegmentMap segment_auto(const RasterImage& image, const SegmenterParams& params) {
  if (!(params.k >= 0.0) || !std::isfinite(params.k)) {
    throw Error(ErrorCode::InvalidArgument, "merge threshold k must be finite and >= 0");
  }
  if (params.min_region_size < 1) {
    throw Error(ErrorCode::InvalidArgument, "min_region_size must be >= 1");
  }
  const std::size_t n = image.size();
  const std::vector<GridEdge> edges = sorted_grid_edges(image);
  DisjointSets sets(n);

  for (const GridEdge& e : edges) {
    const std::uint32_t ra = sets.find(e.a);
    const std::uint32_t rb = sets.find(e.b);
    if (ra == rb) continue;
    const double tol_a = sets.internal(ra) + params.k / sets.size(ra);
    const double tol_b = sets.internal(rb) + params.k / sets.size(rb);
    if (e.weight <= std::min(tol_a, tol_b)) sets.unite(ra, rb, e.weight);
  }

  // Small regions join across their cheapest remaining edge.
  for (const GridEdge& e : edges) {
    const std::uint32_t ra = sets.find(e.a);
    const std::uint32_t rb = sets.find(e.b);
    if (ra == rb) continue;
    if (sets.size(ra) < params.min_region_size || sets.size(rb) < params.min_region_size) {
      sets.unite(ra, rb, e.weight);
    }
  }

  std::vector<SegmentId> ids(n);
  std::unordered_map<std::uint32_t, SegmentId> label_of_root;
  SegmentId next = 1;
  for (std::size_t p = 0; p < n; ++p) {
    const std::uint32_t root = sets.find(static_cast<std::uint32_t>(p));
    auto [it, inserted] = label_of_root.try_emplace(root, next);
    if (inserted) ++next;
    ids[p] = it->second;
  }
  return SegmentMap(image.width(), image.height(), std::move(ids));
}

SegmentMap ingest_external_mask(std::uint32_t width, std::uint32_t height,
                                std::span<const SegmentId> ids) {
  if (std::size_t(width) * height != ids.size()) {
    throw Error(ErrorCode::DimensionMismatch, "external mask size does not match the image");
  }
  std::unordered_map<SegmentId, SegmentId> relabel;
  std::vector<SegmentId> out(ids.size());
  SegmentId next = 1;
  for (std::size_t p = 0; p < ids.size(); ++p) {
    if (ids[p] == kUnassigned) {
      out[p] = kUnassigned;
      continue;
    }
    auto [it, inserted] = relabel.try_emplace(ids[p], next);
    if (inserted) ++next;
    out[p] = it->second;
  }
  return SegmentMap(width, height, std::move(out));
}

SegmentMap paint(const SegmentMap& segmap, const BrushStroke& stroke) {
  if (stroke.polyline.empty()) {
    throw Error(ErrorCode::InvalidArgument, "brush stroke needs at least one point");
  }
  if (!(stroke.radius > 0.0) || !std::isfinite(stroke.radius)) {
    throw Error(ErrorCode::InvalidArgument, "brush radius must be positive");
  }
  double min_x = stroke.polyline[0].x, max_x = min_x;
  double min_y = stroke.polyline[0].y, max_y = min_y;
  for (const Point2& p : stroke.polyline) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorCode::InvalidArgument, "brush stroke has a non-finite point");
    }
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double r = stroke.radius;
  const double r2 = r * r;
  const std::uint32_t w = segmap.width();
  const std::uint32_t h = segmap.height();
  // Pixel centre col + 0.5 must lie in [min_x - r, max_x + r].
  auto first_index = [](double lo, std::uint32_t limit) -> std::uint32_t {
    const double v = std::floor(lo - kPixelCenterOffset);
    if (v <= 0.0) return 0;
    return v >= limit ? limit : static_cast<std::uint32_t>(v);
  };
  const std::uint32_t col0 = first_index(min_x - r, w);
  const std::uint32_t col1 = std::min<std::uint32_t>(w, first_index(max_x + r, w) + 1);
  const std::uint32_t row0 = first_index(min_y - r, h);
  const std::uint32_t row1 = std::min<std::uint32_t>(h, first_index(max_y + r, h) + 1);

  std::vector<SegmentId> ids(segmap.ids().begin(), segmap.ids().end());
  const auto& line = stroke.polyline;
  for (std::uint32_t row = row0; row < row1; ++row) {
    for (std::uint32_t col = col0; col < col1; ++col) {
      const Point2 c{col + kPixelCenterOffset, row + kPixelCenterOffset};
      bool hit = false;
      if (line.size() == 1) {
        hit = squared_distance_to_segment(c, line[0], line[0]) <= r2;
      }
      for (std::size_t i = 0; !hit && i + 1 < line.size(); ++i) {
        hit = squared_distance_to_segment(c, line[i], line[i + 1]) <= r2;
      }
      if (hit) ids[std::size_t(row) * w + col] = stroke.target;
    }
  }
  return SegmentMap(w, h, std::move(ids));
}

SegmentMap merge_segments(const SegmentMap& segmap, std::span<const SegmentId> ids) {
  if (ids.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "merge needs at least two segment ids");
  }
  std::set<SegmentId> unique(ids.begin(), ids.end());
  if (unique.size() != ids.size()) {
    throw Error(ErrorCode::InvalidArgument, "merge ids must be pairwise distinct");
  }
  for (SegmentId id : unique) {
    if (!segmap.contains(id)) {
      throw Error(ErrorCode::UnknownSegmentId, "segment " + std::to_string(id) + " is not registered");
    }
  }
  const SegmentId keep = *unique.begin();
  std::vector<SegmentId> out(segmap.ids().begin(), segmap.ids().end());
  for (SegmentId& id : out) {
    if (id != kUnassigned && unique.count(id)) id = keep;
  }
  return SegmentMap(segmap.width(), segmap.height(), std::move(out));
}

PolygonEdit create_segment_from_polygon(const SegmentMap& segmap, std::span<const Point2> ring) {
  if (ring.size() < 3) {
    throw Error(ErrorCode::DegeneratePolygon, "polygon needs at least three vertices");
  }
  double min_x = ring[0].x, max_x = min_x, min_y = ring[0].y, max_y = min_y;
  for (const Point2& p : ring) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorCode::InvalidArgument, "polygon has a non-finite vertex");
    }
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double diag2 = (max_x - min_x) * (max_x - min_x) + (max_y - min_y) * (max_y - min_y);
  if (diag2 == 0.0 || std::abs(signed_area(ring)) <= 1e-12 * diag2) {
    throw Error(ErrorCode::DegeneratePolygon, "polygon has zero area");
  }

  const SegmentId fresh = checked_fresh_id(segmap.max_id());
  const std::uint32_t w = segmap.width();
  const std::uint32_t h = segmap.height();
  auto clamp_index = [](double v, std::uint32_t limit) -> std::uint32_t {
    if (v <= 0.0) return 0;
    return v >= limit ? limit : static_cast<std::uint32_t>(v);
  };
  const std::uint32_t col0 = clamp_index(std::floor(min_x - kPixelCenterOffset), w);
  const std::uint32_t col1 = clamp_index(std::ceil(max_x), w);
  const std::uint32_t row0 = clamp_index(std::floor(min_y - kPixelCenterOffset), h);
  const std::uint32_t row1 = clamp_index(std::ceil(max_y), h);

  std::vector<SegmentId> ids(segmap.ids().begin(), segmap.ids().end());
  bool any = false;
  for (std::uint32_t row = row0; row < row1; ++row) {
    for (std::uint32_t col = col0; col < col1; ++col) {
      if (point_in_polygon({col + kPixelCenterOffset, row + kPixelCenterOffset}, ring)) {
        ids[std::size_t(row) * w + col] = fresh;
        any = true;
      }
    }
  }
  return {SegmentMap(w, h, std::move(ids)), any ? fresh : kUnassigned};
}

SegmentMap fill_unassigned(const SegmentMap& segmap) {
  const std::uint32_t w = segmap.width();
  const std::uint32_t h = segmap.height();
  const auto ids = segmap.ids();
  std::vector<std::uint8_t> holes(ids.size());
  for (std::size_t p = 0; p < ids.size(); ++p) holes[p] = ids[p] == kUnassigned;
  const std::vector<SegmentId> region = connected_components(holes, w, h);

  SegmentId region_count = 0;
  for (SegmentId r : region) region_count = std::max(region_count, r);
  if (region_count == 0) return segmap;

  // shared[r] maps neighbour segment -> number of 4-adjacent pixel pairs.
  std::vector<std::map<SegmentId, std::uint64_t>> shared(region_count + 1);
  for (std::size_t p = 0; p < ids.size(); ++p) {
    const SegmentId r = region[p];
    if (r == 0) continue;
    const std::size_t col = p % w;
    const std::size_t row = p / w;
    auto count = [&](std::size_t q) {
      if (ids[q] != kUnassigned) ++shared[r][ids[q]];
    };
    if (col > 0) count(p - 1);
    if (col + 1 < w) count(p + 1);
    if (row > 0) count(p - w);
    if (row + 1 < h) count(p + w);
  }

  std::vector<SegmentId> target(region_count + 1, kUnassigned);
  SegmentId next = segmap.max_id();
  for (SegmentId r = 1; r <= region_count; ++r) {
    if (shared[r].empty()) {
      next = checked_fresh_id(next);
      target[r] = next;
      continue;
    }
    // std::map iterates ascending ids, so strict > keeps the smallest on ties.
    std::uint64_t best = 0;
    for (const auto& [id, len] : shared[r]) {
      if (len > best) {
        best = len;
        target[r] = id;
      }
    }
  }
  std::vector<SegmentId> out(ids.begin(), ids.end());
  for (std::size_t p = 0; p < out.size(); ++p) {
    if (region[p] != 0) out[p] = target[region[p]];
  }
  return SegmentMap(w, h, std::move(out));
}

SegmentMap split_disconnected(const SegmentMap& segmap) {
  std::uint32_t count = 0;
  const std::vector<std::uint32_t> comp = equal_id_components(segmap, &count);
  const auto ids = segmap.ids();
  std::vector<SegmentId> comp_label(count + 1, kUnassigned);
  std::set<SegmentId> claimed;
  SegmentId next = segmap.max_id();
  for (std::size_t p = 0; p < ids.size(); ++p) {
    const std::uint32_t c = comp[p];
    if (c == 0 || comp_label[c] != kUnassigned) continue;
    if (claimed.insert(ids[p]).second) {
      comp_label[c] = ids[p];
    } else {
      next = checked_fresh_id(next);
      comp_label[c] = next;
    }
  }
  std::vector<SegmentId> out(ids.size());
  for (std::size_t p = 0; p < ids.size(); ++p) out[p] = comp_label[comp[p]];
  return SegmentMap(segmap.width(), segmap.height(), std::move(out));
}

bool segments_are_connected(const SegmentMap& segmap) {
  std::uint32_t count = 0;
  equal_id_components(segmap, &count);
  return count == segmap.registry().size();
}

}  // namespace aerolabel
