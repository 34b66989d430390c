#pragma once

#include <span>
#include <vector>

#include "aerolabel/geometry.hpp"
#include "aerolabel/raster.hpp"

namespace aerolabel {

struct SegmenterParams {
  /// Region-growth tolerance on the 0-255 colour scale.
  double k = 500.0;
  std::uint32_t min_region_size = 16;
  bool operator==(const SegmenterParams&) const = default;
};

/// Graph-based region merging over the 4-connected pixel grid, followed by
/// absorption of regions smaller than `min_region_size`. Every pixel ends up in
/// a 4-connected segment; ids are 1..n in raster-scan order of first pixel.
SegmentMap segment_auto(const RasterImage& image, const SegmenterParams& params);

/// Relabels an externally produced id raster to 1..n by first occurrence.
/// Zero stays unassigned.
SegmentMap ingest_external_mask(std::uint32_t width, std::uint32_t height,
                                std::span<const SegmentId> ids);

struct BrushStroke {
  std::vector<Point2> polyline;
  double radius = 1.0;
  SegmentId target = kUnassigned;
};

/// Reassigns every pixel whose centre is within `radius` of the polyline.
SegmentMap paint(const SegmentMap& segmap, const BrushStroke& stroke);

/// All listed segments collapse into the smallest listed id.
SegmentMap merge_segments(const SegmentMap& segmap, std::span<const SegmentId> ids);

struct PolygonEdit {
  SegmentMap segmap;
  /// 0 when the polygon covered no pixel centre.
  SegmentId new_id = kUnassigned;
};

/// Pixels whose centres lie inside `ring` (even-odd) move to a fresh segment.
PolygonEdit create_segment_from_polygon(const SegmentMap& segmap, std::span<const Point2> ring);

/// Absorbs each 4-connected hole into the neighbour sharing the longest boundary
/// (ties to the smaller id); isolated holes become fresh segments.
SegmentMap fill_unassigned(const SegmentMap& segmap);

/// Gives every 4-connected piece of a segment its own id. The piece containing
/// the segment's first pixel keeps the original id; the rest get fresh ids.
SegmentMap split_disconnected(const SegmentMap& segmap);

/// True when every registered segment forms a single 4-connected region.
bool segments_are_connected(const SegmentMap& segmap);

}  // namespace aerolabel
