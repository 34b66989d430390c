#include "aerolabel/stats.hpp"

#include <cmath>
#include <numbers>

#include "aerolabel/error.hpp"

namespace aerolabel {

double ground_resolution(double lat, int z) {
  if (!(std::abs(lat) <= kMaxLatitude)) {
    throw Error(ErrorCode::OutOfProjectionBounds, "latitude outside the Web Mercator domain");
  }
  if (z < 0 || z > kMaxZoom) {
    throw Error(ErrorCode::OutOfProjectionBounds, "zoom outside 0..22");
  }
  return std::cos(lat * std::numbers::pi / 180.0) * 2.0 * std::numbers::pi * kEarthRadiusM /
         world_size(z);
}

double pixel_area_m2(const GeoReference& georef, std::uint32_t width, std::uint32_t height) {
  const Point2 center = apply_affine(georef.transform, {width / 2.0, height / 2.0});
  const double lat = world_px_to_latlon(center, georef.anchor_zoom).lat;
  const double g = ground_resolution(lat, georef.anchor_zoom);
  return std::abs(georef.transform.det()) * g * g;
}

namespace {

void require_total(const ClassMap& class_map, const SegmentMap& segmap) {
  if (!is_total(class_map, segmap)) {
    throw Error(ErrorCode::PartialClassMap, "class map does not cover exactly the registered segments");
  }
}

}  // namespace

ClassStats compute_stats(const SegmentMap& segmap, const ClassMap& class_map,
                         const std::optional<GeoReference>& georef) {
  require_total(class_map, segmap);
  ClassStats stats;
  for (const auto& [id, info] : segmap.registry()) {
    ClassTotals& t = stats.classes[class_map.at(id)];
    ++t.instance_count;
    t.pixel_count += info.pixel_count;
    ++stats.total_instances;
    stats.total_pixels += info.pixel_count;
  }
  stats.unassigned_pixels = segmap.size() - stats.total_pixels;
  if (georef) {
    const double per_pixel = pixel_area_m2(*georef, segmap.width(), segmap.height());
    for (auto& [cls, t] : stats.classes) t.area_m2 = double(t.pixel_count) * per_pixel;
    stats.total_area_m2 = double(stats.total_pixels) * per_pixel;
  }
  return stats;
}

std::map<ClassId, std::uint64_t> class_histogram(const ClassMap& class_map, const SegmentMap& segmap) {
  require_total(class_map, segmap);
  std::map<ClassId, std::uint64_t> hist;
  for (const auto& [id, info] : segmap.registry()) hist[class_map.at(id)] += info.pixel_count;
  return hist;
}

}  // namespace aerolabel
