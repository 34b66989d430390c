#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "aerolabel/georef.hpp"
#include "aerolabel/raster.hpp"

namespace aerolabel {

/// Metres of ground per world pixel: cos(lat) * 2 pi R / (256 * 2^z).
double ground_resolution(double lat, int z);

/// Ground area of one image pixel under `georef`, using the ground resolution
/// at the latitude of the image centre for the whole footprint.
double pixel_area_m2(const GeoReference& georef, std::uint32_t width, std::uint32_t height);

struct ClassTotals {
  std::uint64_t instance_count = 0;
  std::uint64_t pixel_count = 0;
  std::optional<double> area_m2;
  bool operator==(const ClassTotals&) const = default;
};

struct ClassStats {
  std::map<ClassId, ClassTotals> classes;
  std::uint64_t total_instances = 0;
  std::uint64_t total_pixels = 0;
  std::uint64_t unassigned_pixels = 0;
  std::optional<double> total_area_m2;
};

/// Throws PartialClassMap when `class_map` is not total over the registry.
ClassStats compute_stats(const SegmentMap& segmap, const ClassMap& class_map,
                         const std::optional<GeoReference>& georef);

std::map<ClassId, std::uint64_t> class_histogram(const ClassMap& class_map, const SegmentMap& segmap);

}  // namespace aerolabel
