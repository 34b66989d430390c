#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aerolabel/georef.hpp"
#include "aerolabel/raster.hpp"
#include "aerolabel/segmentation.hpp"

namespace aerolabel {

inline constexpr int kFormatVersion = 1;

struct ClusterParams {
  std::optional<std::size_t> k = 2;
  std::optional<double> t;
  bool propagate = true;
  bool standardize = false;
  bool operator==(const ClusterParams&) const = default;
};

struct JobRecord {
  std::string job_id;
  std::string kind;
  std::string status;
  std::string detail;
  bool operator==(const JobRecord&) const = default;
};

/// Everything persisted for one labeling session. `image` and `segments` are
/// either both present (same dimensions) or both absent, and `class_map` is
/// total over the segment registry.
struct Project {
  std::string id;
  std::string name;
  std::int64_t created = 0;
  std::int64_t modified = 0;
  std::optional<RasterImage> image;
  std::optional<SegmentMap> segments;
  ClassSet classes;
  ClassMap class_map;
  std::optional<GeoReference> georef;
  std::vector<ControlPointPair> control_points;
  SegmenterParams segmenter;
  ClusterParams clustering;
  std::vector<JobRecord> jobs;

  bool operator==(const Project&) const = default;
};

/// Replaces the image and resets the segment map to all-unassigned.
void set_image(Project& project, RasterImage image);

/// Installs a new segment map (validated against the image) and carries class
/// assignments over for surviving segments.
void set_segments(Project& project, SegmentMap segments);

const RasterImage& require_image(const Project& project);
const SegmentMap& require_segments(const Project& project);

/// Throws Error(InvalidArgument/PartialClassMap/UnknownClass/...) on any broken invariant.
void check_project(const Project& project);

}  // namespace aerolabel
