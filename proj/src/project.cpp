#include "aerolabel/project.hpp"

#include "aerolabel/classification.hpp"
#include "aerolabel/error.hpp"

namespace aerolabel {

void set_image(Project& project, RasterImage image) {
  SegmentMap blank = SegmentMap::unassigned(image.width(), image.height());
  project.image = std::move(image);
  project.segments = std::move(blank);
  project.class_map.clear();
  project.georef.reset();
  project.control_points.clear();
}

void set_segments(Project& project, SegmentMap segments) {
  validate(require_image(project), segments);
  project.class_map = reconcile_class_map(project.class_map, segments);
  project.segments = std::move(segments);
}

const RasterImage& require_image(const Project& project) {
  if (!project.image) throw Error(ErrorCode::InvalidArgument, "project has no image");
  return *project.image;
}

const SegmentMap& require_segments(const Project& project) {
  if (!project.segments) throw Error(ErrorCode::InvalidArgument, "project has no segment map");
  return *project.segments;
}

void check_project(const Project& project) {
  if (project.image.has_value() != project.segments.has_value()) {
    throw Error(ErrorCode::InvalidArgument, "image and segment map must be present together");
  }
  if (project.segments) {
    validate(*project.image, *project.segments);
    if (!is_total(project.class_map, *project.segments)) {
      throw Error(ErrorCode::PartialClassMap, "class map is not total over the registry");
    }
  } else if (!project.class_map.empty()) {
    throw Error(ErrorCode::PartialClassMap, "class map without segments");
  }
  for (const auto& [segment, cls] : project.class_map) {
    if (!project.classes.contains(cls)) {
      throw Error(ErrorCode::UnknownClass, "class " + std::to_string(cls) + " does not exist");
    }
  }
  if (project.georef) make_georeference(project.georef->transform, project.georef->anchor_zoom);
}

}  // namespace aerolabel
