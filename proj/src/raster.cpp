#include "aerolabel/raster.hpp"

#include <algorithm>
#include <set>

#include "aerolabel/error.hpp"

namespace aerolabel {

namespace {

void check_dimensions(std::uint32_t width, std::uint32_t height, std::size_t length) {
  if (width == 0 || height == 0) {
    throw Error(ErrorCode::InvalidArgument, "raster dimensions must be positive");
  }
  if (std::size_t(width) * height != length) {
    throw Error(ErrorCode::DimensionMismatch,
                "raster of " + std::to_string(width) + "x" + std::to_string(height) +
                    " cannot hold " + std::to_string(length) + " values");
  }
}

}  // namespace

RasterImage::RasterImage(std::uint32_t width, std::uint32_t height, std::vector<Rgb8> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  check_dimensions(width_, height_, pixels_.size());
}

RasterImage::RasterImage(std::uint32_t width, std::uint32_t height, Rgb8 fill)
    : width_(width), height_(height) {
  check_dimensions(width_, height_, std::size_t(width) * height);
  pixels_.assign(std::size_t(width) * height, fill);
}

Registry rebuild_registry(std::span<const SegmentId> ids, std::uint32_t width,
                          std::uint32_t height) {
  check_dimensions(width, height, ids.size());
  Registry registry;
  std::size_t i = 0;
  for (std::uint32_t row = 0; row < height; ++row) {
    for (std::uint32_t col = 0; col < width; ++col, ++i) {
      const SegmentId id = ids[i];
      if (id == kUnassigned) continue;
      auto [it, inserted] = registry.try_emplace(id);
      SegmentInfo& info = it->second;
      if (inserted) {
        info.bbox = {col, row, col, row};
      } else {
        info.bbox.min_col = std::min(info.bbox.min_col, col);
        info.bbox.max_col = std::max(info.bbox.max_col, col);
        info.bbox.max_row = row;
      }
      ++info.pixel_count;
    }
  }
  return registry;
}

SegmentMap::SegmentMap(std::uint32_t width, std::uint32_t height, std::vector<SegmentId> ids)
    : width_(width), height_(height), ids_(std::move(ids)) {
  registry_ = rebuild_registry(ids_, width_, height_);
}

SegmentMap::SegmentMap(std::uint32_t width, std::uint32_t height, std::vector<SegmentId> ids,
                       Registry registry)
    : width_(width), height_(height), ids_(std::move(ids)), registry_(std::move(registry)) {
  check_dimensions(width_, height_, ids_.size());
}

SegmentMap SegmentMap::unassigned(std::uint32_t width, std::uint32_t height) {
  return SegmentMap(width, height, std::vector<SegmentId>(std::size_t(width) * height, 0));
}

std::uint64_t SegmentMap::unassigned_count() const {
  std::uint64_t assigned = 0;
  for (const auto& [id, info] : registry_) assigned += info.pixel_count;
  return ids_.size() - assigned;
}

void validate(std::uint32_t width, std::uint32_t height, const SegmentMap& segmap) {
  if (segmap.width() != width || segmap.height() != height) {
    throw Error(ErrorCode::DimensionMismatch,
                "segment map is " + std::to_string(segmap.width()) + "x" +
                    std::to_string(segmap.height()) + ", image is " + std::to_string(width) +
                    "x" + std::to_string(height));
  }
  if (segmap.ids().size() != std::size_t(width) * height) {
    throw Error(ErrorCode::DimensionMismatch, "segment raster length mismatch");
  }
  for (const auto& [id, info] : segmap.registry()) {
    if (id == kUnassigned || info.pixel_count == 0) {
      throw Error(ErrorCode::RegistryInconsistent,
                  "registry holds empty or reserved segment " + std::to_string(id));
    }
  }
  // The derived registry is the ground truth; anything else is inconsistent.
  if (rebuild_registry(segmap.ids(), width, height) != segmap.registry()) {
    throw Error(ErrorCode::RegistryInconsistent, "registry disagrees with the id raster");
  }
}

void validate(const RasterImage& image, const SegmentMap& segmap) {
  validate(image.width(), image.height(), segmap);
}

std::vector<SegmentId> connected_components(std::span<const std::uint8_t> mask,
                                            std::uint32_t width, std::uint32_t height) {
  check_dimensions(width, height, mask.size());
  std::vector<SegmentId> labels(mask.size(), 0);
  std::vector<std::size_t> stack;
  SegmentId next = 1;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || labels[start] != 0) continue;
    labels[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const std::size_t col = p % width;
      const std::size_t row = p / width;
      auto visit = [&](std::size_t q) {
        if (mask[q] && labels[q] == 0) {
          labels[q] = next;
          stack.push_back(q);
        }
      };
      if (col > 0) visit(p - 1);
      if (col + 1 < width) visit(p + 1);
      if (row > 0) visit(p - width);
      if (row + 1 < height) visit(p + width);
    }
    ++next;
  }
  return labels;
}

ClassDef default_class_def() { return {kDefaultClass, "default", {255, 255, 255, 255}}; }

ClassSet::ClassSet() { classes_.push_back(default_class_def()); }

ClassSet::ClassSet(std::vector<ClassDef> classes) {
  std::set<ClassId> seen;
  for (const auto& c : classes) {
    if (c.id == 0) throw Error(ErrorCode::InvalidArgument, "class id 0 is not allowed");
    if (!seen.insert(c.id).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate class id " + std::to_string(c.id));
    }
  }
  if (!seen.count(kDefaultClass)) {
    throw Error(ErrorCode::InvalidArgument, "class set must contain class 1");
  }
  classes_ = std::move(classes);
}

const ClassDef* ClassSet::find(ClassId id) const {
  for (const auto& c : classes_) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

const ClassDef* ClassSet::find_by_name(const std::string& name) const {
  for (const auto& c : classes_) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

ClassId ClassSet::next_id() const {
  ClassId max_id = 0;
  for (const auto& c : classes_) max_id = std::max(max_id, c.id);
  return max_id + 1;
}

void ClassSet::add(ClassDef def) {
  if (def.id == 0) throw Error(ErrorCode::InvalidArgument, "class id 0 is not allowed");
  if (contains(def.id)) {
    throw Error(ErrorCode::InvalidArgument, "duplicate class id " + std::to_string(def.id));
  }
  classes_.push_back(std::move(def));
}

bool is_total(const ClassMap& classes, const SegmentMap& segmap) {
  const Registry& reg = segmap.registry();
  if (classes.size() != reg.size()) return false;
  return std::equal(classes.begin(), classes.end(), reg.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; });
}

}  // namespace aerolabel
