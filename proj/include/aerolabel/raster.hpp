#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aerolabel {

using SegmentId = std::uint32_t;
using ClassId = std::uint32_t;

inline constexpr SegmentId kUnassigned = 0;
inline constexpr ClassId kDefaultClass = 1;

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb8&) const = default;
};

struct Rgba8 {
  std::uint8_t r = 0, g = 0, b = 0, a = 0;
  bool operator==(const Rgba8&) const = default;
};

/// RGB8 raster, row-major. Dimensions are always at least 1x1.
class RasterImage {
 public:
  RasterImage(std::uint32_t width, std::uint32_t height, std::vector<Rgb8> pixels);
  RasterImage(std::uint32_t width, std::uint32_t height, Rgb8 fill = {});

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  std::span<const Rgb8> pixels() const { return pixels_; }

  const Rgb8& at(std::uint32_t col, std::uint32_t row) const {
    return pixels_[std::size_t(row) * width_ + col];
  }
  Rgb8& at(std::uint32_t col, std::uint32_t row) {
    return pixels_[std::size_t(row) * width_ + col];
  }

  bool operator==(const RasterImage&) const = default;

 private:
  std::uint32_t width_;
  std::uint32_t height_;
  std::vector<Rgb8> pixels_;
};

struct BoundingBox {
  std::uint32_t min_col = 0, min_row = 0, max_col = 0, max_row = 0;
  bool operator==(const BoundingBox&) const = default;
};

struct SegmentInfo {
  std::uint64_t pixel_count = 0;
  BoundingBox bbox;
  bool operator==(const SegmentInfo&) const = default;
};

using Registry = std::map<SegmentId, SegmentInfo>;

/// Single pass over an id raster. Id 0 is never registered.
Registry rebuild_registry(std::span<const SegmentId> ids, std::uint32_t width,
                          std::uint32_t height);

/// Per-pixel segment ids (0 = unassigned) plus the registry of live segments.
///
/// The three-argument constructor derives the registry and is the normal way to
/// build one. The four-argument constructor stores the registry as given so that
/// externally supplied data can be checked with validate().
class SegmentMap {
 public:
  SegmentMap() = default;
  SegmentMap(std::uint32_t width, std::uint32_t height, std::vector<SegmentId> ids);
  SegmentMap(std::uint32_t width, std::uint32_t height, std::vector<SegmentId> ids,
             Registry registry);

  static SegmentMap unassigned(std::uint32_t width, std::uint32_t height);

  std::uint32_t width() const { return width_; }
  std::uint32_t height() const { return height_; }
  std::size_t size() const { return ids_.size(); }
  std::span<const SegmentId> ids() const { return ids_; }
  const Registry& registry() const { return registry_; }

  SegmentId at(std::uint32_t col, std::uint32_t row) const {
    return ids_[std::size_t(row) * width_ + col];
  }
  bool contains(SegmentId id) const { return id != kUnassigned && registry_.count(id) > 0; }
  SegmentId max_id() const { return registry_.empty() ? 0 : registry_.rbegin()->first; }
  std::uint64_t unassigned_count() const;

  bool operator==(const SegmentMap&) const = default;

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<SegmentId> ids_;
  Registry registry_;
};

/// Throws Error(DimensionMismatch) or Error(RegistryInconsistent).
void validate(std::uint32_t width, std::uint32_t height, const SegmentMap& segmap);
void validate(const RasterImage& image, const SegmentMap& segmap);

/// Labels maximal 4-connected runs of non-zero mask pixels 1, 2, ... in raster-scan
/// order of each component's first pixel. Background stays 0.
std::vector<SegmentId> connected_components(std::span<const std::uint8_t> mask,
                                            std::uint32_t width, std::uint32_t height);

struct ClassDef {
  ClassId id = 0;
  std::string name;
  Rgba8 color;
  bool operator==(const ClassDef&) const = default;
};

/// Ordered class definitions. Class 1 ("default", opaque white) is always present.
class ClassSet {
 public:
  ClassSet();
  explicit ClassSet(std::vector<ClassDef> classes);

  const std::vector<ClassDef>& classes() const { return classes_; }
  bool contains(ClassId id) const { return find(id) != nullptr; }
  const ClassDef* find(ClassId id) const;
  const ClassDef* find_by_name(const std::string& name) const;
  ClassId next_id() const;

  /// Throws InvalidArgument on a duplicate or zero id.
  void add(ClassDef def);

  bool operator==(const ClassSet&) const = default;

 private:
  std::vector<ClassDef> classes_;
};

ClassDef default_class_def();

using ClassMap = std::map<SegmentId, ClassId>;

/// True when the key set of `classes` equals the registry key set.
bool is_total(const ClassMap& classes, const SegmentMap& segmap);

}  // namespace aerolabel
