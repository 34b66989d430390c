#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "aerolabel/raster.hpp"

namespace aerolabel {

/// Row-major n x d feature table, one row per segment.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  /// Throws DimensionMismatch, NonFiniteFeature or InvalidArgument (empty, duplicate ids).
  FeatureMatrix(std::vector<SegmentId> segment_ids, std::size_t dims, std::vector<double> values);

  std::size_t rows() const { return segment_ids_.size(); }
  std::size_t dims() const { return dims_; }
  const std::vector<SegmentId>& segment_ids() const { return segment_ids_; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dims_, dims_};
  }
  std::span<const double> values() const { return values_; }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::vector<SegmentId> segment_ids_;
  std::size_t dims_ = 0;
  std::vector<double> values_;
};

inline constexpr std::size_t kHistogramBins = 64;
inline constexpr std::size_t kDescriptorDims = 3 + kHistogramBins + 2;

/// Built-in descriptor per registered segment, in registry order:
/// mean RGB in [0,1], 4x4x4 joint RGB histogram (L1-normalised),
/// log10(pixels)/log10(W*H), and compactness 4*pi*area/perimeter^2 in (0,1].
FeatureMatrix extract_features(const RasterImage& image, const SegmentMap& segmap);

/// Checks ids against the registry before storing the table verbatim.
FeatureMatrix ingest_external_features(const SegmentMap& segmap,
                                       std::vector<SegmentId> segment_ids,
                                       std::vector<std::vector<double>> vectors);

/// Z-score each column; constant columns become zero.
FeatureMatrix standardize(const FeatureMatrix& features);

struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  std::size_t node = 0;
  bool operator==(const Merge&) const = default;
};

/// Leaves are 0..n-1 (feature rows); merge i creates node n+i.
struct Dendrogram {
  std::size_t leaves = 0;
  std::vector<Merge> merges;
};

/// Full average-linkage agglomeration. At every step the pair with the lowest
/// mean pairwise Euclidean distance merges; ties go to the lexicographically
/// smallest (min leaf of left, min leaf of right), where `left` is the side
/// holding the smaller leaf.
Dendrogram average_linkage(const FeatureMatrix& features);

struct ClusterStop {
  static ClusterStop clusters(std::size_t k) { return {k, std::nullopt}; }
  static ClusterStop threshold(double t) { return {std::nullopt, t}; }
  std::optional<std::size_t> k;
  std::optional<double> t;
};

struct Clustering {
  Dendrogram dendrogram;
  /// Cluster index per segment, numbered by smallest contained segment id.
  std::map<SegmentId, std::size_t> assignment;
  std::size_t cluster_count = 0;
};

Clustering cluster(const FeatureMatrix& features, ClusterStop stop);

/// Cut a dendrogram after its first `applied` merges.
std::map<SegmentId, std::size_t> cut_dendrogram(const Dendrogram& dendrogram,
                                                const std::vector<SegmentId>& segment_ids,
                                                std::size_t applied);

using SeedLabels = std::map<SegmentId, ClassId>;

struct Classification {
  ClassMap class_map;
  ClassSet class_set;
};

/// Golden-angle hue sequence at full saturation and value, opaque.
Rgba8 palette_color(std::size_t index);

/// Turns clusters into classes. Without seeds each cluster i becomes class
/// "cluster-i" (reused when a class of that name exists). Seeded clusters take
/// their majority seed class; seedless ones take the class of the nearest
/// seeded centroid when `propagate` is set.
Classification assign_classes(const Clustering& clustering, const FeatureMatrix& features,
                              const SegmentMap& segmap, const ClassSet& class_set,
                              const SeedLabels& seeds, bool propagate);

ClassMap default_classification(const SegmentMap& segmap);

ClassMap set_class(const ClassMap& class_map, const SegmentMap& segmap, const ClassSet& class_set,
                   SegmentId segment, ClassId class_id);

/// Drops entries for vanished segments and gives new segments the default class.
ClassMap reconcile_class_map(const ClassMap& class_map, const SegmentMap& segmap);

}  // namespace aerolabel
