#include "aerolabel/classification.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <unordered_map>

#include "aerolabel/error.hpp"

namespace aerolabel {

FeatureMatrix::FeatureMatrix(std::vector<SegmentId> segment_ids, std::size_t dims,
                             std::vector<double> values)
    : segment_ids_(std::move(segment_ids)), dims_(dims), values_(std::move(values)) {
  if (segment_ids_.empty()) throw Error(ErrorCode::InvalidArgument, "feature matrix has no rows");
  if (dims_ == 0) throw Error(ErrorCode::InvalidArgument, "feature dimension must be positive");
  if (values_.size() != segment_ids_.size() * dims_) {
    throw Error(ErrorCode::DimensionMismatch, "feature values do not fill rows x dims");
  }
  std::set<SegmentId> seen;
  for (SegmentId id : segment_ids_) {
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate segment id " + std::to_string(id));
    }
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteFeature, "feature value is not finite");
  }
}

FeatureMatrix extract_features(const RasterImage& image, const SegmentMap& segmap) {
  validate(image, segmap);
  const Registry& registry = segmap.registry();
  if (registry.empty()) throw Error(ErrorCode::EmptyRegistry, "no segments to describe");

  struct Accumulator {
    std::array<double, 3> sum{};
    std::array<std::uint64_t, kHistogramBins> hist{};
    std::uint64_t perimeter = 0;
  };
  std::unordered_map<SegmentId, Accumulator> acc;
  acc.reserve(registry.size());

  const std::uint32_t w = image.width();
  const std::uint32_t h = image.height();
  const auto ids = segmap.ids();
  const auto px = image.pixels();
  for (std::uint32_t row = 0; row < h; ++row) {
    for (std::uint32_t col = 0; col < w; ++col) {
      const std::size_t p = std::size_t(row) * w + col;
      const SegmentId id = ids[p];
      if (id == kUnassigned) continue;
      Accumulator& a = acc[id];
      const Rgb8 c = px[p];
      a.sum[0] += c.r;
      a.sum[1] += c.g;
      a.sum[2] += c.b;
      ++a.hist[(c.r / 64) * 16 + (c.g / 64) * 4 + (c.b / 64)];
      a.perimeter += (col == 0 || ids[p - 1] != id);
      a.perimeter += (col + 1 == w || ids[p + 1] != id);
      a.perimeter += (row == 0 || ids[p - w] != id);
      a.perimeter += (row + 1 == h || ids[p + w] != id);
    }
  }

  const double log_total = std::log10(double(w) * h);
  std::vector<SegmentId> order;
  std::vector<double> values;
  order.reserve(registry.size());
  values.reserve(registry.size() * kDescriptorDims);
  for (const auto& [id, info] : registry) {
    const Accumulator& a = acc.at(id);
    const double count = double(info.pixel_count);
    order.push_back(id);
    for (double s : a.sum) values.push_back(s / count / 255.0);
    for (std::uint64_t bin : a.hist) values.push_back(double(bin) / count);
    values.push_back(log_total > 0.0 ? std::log10(count) / log_total : 1.0);
    const double perim = double(a.perimeter);
    values.push_back(std::min(1.0, 4.0 * std::numbers::pi * count / (perim * perim)));
  }
  return FeatureMatrix(std::move(order), kDescriptorDims, std::move(values));
}

FeatureMatrix ingest_external_features(const SegmentMap& segmap,
                                       std::vector<SegmentId> segment_ids,
                                       std::vector<std::vector<double>> vectors) {
  if (segment_ids.size() != vectors.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(segment_ids.size()) + " ids but " + std::to_string(vectors.size()) +
                    " feature rows");
  }
  if (vectors.empty()) throw Error(ErrorCode::DimensionMismatch, "no feature rows");
  for (SegmentId id : segment_ids) {
    if (!segmap.contains(id)) {
      throw Error(ErrorCode::UnknownSegmentId, "segment " + std::to_string(id) + " is not registered");
    }
  }
  const std::size_t dims = vectors.front().size();
  std::vector<double> values;
  values.reserve(dims * vectors.size());
  for (const auto& v : vectors) {
    if (v.size() != dims) throw Error(ErrorCode::DimensionMismatch, "ragged feature rows");
    for (double x : v) {
      if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteFeature, "feature value is not finite");
    }
    values.insert(values.end(), v.begin(), v.end());
  }
  return FeatureMatrix(std::move(segment_ids), dims, std::move(values));
}

FeatureMatrix standardize(const FeatureMatrix& features) {
  const std::size_t n = features.rows();
  const std::size_t d = features.dims();
  std::vector<double> out(features.values().begin(), features.values().end());
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += out[r * d + c];
    mean /= double(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (out[r * d + c] - mean) * (out[r * d + c] - mean);
    const double sd = std::sqrt(var / double(n));
    for (std::size_t r = 0; r < n; ++r) {
      out[r * d + c] = sd > 0.0 ? (out[r * d + c] - mean) / sd : 0.0;
    }
  }
  return FeatureMatrix(features.segment_ids(), d, std::move(out));
}

namespace {

double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

// Slots are indexed by leaf. A merged cluster lives in the slot of its smaller
// leaf, so a slot index is always the cluster's minimum leaf and the tie-break
// reduces to comparing slot indices. `sum` holds summed pairwise leaf distances;
// the average linkage height is sum / (|A| |B|). Each slot caches its best
// partner among higher slots.
Dendrogram average_linkage(const FeatureMatrix& features) {
  const std::size_t n = features.rows();
  Dendrogram dendro;
  dendro.leaves = n;
  if (n < 2) return dendro;
  dendro.merges.reserve(n - 1);

  std::vector<double> sum(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = euclidean(features.row(i), features.row(j));
      sum[i * n + j] = d;
      sum[j * n + i] = d;
    }
  }
  std::vector<double> size(n, 1.0);
  std::vector<std::size_t> node(n);
  std::iota(node.begin(), node.end(), std::size_t{0});
  std::vector<char> active(n, 1);
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> best(n, kNone);
  std::vector<double> best_height(n, std::numeric_limits<double>::infinity());

  auto height = [&](std::size_t i, std::size_t j) { return sum[i * n + j] / (size[i] * size[j]); };
  auto refresh = [&](std::size_t i) {
    best[i] = kNone;
    best_height[i] = std::numeric_limits<double>::infinity();
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!active[j]) continue;
      const double hij = height(i, j);
      if (best[i] == kNone || hij < best_height[i]) {
        best[i] = j;
        best_height[i] = hij;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t a = kNone;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || best[i] == kNone) continue;
      if (a == kNone || best_height[i] < best_height[a]) a = i;
    }
    const std::size_t b = best[a];
    const double merged_height = best_height[a];
    dendro.merges.push_back({node[a], node[b], merged_height, n + step});

    active[b] = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a) continue;
      sum[a * n + k] += sum[b * n + k];
      sum[k * n + a] = sum[a * n + k];
    }
    size[a] += size[b];
    node[a] = n + step;

    for (std::size_t p = 0; p < n; ++p) {
      if (!active[p] || p == a) continue;
      if (best[p] == a || best[p] == b) {
        refresh(p);
      } else if (p < a) {
        const double hpa = height(p, a);
        if (hpa < best_height[p] || (hpa == best_height[p] && a < best[p])) {
          best[p] = a;
          best_height[p] = hpa;
        }
      }
    }
    refresh(a);
  }
  return dendro;
}

std::map<SegmentId, std::size_t> cut_dendrogram(const Dendrogram& dendrogram,
                                                const std::vector<SegmentId>& segment_ids,
                                                std::size_t applied) {
  const std::size_t n = dendrogram.leaves;
  if (segment_ids.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "segment ids do not match dendrogram leaves");
  }
  std::vector<std::size_t> parent(2 * n, 0);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < applied && i < dendrogram.merges.size(); ++i) {
    const Merge& m = dendrogram.merges[i];
    parent[find(m.left)] = m.node;
    parent[find(m.right)] = m.node;
  }
  // Clusters are numbered by their smallest segment id.
  std::map<std::size_t, SegmentId> min_id_of_root;
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    auto [it, inserted] = min_id_of_root.try_emplace(find(leaf), segment_ids[leaf]);
    if (!inserted) it->second = std::min(it->second, segment_ids[leaf]);
  }
  std::vector<std::pair<SegmentId, std::size_t>> order;
  for (const auto& [root, id] : min_id_of_root) order.emplace_back(id, root);
  std::sort(order.begin(), order.end());
  std::map<std::size_t, std::size_t> index_of_root;
  for (std::size_t i = 0; i < order.size(); ++i) index_of_root[order[i].second] = i;

  std::map<SegmentId, std::size_t> assignment;
  for (std::size_t leaf = 0; leaf < n; ++leaf) {
    assignment[segment_ids[leaf]] = index_of_root.at(find(leaf));
  }
  return assignment;
}

Clustering cluster(const FeatureMatrix& features, ClusterStop stop) {
  const std::size_t n = features.rows();
  if (stop.k.has_value() == stop.t.has_value()) {
    throw Error(ErrorCode::InvalidStop, "give exactly one of a cluster count or a threshold");
  }
  if (stop.k && (*stop.k < 1 || *stop.k > n)) {
    throw Error(ErrorCode::InvalidStop,
                "cluster count " + std::to_string(*stop.k) + " outside 1.." + std::to_string(n));
  }
  if (stop.t && !(*stop.t >= 0.0)) {
    throw Error(ErrorCode::InvalidStop, "distance threshold must be non-negative");
  }
  Clustering result;
  result.dendrogram = average_linkage(features);
  std::size_t applied = 0;
  if (stop.k) {
    applied = n - *stop.k;
  } else {
    while (applied < result.dendrogram.merges.size() &&
           result.dendrogram.merges[applied].height <= *stop.t) {
      ++applied;
    }
  }
  result.assignment = cut_dendrogram(result.dendrogram, features.segment_ids(), applied);
  result.cluster_count = n - applied;
  return result;
}

Rgba8 palette_color(std::size_t index) {
  constexpr double kGoldenAngle = 137.50776405003785;
  const double hue = std::fmod(double(index) * kGoldenAngle, 360.0);
  const double sector = hue / 60.0;
  const int i = static_cast<int>(std::floor(sector)) % 6;
  const double f = sector - std::floor(sector);
  auto byte = [](double v) { return static_cast<std::uint8_t>(std::lround(v * 255.0)); };
  const std::uint8_t full = 255, rise = byte(f), fall = byte(1.0 - f);
  switch (i) {
    case 0: return {full, rise, 0, 255};
    case 1: return {fall, full, 0, 255};
    case 2: return {0, full, rise, 255};
    case 3: return {0, fall, full, 255};
    case 4: return {rise, 0, full, 255};
    default: return {full, 0, fall, 255};
  }
}

Classification assign_classes(const Clustering& clustering, const FeatureMatrix& features,
                              const SegmentMap& segmap, const ClassSet& class_set,
                              const SeedLabels& seeds, bool propagate) {
  const auto& assignment = clustering.assignment;
  if (assignment.size() != segmap.registry().size() ||
      !std::equal(assignment.begin(), assignment.end(), segmap.registry().begin(),
                  [](const auto& x, const auto& y) { return x.first == y.first; })) {
    throw Error(ErrorCode::InvalidArgument, "cluster assignment is not total over the registry");
  }
  for (const auto& [segment, cls] : seeds) {
    if (!segmap.contains(segment)) {
      throw Error(ErrorCode::UnknownSegmentId, "seed segment " + std::to_string(segment) + " is not registered");
    }
    if (!class_set.contains(cls)) {
      throw Error(ErrorCode::UnknownClass, "seed class " + std::to_string(cls) + " does not exist");
    }
  }
  const std::size_t m = clustering.cluster_count;

  std::vector<std::map<ClassId, std::size_t>> votes(m);
  for (const auto& [segment, cls] : seeds) ++votes[assignment.at(segment)][cls];

  constexpr ClassId kUnresolved = 0;
  std::vector<ClassId> cluster_class(m, kUnresolved);
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t top = 0;
    for (const auto& [cls, count] : votes[c]) {
      if (count > top) {
        top = count;
        cluster_class[c] = cls;
      }
    }
  }

  const bool any_seeded = !seeds.empty();
  if (propagate && any_seeded) {
    const std::size_t d = features.dims();
    std::vector<std::vector<double>> centroid(m, std::vector<double>(d, 0.0));
    std::vector<double> members(m, 0.0);
    for (std::size_t r = 0; r < features.rows(); ++r) {
      auto it = assignment.find(features.segment_ids()[r]);
      if (it == assignment.end()) continue;
      const auto row = features.row(r);
      for (std::size_t j = 0; j < d; ++j) centroid[it->second][j] += row[j];
      members[it->second] += 1.0;
    }
    for (std::size_t c = 0; c < m; ++c) {
      for (double& v : centroid[c]) v /= std::max(members[c], 1.0);
    }
    std::vector<ClassId> resolved = cluster_class;
    for (std::size_t c = 0; c < m; ++c) {
      if (cluster_class[c] != kUnresolved) continue;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < m; ++s) {
        if (cluster_class[s] == kUnresolved) continue;
        const double dist = euclidean(centroid[c], centroid[s]);
        if (dist < best || (dist == best && cluster_class[s] < resolved[c])) {
          best = dist;
          resolved[c] = cluster_class[s];
        }
      }
    }
    cluster_class = std::move(resolved);
  }

  Classification out{{}, class_set};
  for (std::size_t c = 0; c < m; ++c) {
    if (cluster_class[c] != kUnresolved) continue;
    const std::string name = "cluster-" + std::to_string(c);
    if (const ClassDef* existing = out.class_set.find_by_name(name)) {
      cluster_class[c] = existing->id;
    } else {
      const ClassId id = out.class_set.next_id();
      out.class_set.add({id, name, palette_color(c)});
      cluster_class[c] = id;
    }
  }
  for (const auto& [segment, c] : assignment) out.class_map[segment] = cluster_class[c];
  return out;
}

ClassMap default_classification(const SegmentMap& segmap) {
  ClassMap out;
  for (const auto& [id, info] : segmap.registry()) out.emplace_hint(out.end(), id, kDefaultClass);
  return out;
}

ClassMap set_class(const ClassMap& class_map, const SegmentMap& segmap, const ClassSet& class_set,
                   SegmentId segment, ClassId class_id) {
  if (!segmap.contains(segment)) {
    throw Error(ErrorCode::UnknownSegmentId, "segment " + std::to_string(segment) + " is not registered");
  }
  if (!class_set.contains(class_id)) {
    throw Error(ErrorCode::UnknownClass, "class " + std::to_string(class_id) + " does not exist");
  }
  ClassMap out = class_map;
  out[segment] = class_id;
  return out;
}

ClassMap reconcile_class_map(const ClassMap& class_map, const SegmentMap& segmap) {
  ClassMap out;
  for (const auto& [id, info] : segmap.registry()) {
    auto it = class_map.find(id);
    out.emplace_hint(out.end(), id, it == class_map.end() ? kDefaultClass : it->second);
  }
  return out;
}

}  // namespace aerolabel
