#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "aerolabel/project.hpp"
#include "aerolabel/stats.hpp"

namespace aerolabel {

inline constexpr std::string_view kSegmentRasterMagic = "BOSCSEG1";
inline constexpr std::string_view kFeatureTableMagic = "BOSCFEA1";

inline constexpr std::string_view kManifestFile = "manifest.json";
inline constexpr std::string_view kImageFile = "image.png";
inline constexpr std::string_view kSegmentFile = "segments.bin";
inline constexpr std::string_view kClassFile = "classes.json";

/// "BOSCSEG1", u32 LE width, u32 LE height, then width*height u32 LE ids row-major.
std::string encode_segment_raster(const SegmentMap& segmap);
/// Throws BadFormat on a wrong magic, zero dimensions, truncation or trailing bytes.
SegmentMap decode_segment_raster(std::string_view bytes);

struct FeatureTable {
  std::vector<SegmentId> segment_ids;
  std::vector<std::vector<double>> rows;
};

/// Text ("id f1 ... fd" per line, '#' comments) or binary ("BOSCFEA1", u32 LE
/// rows, u32 LE dims, then per row u32 LE id + dims f64 LE). Throws BadFormat.
FeatureTable parse_feature_table(std::string_view bytes);
std::string encode_feature_table(const FeatureTable& table);

nlohmann::ordered_json manifest_json(const Project& project);
nlohmann::ordered_json classes_json(const Project& project);

/// Writes manifest, source image, segment raster and class file into `dir`.
/// Throws IoFailure.
void save_project(const Project& project, const std::filesystem::path& dir);

/// Throws BadFormat, RegistryInconsistent or IoFailure.
Project load_project(const std::filesystem::path& dir);

/// Per-class document listing every class in the set; area fields only when
/// georeferenced.
nlohmann::ordered_json stats_document(const ClassStats& stats, const ClassSet& classes);

/// Source-sized RGB image with each pixel painted in its segment's class colour;
/// unassigned pixels are black.
RasterImage render_label_image(const Project& project);

/// ustar archive with manifest.json, labels.png, stats.json and, when the
/// project is georeferenced, segments.geojson.
std::string export_bundle(const Project& project);

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace aerolabel
