#include "aerolabel/store.hpp"

#include <bit>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "aerolabel/error.hpp"
#include "aerolabel/overlay.hpp"
#include "aerolabel/png_io.hpp"
#include "aerolabel/tar_writer.hpp"

namespace aerolabel {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::string_view in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

[[noreturn]] void bad_format(const std::string& what) { throw Error(ErrorCode::BadFormat, what); }

}  // namespace

std::string encode_segment_raster(const SegmentMap& segmap) {
  std::string out;
  out.reserve(kSegmentRasterMagic.size() + 8 + 4 * segmap.size());
  out.append(kSegmentRasterMagic);
  put_u32(out, segmap.width());
  put_u32(out, segmap.height());
  for (SegmentId id : segmap.ids()) put_u32(out, id);
  return out;
}

SegmentMap decode_segment_raster(std::string_view bytes) {
  const std::size_t header = kSegmentRasterMagic.size() + 8;
  if (bytes.size() < header || bytes.substr(0, kSegmentRasterMagic.size()) != kSegmentRasterMagic) {
    bad_format("segment raster magic missing");
  }
  const std::uint32_t w = get_u32(bytes, 8);
  const std::uint32_t h = get_u32(bytes, 12);
  if (w == 0 || h == 0) bad_format("segment raster has zero dimensions");
  const std::uint64_t expected = header + 4 * std::uint64_t(w) * h;
  if (bytes.size() < expected) bad_format("segment raster is truncated");
  if (bytes.size() > expected) bad_format("segment raster has trailing bytes");
  std::vector<SegmentId> ids(std::size_t(w) * h);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = get_u32(bytes, header + 4 * i);
  return SegmentMap(w, h, std::move(ids));
}

FeatureTable parse_feature_table(std::string_view bytes) {
  FeatureTable table;
  if (bytes.substr(0, kFeatureTableMagic.size()) == kFeatureTableMagic) {
    const std::size_t header = kFeatureTableMagic.size() + 8;
    if (bytes.size() < header) bad_format("feature table header is truncated");
    const std::uint32_t rows = get_u32(bytes, 8);
    const std::uint32_t dims = get_u32(bytes, 12);
    const std::uint64_t expected = header + std::uint64_t(rows) * (4 + 8 * std::uint64_t(dims));
    if (bytes.size() != expected) bad_format("feature table length does not match its header");
    std::size_t at = header;
    for (std::uint32_t r = 0; r < rows; ++r) {
      table.segment_ids.push_back(get_u32(bytes, at));
      at += 4;
      std::vector<double> row(dims);
      for (double& v : row) {
        v = std::bit_cast<double>(get_u64(bytes, at));
        at += 8;
      }
      table.rows.push_back(std::move(row));
    }
    return table;
  }

  std::istringstream in{std::string(bytes)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    char* end = nullptr;
    errno = 0;
    const unsigned long long id = std::strtoull(token.c_str(), &end, 10);
    if (*end != '\0' || errno != 0 || id > 0xFFFFFFFFull || token[0] == '-') {
      bad_format("bad segment id on line " + std::to_string(line_no));
    }
    std::vector<double> row;
    while (fields >> token) {
      end = nullptr;
      const double v = std::strtod(token.c_str(), &end);
      if (*end != '\0') bad_format("bad feature value on line " + std::to_string(line_no));
      row.push_back(v);
    }
    if (row.empty()) bad_format("no feature values on line " + std::to_string(line_no));
    if (!table.rows.empty() && row.size() != table.rows.front().size()) {
      bad_format("line " + std::to_string(line_no) + " has a different number of features");
    }
    table.segment_ids.push_back(static_cast<SegmentId>(id));
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string encode_feature_table(const FeatureTable& table) {
  if (table.segment_ids.size() != table.rows.size()) {
    throw Error(ErrorCode::DimensionMismatch, "feature ids and rows differ in count");
  }
  const std::size_t dims = table.rows.empty() ? 0 : table.rows.front().size();
  std::string out(kFeatureTableMagic);
  put_u32(out, static_cast<std::uint32_t>(table.rows.size()));
  put_u32(out, static_cast<std::uint32_t>(dims));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r].size() != dims) throw Error(ErrorCode::DimensionMismatch, "ragged feature rows");
    put_u32(out, table.segment_ids[r]);
    for (double v : table.rows[r]) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  return std::move(ss).str();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::IoFailure, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot replace " + path.string() + ": " + ec.message());
}

ojson manifest_json(const Project& p) {
  ojson m;
  m["format_version"] = kFormatVersion;
  m["project_id"] = p.id;
  m["name"] = p.name;
  m["created"] = p.created;
  m["modified"] = p.modified;
  m["image_file"] = p.image ? ojson(kImageFile) : ojson(nullptr);
  m["segment_file"] = p.segments ? ojson(kSegmentFile) : ojson(nullptr);
  m["class_file"] = kClassFile;
  if (p.georef) {
    const AffineTransform& t = p.georef->transform;
    m["georef"] = {{"coefficients", {t.a, t.b, t.c, t.d, t.e, t.f}},
                   {"anchor_zoom", p.georef->anchor_zoom}};
  } else {
    m["georef"] = nullptr;
  }
  ojson points = ojson::array();
  for (const ControlPointPair& cp : p.control_points) {
    points.push_back({{"image", {cp.image.x, cp.image.y}}, {"geo", {cp.geo.lat, cp.geo.lon}}});
  }
  m["control_points"] = std::move(points);
  m["segmenter"] = {{"k", p.segmenter.k}, {"min_region_size", p.segmenter.min_region_size}};
  m["clustering"] = {
      {"k", p.clustering.k ? ojson(*p.clustering.k) : ojson(nullptr)},
      {"t", p.clustering.t ? ojson(*p.clustering.t) : ojson(nullptr)},
      {"propagate", p.clustering.propagate},
      {"standardize", p.clustering.standardize},
  };
  ojson jobs = ojson::array();
  for (const JobRecord& j : p.jobs) {
    jobs.push_back({{"job_id", j.job_id}, {"kind", j.kind}, {"status", j.status}, {"detail", j.detail}});
  }
  m["jobs"] = std::move(jobs);
  return m;
}

ojson classes_json(const Project& p) {
  ojson doc;
  ojson classes = ojson::array();
  for (const ClassDef& c : p.classes.classes()) {
    classes.push_back({{"id", c.id},
                       {"name", c.name},
                       {"color", {c.color.r, c.color.g, c.color.b, c.color.a}}});
  }
  doc["classes"] = std::move(classes);
  ojson assignment = ojson::array();
  for (const auto& [segment, cls] : p.class_map) assignment.push_back({segment, cls});
  doc["class_map"] = std::move(assignment);
  return doc;
}

void save_project(const Project& project, const fs::path& dir) {
  check_project(project);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  if (project.image) {
    write_file_atomic(dir / kImageFile, encode_png(*project.image));
    write_file_atomic(dir / kSegmentFile, encode_segment_raster(*project.segments));
  }
  write_file_atomic(dir / kClassFile, classes_json(project).dump(2) + "\n");
  // Manifest last: a directory with a manifest is complete.
  write_file_atomic(dir / kManifestFile, manifest_json(project).dump(2) + "\n");
}

namespace {

ojson parse_json_file(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    bad_format(path.filename().string() + ": " + e.what());
  }
}

Project project_from_documents(const ojson& m, const ojson& c) {
  Project p;
  p.id = m.at("project_id").get<std::string>();
  p.name = m.at("name").get<std::string>();
  p.created = m.at("created").get<std::int64_t>();
  p.modified = m.at("modified").get<std::int64_t>();
  if (const ojson& g = m.at("georef"); !g.is_null()) {
    const auto coef = g.at("coefficients").get<std::vector<double>>();
    if (coef.size() != 6) bad_format("georef needs six coefficients");
    p.georef = GeoReference{{coef[0], coef[1], coef[2], coef[3], coef[4], coef[5]},
                            g.at("anchor_zoom").get<int>()};
  }
  for (const ojson& cp : m.at("control_points")) {
    const auto img = cp.at("image").get<std::vector<double>>();
    const auto geo = cp.at("geo").get<std::vector<double>>();
    if (img.size() != 2 || geo.size() != 2) bad_format("control point needs two coordinates");
    p.control_points.push_back({{img[0], img[1]}, {geo[0], geo[1]}});
  }
  const ojson& seg = m.at("segmenter");
  p.segmenter.k = seg.at("k").get<double>();
  p.segmenter.min_region_size = seg.at("min_region_size").get<std::uint32_t>();
  const ojson& cl = m.at("clustering");
  p.clustering.k = cl.at("k").is_null() ? std::nullopt
                                        : std::optional<std::size_t>(cl.at("k").get<std::size_t>());
  p.clustering.t = cl.at("t").is_null() ? std::nullopt : std::optional<double>(cl.at("t").get<double>());
  p.clustering.propagate = cl.at("propagate").get<bool>();
  p.clustering.standardize = cl.at("standardize").get<bool>();
  for (const ojson& j : m.at("jobs")) {
    p.jobs.push_back({j.at("job_id").get<std::string>(), j.at("kind").get<std::string>(),
                      j.at("status").get<std::string>(), j.at("detail").get<std::string>()});
  }

  std::vector<ClassDef> defs;
  for (const ojson& d : c.at("classes")) {
    const auto rgba = d.at("color").get<std::vector<std::uint8_t>>();
    if (rgba.size() != 4) bad_format("class colour needs four channels");
    defs.push_back({d.at("id").get<ClassId>(), d.at("name").get<std::string>(),
                    {rgba[0], rgba[1], rgba[2], rgba[3]}});
  }
  try {
    p.classes = ClassSet(std::move(defs));
  } catch (const Error& e) {
    bad_format(std::string("class set: ") + e.what());
  }
  for (const ojson& entry : c.at("class_map")) {
    p.class_map[entry.at(0).get<SegmentId>()] = entry.at(1).get<ClassId>();
  }
  return p;
}

}  // namespace

Project load_project(const fs::path& dir) {
  const ojson manifest = parse_json_file(dir / kManifestFile);
  try {
    if (manifest.at("format_version").get<int>() != kFormatVersion) {
      bad_format("unsupported format_version " + manifest.at("format_version").dump());
    }
  } catch (const nlohmann::json::exception& e) {
    bad_format(std::string("manifest: ") + e.what());
  }
  Project p;
  ojson image_file, segment_file;
  try {
    const ojson classes = parse_json_file(dir / manifest.at("class_file").get<std::string>());
    p = project_from_documents(manifest, classes);
    image_file = manifest.at("image_file");
    segment_file = manifest.at("segment_file");
    if (!image_file.is_null()) image_file.get<std::string>();
    if (!segment_file.is_null()) segment_file.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    bad_format(std::string("project documents: ") + e.what());
  }

  if (image_file.is_null() != segment_file.is_null()) {
    bad_format("image and segment raster must be stored together");
  }
  if (!image_file.is_null()) {
    p.image = decode_png(read_file(dir / image_file.get<std::string>()));
    p.segments = decode_segment_raster(read_file(dir / segment_file.get<std::string>()));
    try {
      validate(*p.image, *p.segments);
    } catch (const Error& e) {
      throw Error(ErrorCode::RegistryInconsistent, std::string("stored segment raster: ") + e.what());
    }
  }
  try {
    check_project(p);
  } catch (const Error& e) {
    throw Error(ErrorCode::RegistryInconsistent, std::string("stored project: ") + e.what());
  }
  return p;
}

ojson stats_document(const ClassStats& stats, const ClassSet& classes) {
  ojson doc;
  ojson list = ojson::array();
  for (const ClassDef& def : classes.classes()) {
    ClassTotals totals;
    if (auto it = stats.classes.find(def.id); it != stats.classes.end()) totals = it->second;
    ojson entry;
    entry["class_id"] = def.id;
    entry["name"] = def.name;
    entry["color"] = {def.color.r, def.color.g, def.color.b, def.color.a};
    entry["instance_count"] = totals.instance_count;
    entry["pixel_count"] = totals.pixel_count;
    if (stats.total_area_m2) entry["area_m2"] = totals.area_m2.value_or(0.0);
    list.push_back(std::move(entry));
  }
  doc["classes"] = std::move(list);
  doc["instance_count"] = stats.total_instances;
  doc["pixel_count"] = stats.total_pixels;
  doc["unassigned_pixels"] = stats.unassigned_pixels;
  if (stats.total_area_m2) doc["area_m2"] = *stats.total_area_m2;
  return doc;
}

RasterImage render_label_image(const Project& project) {
  const SegmentMap& segmap = require_segments(project);
  RasterImage out(segmap.width(), segmap.height());
  const auto ids = segmap.ids();
  std::map<SegmentId, Rgb8> color_of;
  for (const auto& [segment, cls] : project.class_map) {
    if (const ClassDef* def = project.classes.find(cls)) {
      color_of[segment] = {def->color.r, def->color.g, def->color.b};
    }
  }
  for (std::uint32_t row = 0; row < segmap.height(); ++row) {
    for (std::uint32_t col = 0; col < segmap.width(); ++col) {
      const SegmentId id = ids[std::size_t(row) * segmap.width() + col];
      if (id == kUnassigned) continue;
      if (auto it = color_of.find(id); it != color_of.end()) out.at(col, row) = it->second;
    }
  }
  return out;
}

std::string export_bundle(const Project& project) {
  check_project(project);
  TarWriter tar(project.modified);
  tar.add_file("manifest.json", manifest_json(project).dump(2) + "\n");
  if (project.segments) {
    tar.add_file("labels.png", encode_png(render_label_image(project)));
    const ClassStats stats = compute_stats(*project.segments, project.class_map, project.georef);
    tar.add_file("stats.json", stats_document(stats, project.classes).dump(2) + "\n");
    if (project.georef) tar.add_file("segments.geojson", export_geojson(project).dump() + "\n");
  }
  return tar.finish();
}

}  // namespace aerolabel
