#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include "aerolabel/error.hpp"
#include "aerolabel/png_io.hpp"
#include "aerolabel/store.hpp"
#include "aerolabel/tar_writer.hpp"
#include "fixtures.hpp"

using namespace aerolabel;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::NotFound;
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("aerolabel-store-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::uint32_t le32(std::string_view s, std::size_t at) {
  return std::uint32_t(std::uint8_t(s[at])) | std::uint32_t(std::uint8_t(s[at + 1])) << 8 |
         std::uint32_t(std::uint8_t(s[at + 2])) << 16 | std::uint32_t(std::uint8_t(s[at + 3])) << 24;
}

// name -> contents, parsed straight from 512-byte ustar headers.
std::map<std::string, std::string> untar(const std::string& archive) {
  std::map<std::string, std::string> files;
  std::size_t at = 0;
  while (at + 512 <= archive.size()) {
    const std::string_view header(archive.data() + at, 512);
    if (header.find_first_not_of('\0') == std::string_view::npos) break;
    const std::string name(header.data(), strnlen(header.data(), 100));
    CHECK(header.substr(257, 5) == "ustar");
    const std::size_t size = std::stoul(std::string(header.substr(124, 11)), nullptr, 8);
    unsigned sum = 0;
    for (std::size_t i = 0; i < 512; ++i) sum += (i >= 148 && i < 156) ? ' ' : std::uint8_t(header[i]);
    CHECK(sum == std::stoul(std::string(header.substr(148, 6)), nullptr, 8));
    files[name] = archive.substr(at + 512, size);
    at += 512 + (size + 511) / 512 * 512;
  }
  return files;
}

}  // namespace

TEST_CASE("segment raster layout") {
  const SegmentMap segmap(2, 1, {1, 258});
  const std::string bytes = encode_segment_raster(segmap);
  REQUIRE(bytes.size() == 8 + 8 + 8);
  CHECK(bytes.substr(0, 8) == "BOSCSEG1");
  CHECK(le32(bytes, 8) == 2);
  CHECK(le32(bytes, 12) == 1);
  CHECK(le32(bytes, 16) == 1);
  CHECK(le32(bytes, 20) == 258);
  CHECK(decode_segment_raster(bytes) == segmap);
}

TEST_CASE("segment raster corruption") {
  const std::string good = encode_segment_raster(SegmentMap(3, 2, {1, 1, 2, 0, 2, 2}));
  std::string magic = good;
  magic[3] = 'X';
  CHECK(code_of([&] { decode_segment_raster(magic); }) == ErrorCode::BadFormat);
  CHECK(code_of([&] { decode_segment_raster(good.substr(0, good.size() - 1)); }) == ErrorCode::BadFormat);
  CHECK(code_of([&] { decode_segment_raster(good.substr(0, 10)); }) == ErrorCode::BadFormat);
  CHECK(code_of([&] { decode_segment_raster(good + "x"); }) == ErrorCode::BadFormat);
  std::string zero = good;
  zero[8] = zero[9] = zero[10] = zero[11] = '\0';
  CHECK(code_of([&] { decode_segment_raster(zero); }) == ErrorCode::BadFormat);
  std::string huge = good;
  huge[11] = '\x7f';
  CHECK(code_of([&] { decode_segment_raster(huge); }) == ErrorCode::BadFormat);
}

TEST_CASE("feature tables") {
  const FeatureTable t = parse_feature_table("# id f1 f2\n3 0.5 1\n\n7 -2 1e-3\n");
  CHECK(t.segment_ids == std::vector<SegmentId>{3, 7});
  CHECK(t.rows == std::vector<std::vector<double>>{{0.5, 1}, {-2, 1e-3}});
  const std::string bin = encode_feature_table(t);
  CHECK(bin.substr(0, 8) == "BOSCFEA1");
  CHECK(bin.size() == 16 + 2 * (4 + 16));
  const FeatureTable back = parse_feature_table(bin);
  CHECK(back.segment_ids == t.segment_ids);
  CHECK(back.rows == t.rows);
  CHECK(code_of([] { parse_feature_table("1 2 3\n4 5\n"); }) == ErrorCode::BadFormat);
  CHECK(code_of([] { parse_feature_table("1 abc\n"); }) == ErrorCode::BadFormat);
  CHECK(code_of([&] { parse_feature_table(bin.substr(0, bin.size() - 3)); }) == ErrorCode::BadFormat);
}

TEST_CASE("png round trip") {
  fixture::Rng rng(71);
  const RasterImage image = fixture::random_blocky_image(rng, 17, 9);
  CHECK(decode_png(encode_png(image)) == image);
  CHECK(code_of([] { decode_png("not a png"); }) == ErrorCode::BadFormat);
}

TEST_CASE("fresh project round trips without georef") {
  TempDir dir;
  Project p;
  p.id = "fresh";
  p.name = "empty";
  save_project(p, dir.path);
  const Project back = load_project(dir.path);
  CHECK(back == p);
  CHECK_FALSE(back.georef.has_value());
  CHECK_FALSE(fs::exists(dir.path / kSegmentFile));
}

TEST_CASE("random projects round trip") {
  fixture::Rng rng(72);
  for (int trial = 0; trial < 100; ++trial) {
    TempDir dir;
    const Project p = fixture::random_project(rng);
    save_project(p, dir.path);
    const Project back = load_project(dir.path);
    CHECK(back == p);
    if (p.segments) {
      const std::string first = read_file(dir.path / kSegmentFile);
      TempDir again;
      save_project(back, again.path);
      CHECK(read_file(again.path / kSegmentFile) == first);
      CHECK(read_file(again.path / kManifestFile) == read_file(dir.path / kManifestFile));
    }
  }
}

TEST_CASE("load errors") {
  fixture::Rng rng(73);
  Project p = fixture::random_project(rng);
  while (!p.segments) p = fixture::random_project(rng);
  {
    TempDir dir;
    CHECK(code_of([&] { load_project(dir.path); }) == ErrorCode::IoFailure);
  }
  {
    TempDir dir;
    save_project(p, dir.path);
    const std::string seg = read_file(dir.path / kSegmentFile);
    write_file_atomic(dir.path / kSegmentFile, seg.substr(0, seg.size() - 2));
    CHECK(code_of([&] { load_project(dir.path); }) == ErrorCode::BadFormat);
  }
  {
    TempDir dir;
    save_project(p, dir.path);
    auto m = nlohmann::json::parse(read_file(dir.path / kManifestFile));
    m["format_version"] = 99;
    write_file_atomic(dir.path / kManifestFile, m.dump());
    CHECK(code_of([&] { load_project(dir.path); }) == ErrorCode::BadFormat);
    m["format_version"] = 1;
    m.erase("image_file");
    write_file_atomic(dir.path / kManifestFile, m.dump());
    CHECK(code_of([&] { load_project(dir.path); }) == ErrorCode::BadFormat);
  }
  {
    TempDir dir;
    save_project(p, dir.path);
    write_file_atomic(dir.path / kManifestFile, "{ nope");
    CHECK(code_of([&] { load_project(dir.path); }) == ErrorCode::BadFormat);
  }
  {
    TempDir dir;
    save_project(p, dir.path);
    const SegmentMap wrong(p.segments->width() + 1, p.segments->height(),
                           std::vector<SegmentId>((p.segments->width() + 1) * p.segments->height(), 1));
    write_file_atomic(dir.path / kSegmentFile, encode_segment_raster(wrong));
    CHECK(code_of([&] { load_project(dir.path); }) == ErrorCode::RegistryInconsistent);
  }
  {
    TempDir dir;
    save_project(p, dir.path);
    fs::remove(dir.path / kImageFile);
    CHECK(code_of([&] { load_project(dir.path); }) == ErrorCode::IoFailure);
  }
}

TEST_CASE("label image uses class colours") {
  fixture::Rng rng(74);
  for (int trial = 0; trial < 20; ++trial) {
    const Project p = fixture::random_project(rng);
    if (!p.segments) continue;
    const RasterImage labels = render_label_image(p);
    for (std::uint32_t r = 0; r < labels.height(); ++r) {
      for (std::uint32_t c = 0; c < labels.width(); ++c) {
        const SegmentId id = p.segments->at(c, r);
        Rgb8 want{};
        if (id != 0) {
          const Rgba8 cc = p.classes.find(p.class_map.at(id))->color;
          want = {cc.r, cc.g, cc.b};
        }
        CHECK(labels.at(c, r) == want);
      }
    }
  }
}

TEST_CASE("bundle contents") {
  fixture::Rng rng(75);
  Project p = fixture::random_project(rng);
  while (!p.segments) p = fixture::random_project(rng);
  p.georef.reset();
  auto files = untar(export_bundle(p));
  CHECK(files.count("manifest.json") == 1);
  CHECK(files.count("labels.png") == 1);
  CHECK(files.count("stats.json") == 1);
  CHECK(files.count("segments.geojson") == 0);
  const auto stats = nlohmann::json::parse(files["stats.json"]);
  CHECK_FALSE(stats.contains("area_m2"));
  CHECK(stats["unassigned_pixels"] == p.segments->unassigned_count());
  CHECK(decode_png(files["labels.png"]) == render_label_image(p));

  int z;
  std::uint32_t x, y;
  const Project geo = fixture::random_georeferenced_project(rng, z, x, y);
  files = untar(export_bundle(geo));
  REQUIRE(files.count("segments.geojson") == 1);
  CHECK(nlohmann::json::parse(files["segments.geojson"])["type"] == "FeatureCollection");
  const auto geo_stats = nlohmann::json::parse(files["stats.json"]);
  CHECK(geo_stats.contains("area_m2"));
  for (const auto& entry : geo_stats["classes"]) CHECK(entry.contains("area_m2"));
  CHECK(geo_stats["classes"].size() == geo.classes.classes().size());

  Project bare;
  bare.id = "bare";
  files = untar(export_bundle(bare));
  CHECK(files.size() == 1);
}

TEST_CASE("tar writer rejects long names") {
  TarWriter tar;
  CHECK(code_of([&] { tar.add_file(std::string(101, 'a'), "x"); }) == ErrorCode::InvalidArgument);
  tar.add_file("a.txt", "hello");
  const std::string archive = tar.finish();
  CHECK(archive.size() % 512 == 0);
  CHECK(untar(archive).at("a.txt") == "hello");
}

TEST_CASE("conformance fixtures") {
  const fs::path dir = CONFORMANCE_DIR;
  const std::string raster = read_file(dir / "segments_3x2.bin");
  const SegmentMap segmap = decode_segment_raster(raster);
  CHECK(segmap == SegmentMap(3, 2, {1, 1, 2, 0, 2, 2}));
  CHECK(encode_segment_raster(segmap) == raster);
  for (const char* name : {"bad_magic.bin", "truncated.bin", "trailing.bin", "zero_width.bin"}) {
    CAPTURE(name);
    CHECK(code_of([&] { decode_segment_raster(read_file(dir / name)); }) == ErrorCode::BadFormat);
  }

  const FeatureTable text = parse_feature_table(read_file(dir / "features.txt"));
  const std::string bin = read_file(dir / "features.bin");
  const FeatureTable binary = parse_feature_table(bin);
  CHECK(text.segment_ids == std::vector<SegmentId>{3, 7});
  CHECK(text.rows == binary.rows);
  CHECK(text.segment_ids == binary.segment_ids);
  CHECK(encode_feature_table(text) == bin);
  CHECK(code_of([&] { parse_feature_table(read_file(dir / "features_ragged.txt")); }) == ErrorCode::BadFormat);

  const Project p = load_project(dir / "project");
  CHECK(p.id == "conformance");
  CHECK(*p.segments == segmap);
  CHECK(p.class_map == ClassMap{{1, 1}, {2, 4}});
  CHECK(p.classes.find(4)->name == "roof");
  CHECK(p.georef->anchor_zoom == 18);
  CHECK(p.image->at(2, 0) == Rgb8{90, 0, 0});
  TempDir out;
  save_project(p, out.path);
  CHECK(read_file(out.path / kSegmentFile) == raster);
  CHECK(load_project(out.path) == p);
  CHECK(code_of([&] { load_project(dir / "bad_version"); }) == ErrorCode::BadFormat);
}
