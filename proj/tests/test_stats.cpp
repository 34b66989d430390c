#include "doctest.h"

#include <cmath>

#include "aerolabel/error.hpp"
#include "aerolabel/stats.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace aerolabel;

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

// Transform placing the image centre on the equator at the anchor zoom.
GeoReference equatorial(const AffineTransform& linear, std::uint32_t w, std::uint32_t h, int z0) {
  AffineTransform t = linear;
  const Point2 c = apply_affine(t, {w / 2.0, h / 2.0});
  t.c += world_size(z0) / 2 - c.x;
  t.f += world_size(z0) / 2 - c.y;
  return {t, z0};
}

}  // namespace

TEST_CASE("ground resolution closed form") {
  CHECK(ground_resolution(0, 0) == doctest::Approx(156543.03392804097).epsilon(1e-14));
  CHECK(ground_resolution(0, 0) == doctest::Approx(oracle::ground_resolution(0, 0)).epsilon(1e-15));
  for (int z = 0; z < 22; ++z) {
    CHECK(ground_resolution(60, z) == doctest::Approx(ground_resolution(0, z) / 2).epsilon(1e-14));
    CHECK(ground_resolution(33, z + 1) == doctest::Approx(ground_resolution(33, z) / 2).epsilon(1e-15));
    CHECK(ground_resolution(-12.5, z) == doctest::Approx(oracle::ground_resolution(-12.5, z)).epsilon(1e-14));
  }
  CHECK(code_of([] { ground_resolution(86, 3); }) == ErrorCode::OutOfProjectionBounds);
  CHECK(code_of([] { ground_resolution(0, 23); }) == ErrorCode::OutOfProjectionBounds);
}

TEST_CASE("empty registry") {
  const ClassStats s = compute_stats(SegmentMap::unassigned(5, 3), {}, std::nullopt);
  CHECK(s.classes.empty());
  CHECK(s.total_instances == 0);
  CHECK(s.total_pixels == 0);
  CHECK(s.unassigned_pixels == 15);
  CHECK_FALSE(s.total_area_m2.has_value());
}

TEST_CASE("instance and pixel additivity") {
  std::vector<SegmentId> ids(16, 4);
  std::fill(ids.begin(), ids.begin() + 10, 2);
  const SegmentMap segmap(4, 4, ids);
  const ClassStats s = compute_stats(segmap, {{2, 2}, {4, 2}}, std::nullopt);
  REQUIRE(s.classes.size() == 1);
  CHECK(s.classes.at(2).instance_count == 2);
  CHECK(s.classes.at(2).pixel_count == 16);
  CHECK_FALSE(s.classes.at(2).area_m2.has_value());
  CHECK(code_of([&] { compute_stats(segmap, {{2, 2}}, std::nullopt); }) == ErrorCode::PartialClassMap);
  CHECK(code_of([&] { class_histogram({{2, 2}, {4, 1}, {9, 1}}, segmap); }) == ErrorCode::PartialClassMap);
}

TEST_CASE("identity at the equator") {
  const std::uint32_t w = 8, h = 6;
  const SegmentMap segmap(w, h, std::vector<SegmentId>(w * h, 1));
  for (int z0 : {0, 10, 18, 22}) {
    if (world_size(z0) < 16) continue;
    const GeoReference g = equatorial(AffineTransform::identity(), w, h, z0);
    const ClassStats s = compute_stats(segmap, {{1, 1}}, g);
    const double gres = oracle::ground_resolution(0, z0);
    CHECK(*s.classes.at(1).area_m2 == doctest::Approx(48 * gres * gres).epsilon(1e-12));
    CHECK(*s.total_area_m2 == doctest::Approx(48 * gres * gres).epsilon(1e-12));
  }
}

TEST_CASE("area scales with det and ignores rotation") {
  const std::uint32_t w = 10, h = 10;
  fixture::Rng rng(61);
  const SegmentMap segmap(w, h, fixture::random_ids(rng, w, h, 5));
  ClassMap cm;
  for (const auto& [id, info] : segmap.registry()) cm[id] = 1;
  const GeoReference base = equatorial(AffineTransform::identity(), w, h, 16);
  const GeoReference scaled = equatorial({3, 0, 0, 0, 3, 0}, w, h, 16);
  const double c = std::cos(0.7), s = std::sin(0.7);
  const GeoReference rotated = equatorial({c, -s, 0, s, c, 0}, w, h, 16);
  const double a0 = *compute_stats(segmap, cm, base).total_area_m2;
  CHECK(*compute_stats(segmap, cm, scaled).total_area_m2 == doctest::Approx(9 * a0).epsilon(1e-12));
  CHECK(*compute_stats(segmap, cm, rotated).total_area_m2 == doctest::Approx(a0).epsilon(1e-12));
}

TEST_CASE("area uses the latitude of the image centre") {
  const std::uint32_t w = 4, h = 4;
  const int z0 = 15;
  const Point2 centre = latlon_to_world_px({47.3, 8.5}, z0);
  const GeoReference g{{2, 0, centre.x - 4, 0, 2, centre.y - 4}, z0};
  const double gres = oracle::ground_resolution(47.3, z0);
  CHECK(pixel_area_m2(g, w, h) == doctest::Approx(4 * gres * gres).epsilon(1e-9));
}

TEST_CASE("histogram matches per-pixel counts and conserves pixels") {
  fixture::Rng rng(62);
  for (int trial = 0; trial < 40; ++trial) {
    const SegmentMap segmap(13, 9, fixture::random_ids(rng, 13, 9, 8));
    ClassMap cm;
    for (const auto& [id, info] : segmap.registry()) cm[id] = 1 + rng() % 3;
    std::map<ClassId, std::uint64_t> brute;
    for (SegmentId id : segmap.ids()) {
      if (id != 0) ++brute[cm.at(id)];
    }
    CHECK(class_histogram(cm, segmap) == brute);
    const ClassStats s = compute_stats(segmap, cm, std::nullopt);
    std::uint64_t pixels = 0, instances = 0;
    for (const auto& [cls, totals] : s.classes) {
      CHECK(totals.pixel_count == brute.at(cls));
      pixels += totals.pixel_count;
      instances += totals.instance_count;
    }
    CHECK(pixels + s.unassigned_pixels == segmap.size());
    CHECK(instances == segmap.registry().size());
    CHECK(s.total_instances == instances);
    CHECK(s.total_pixels == pixels);
  }
}

TEST_CASE("moving one segment shifts the histogram by its size") {
  const SegmentMap segmap(3, 2, {1, 1, 2, 2, 2, 3});
  const auto before = class_histogram({{1, 1}, {2, 1}, {3, 1}}, segmap);
  const auto after = class_histogram({{1, 1}, {2, 5}, {3, 1}}, segmap);
  CHECK(before == std::map<ClassId, std::uint64_t>{{1, 6}});
  CHECK(after == std::map<ClassId, std::uint64_t>{{1, 3}, {5, 3}});
}
