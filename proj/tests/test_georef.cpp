#include "doctest.h"

#include <cmath>

#include "aerolabel/error.hpp"
#include "aerolabel/georef.hpp"
#include "fixtures.hpp"

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

void check_affine(const AffineTransform& got, const AffineTransform& want, double tol = 1e-9) {
  const double g[6] = {got.a, got.b, got.c, got.d, got.e, got.f};
  const double w[6] = {want.a, want.b, want.c, want.d, want.e, want.f};
  for (int i = 0; i < 6; ++i) CHECK(std::abs(g[i] - w[i]) <= tol * (1.0 + std::abs(w[i])));
}

AffineTransform fit(std::vector<Point2> src, std::vector<Point2> dst) { return estimate_affine(src, dst); }

}  // namespace

TEST_CASE("mercator anchors") {
  Point2 p = latlon_to_world_px({0, 0}, 0);
  CHECK(p.x == doctest::Approx(128.0).epsilon(1e-12));
  CHECK(p.y == doctest::Approx(128.0).epsilon(1e-12));
  p = latlon_to_world_px({0, 180}, 1);
  CHECK(p.x == doctest::Approx(512.0).epsilon(1e-12));
  CHECK(p.y == doctest::Approx(256.0).epsilon(1e-12));
  p = latlon_to_world_px({kMaxLatitude, -180}, 0);
  CHECK(std::abs(p.x) < 1e-9);
  CHECK(std::abs(p.y) < 1e-6);
  const LatLon back = world_px_to_latlon({128, 128}, 0);
  CHECK(std::abs(back.lat) < 1e-12);
  CHECK(std::abs(back.lon) < 1e-12);
  const LatLon corner = world_px_to_latlon({0, 0}, 0);
  CHECK(corner.lat == doctest::Approx(kMaxLatitude).epsilon(1e-9));
  CHECK(corner.lon == -180.0);
  CHECK(world_size(3) == 2048.0);
}

TEST_CASE("mercator bounds") {
  CHECK(code_of([] { latlon_to_world_px({86, 0}, 3); }) == ErrorCode::OutOfProjectionBounds);
  CHECK(code_of([] { latlon_to_world_px({0, 181}, 3); }) == ErrorCode::OutOfProjectionBounds);
  CHECK(code_of([] { latlon_to_world_px({0, 0}, 23); }) == ErrorCode::OutOfProjectionBounds);
  CHECK(code_of([] { latlon_to_world_px({0, 0}, -1); }) == ErrorCode::OutOfProjectionBounds);
  CHECK(code_of([] { world_px_to_latlon({-1, 0}, 0); }) == ErrorCode::OutOfProjectionBounds);
  CHECK(code_of([] { world_px_to_latlon({0, 257}, 0); }) == ErrorCode::OutOfProjectionBounds);
  CHECK(code_of([] { latlon_to_world_px({NAN, 0}, 0); }) == ErrorCode::OutOfProjectionBounds);
}

TEST_CASE("mercator round trip") {
  fixture::Rng rng(41);
  std::uniform_real_distribution<double> lat(-kMaxLatitude, kMaxLatitude), lon(-180, 180);
  std::uniform_int_distribution<int> zoom(0, kMaxZoom);
  for (int i = 0; i < 2000; ++i) {
    const LatLon g{lat(rng), lon(rng)};
    const int z = zoom(rng);
    const LatLon back = world_px_to_latlon(latlon_to_world_px(g, z), z);
    CHECK(std::abs(back.lat - g.lat) < 1e-9);
    CHECK(std::abs(back.lon - g.lon) < 1e-9);
  }
}

TEST_CASE("three-point fits") {
  check_affine(fit({{0, 0}, {1, 0}, {0, 1}}, {{0, 0}, {1, 0}, {0, 1}}), AffineTransform::identity());
  check_affine(fit({{0, 0}, {1, 0}, {0, 1}}, {{10, 5}, {11, 5}, {10, 6}}), {1, 0, 10, 0, 1, 5});
  check_affine(fit({{0, 0}, {1, 0}, {0, 1}}, {{0, 0}, {0, 2}, {-2, 0}}), {0, -2, 0, 2, 0, 0});
  CHECK(code_of([] { fit({{0, 0}, {1, 1}, {2, 2}}, {{0, 0}, {1, 0}, {0, 1}}); }) ==
        ErrorCode::DegenerateControlPoints);
  CHECK(code_of([] { fit({{0, 0}, {1, 0}}, {{0, 0}, {1, 0}}); }) == ErrorCode::DegenerateControlPoints);
  CHECK(code_of([] { fit({{0, 0}, {1, 0}, {0, 1}}, {{0, 0}, {1, 0}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { fit({{0, 0}, {1, 0}, {0, 1}}, {{5, 5}, {6, 6}, {7, 7}}); }) ==
        ErrorCode::SingularTransform);
}

TEST_CASE("least squares") {
  fixture::Rng rng(42);
  std::uniform_real_distribution<double> coord(0, 500);
  for (int trial = 0; trial < 200; ++trial) {
    const AffineTransform t = fixture::random_affine(rng, 1e5);
    std::vector<Point2> src, dst;
    const int n = std::uniform_int_distribution<int>(4, 12)(rng);
    for (int i = 0; i < n; ++i) {
      src.push_back({coord(rng), coord(rng)});
      dst.push_back(apply_affine(t, src.back()));
    }
    check_affine(estimate_affine(src, dst), t);
  }
  // Four noisy points: residuals are orthogonal to the design columns.
  const std::vector<Point2> src{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  const std::vector<Point2> dst{{0, 0}, {1, 0}, {0, 1}, {1.2, 0.9}};
  const AffineTransform t = estimate_affine(src, dst);
  double sx = 0, sy = 0, sxx = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const Point2 r{apply_affine(t, src[i]).x - dst[i].x, apply_affine(t, src[i]).y - dst[i].y};
    sx += r.x;
    sy += r.y;
    sxx += r.x * src[i].x;
  }
  CHECK(std::abs(sx) < 1e-12);
  CHECK(std::abs(sy) < 1e-12);
  CHECK(std::abs(sxx) < 1e-12);
  const std::vector<Point2> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  CHECK(code_of([&] { estimate_affine(line, dst); }) == ErrorCode::DegenerateControlPoints);
}

TEST_CASE("three points via the least-squares normal equations agree") {
  fixture::Rng rng(43);
  std::uniform_real_distribution<double> coord(0, 300);
  for (int trial = 0; trial < 200; ++trial) {
    const AffineTransform t = fixture::random_affine(rng, 1e4);
    std::vector<Point2> src, dst;
    for (int i = 0; i < 3; ++i) {
      src.push_back({coord(rng), coord(rng)});
      dst.push_back(apply_affine(t, src.back()));
    }
    AffineTransform exact;
    try {
      exact = estimate_affine(src, dst);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateControlPoints);
      continue;
    }
    // A duplicated pair leaves the least-squares optimum unchanged.
    auto src4 = src, dst4 = dst;
    src4.push_back(src[0]);
    dst4.push_back(dst[0]);
    check_affine(estimate_affine(src4, dst4), exact, 1e-8);
    for (int i = 0; i < 3; ++i) {
      const Point2 q = apply_affine(exact, src[i]);
      CHECK(std::abs(q.x - dst[i].x) <= 1e-9 * (1 + std::abs(dst[i].x)));
      CHECK(std::abs(q.y - dst[i].y) <= 1e-9 * (1 + std::abs(dst[i].y)));
    }
  }
}

TEST_CASE("transform algebra") {
  check_affine(invert_affine(AffineTransform::identity()), AffineTransform::identity());
  check_affine(invert_affine({2, 0, 0, 0, 2, 0}), {0.5, 0, 0, 0, 0.5, 0});
  CHECK(code_of([] { invert_affine({1, 1, 0, 1, 1, 0}); }) == ErrorCode::SingularTransform);
  const AffineTransform shift{1, 0, 3, 0, 1, -2}, scale{2, 0, 0, 0, 3, 0};
  const Point2 p = apply_affine(compose(shift, scale), {1, 1});
  CHECK(p == Point2{5, 1});
  fixture::Rng rng(44);
  for (int trial = 0; trial < 200; ++trial) {
    const AffineTransform t = fixture::random_affine(rng, 1000);
    check_affine(compose(t, invert_affine(t)), AffineTransform::identity());
    check_affine(compose(invert_affine(t), t), AffineTransform::identity());
  }
}

TEST_CASE("geographic control points") {
  const AffineTransform truth{0.8, 0.1, 34000000.0, -0.05, 0.9, 22000000.0};
  std::vector<ControlPointPair> pairs;
  for (const Point2 img : {Point2{0, 0}, Point2{400, 10}, Point2{30, 300}}) {
    const Point2 world = apply_affine(truth, img);
    pairs.push_back({img, world_px_to_latlon(world, 18)});
  }
  const GeoReference g = estimate_affine(pairs, 18);
  CHECK(g.anchor_zoom == 18);
  check_affine(g.transform, truth, 1e-6);
  CHECK(code_of([&] { estimate_affine(pairs, 23); }) == ErrorCode::OutOfProjectionBounds);
  CHECK(code_of([] { make_georeference({1, 1, 0, 1, 1, 0}, 10); }) == ErrorCode::SingularTransform);
  CHECK(code_of([] { make_georeference(AffineTransform::identity(), -2); }) ==
        ErrorCode::OutOfProjectionBounds);
}
