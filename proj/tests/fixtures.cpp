#include "fixtures.hpp"

#include <cmath>
#include <numbers>

#include "aerolabel/classification.hpp"

namespace fixture {

using namespace aerolabel;

namespace {

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Rgb8 random_color(Rng& rng) {
  return {std::uint8_t(uniform_int(rng, 0, 255)), std::uint8_t(uniform_int(rng, 0, 255)),
          std::uint8_t(uniform_int(rng, 0, 255))};
}

std::string random_name(Rng& rng) {
  static const std::vector<std::string> parts = {"oak", "pine", "roof", "road", "field", "\"q\"",
                                                 "caf\xC3\xA9", " ", "water", "crop", "\\", "x"};
  std::string out;
  const int n = uniform_int(rng, 1, 3);
  for (int i = 0; i < n; ++i) out += parts[uniform_int(rng, 0, int(parts.size()) - 1)];
  return out;
}

}  // namespace

void paint_disc(RasterImage& image, double cx, double cy, double radius, Rgb8 color) {
  for (std::uint32_t r = 0; r < image.height(); ++r) {
    for (std::uint32_t c = 0; c < image.width(); ++c) {
      const double dx = c + 0.5 - cx, dy = r + 0.5 - cy;
      if (dx * dx + dy * dy <= radius * radius) image.at(c, r) = color;
    }
  }
}

RasterImage two_discs() {
  RasterImage image(64, 64, Rgb8{0, 0, 0});
  paint_disc(image, 18, 20, 11, {230, 20, 20});
  paint_disc(image, 44, 42, 14, {20, 210, 40});
  return image;
}

RasterImage three_blobs() {
  RasterImage image(64, 64, Rgb8{40, 90, 200});
  paint_disc(image, 20, 20, 10, {220, 30, 30});
  paint_disc(image, 44, 40, 12, {240, 220, 40});
  return image;
}

RasterImage random_blocky_image(Rng& rng, std::uint32_t w, std::uint32_t h) {
  RasterImage image(w, h, random_color(rng));
  const int blocks = uniform_int(rng, 2, 8);
  for (int b = 0; b < blocks; ++b) {
    const Rgb8 color = random_color(rng);
    const std::uint32_t c0 = uniform_int(rng, 0, int(w) - 1), r0 = uniform_int(rng, 0, int(h) - 1);
    const std::uint32_t c1 = std::min<std::uint32_t>(w, c0 + uniform_int(rng, 1, int(w) / 2 + 1));
    const std::uint32_t r1 = std::min<std::uint32_t>(h, r0 + uniform_int(rng, 1, int(h) / 2 + 1));
    for (std::uint32_t r = r0; r < r1; ++r) {
      for (std::uint32_t c = c0; c < c1; ++c) image.at(c, r) = color;
    }
  }
  const int noise = uniform_int(rng, 0, 12);
  if (noise > 0) {
    for (std::uint32_t r = 0; r < h; ++r) {
      for (std::uint32_t c = 0; c < w; ++c) {
        Rgb8& px = image.at(c, r);
        auto jitter = [&](std::uint8_t v) {
          return std::uint8_t(std::clamp(int(v) + uniform_int(rng, -noise, noise), 0, 255));
        };
        px = {jitter(px.r), jitter(px.g), jitter(px.b)};
      }
    }
  }
  return image;
}

std::vector<SegmentId> random_ids(Rng& rng, std::uint32_t w, std::uint32_t h, int max_id) {
  std::vector<SegmentId> ids(std::size_t(w) * h, SegmentId(uniform_int(rng, 0, max_id)));
  const int blocks = uniform_int(rng, 1, 6);
  for (int b = 0; b < blocks; ++b) {
    const SegmentId id = uniform_int(rng, 0, max_id);
    const std::uint32_t c0 = uniform_int(rng, 0, int(w) - 1), r0 = uniform_int(rng, 0, int(h) - 1);
    const std::uint32_t c1 = std::min<std::uint32_t>(w, c0 + uniform_int(rng, 1, int(w)));
    const std::uint32_t r1 = std::min<std::uint32_t>(h, r0 + uniform_int(rng, 1, int(h)));
    for (std::uint32_t r = r0; r < r1; ++r) {
      for (std::uint32_t c = c0; c < c1; ++c) ids[r * w + c] = id;
    }
  }
  const int speckles = uniform_int(rng, 0, int(w * h) / 8);
  for (int i = 0; i < speckles; ++i) ids[uniform_int(rng, 0, int(ids.size()) - 1)] = uniform_int(rng, 0, max_id);
  return ids;
}

AffineTransform random_affine(Rng& rng, double translation_range) {
  while (true) {
    AffineTransform t{uniform(rng, -4, 4), uniform(rng, -4, 4), uniform(rng, 0, translation_range),
                      uniform(rng, -4, 4), uniform(rng, -4, 4), uniform(rng, 0, translation_range)};
    if (std::abs(t.det()) >= 0.25) return t;
  }
}

Project random_project(Rng& rng) {
  Project p;
  p.id = "p" + std::to_string(rng() % 1000000);
  p.name = random_name(rng);
  p.created = std::int64_t(rng() % 2000000000);
  p.modified = p.created + std::int64_t(rng() % 100000);
  p.segmenter = {uniform(rng, 0, 2000), std::uint32_t(uniform_int(rng, 1, 64))};
  p.clustering.propagate = uniform_int(rng, 0, 1);
  p.clustering.standardize = uniform_int(rng, 0, 1);
  if (uniform_int(rng, 0, 1)) {
    p.clustering.k.reset();
    p.clustering.t = uniform(rng, 0, 3);
  } else {
    p.clustering.k = std::size_t(uniform_int(rng, 1, 9));
  }
  std::vector<ClassDef> defs{default_class_def()};
  const int extra = uniform_int(rng, 0, 4);
  ClassId next = 1;
  for (int i = 0; i < extra; ++i) {
    const Rgb8 c = random_color(rng);
    next += ClassId(uniform_int(rng, 1, 3));
    defs.push_back({next, random_name(rng),
                    {c.r, c.g, c.b, std::uint8_t(uniform_int(rng, 0, 255))}});
  }
  p.classes = ClassSet(defs);
  const int jobs = uniform_int(rng, 0, 3);
  for (int i = 0; i < jobs; ++i) {
    p.jobs.push_back({"job" + std::to_string(i), i % 2 ? "cluster" : "segment",
                      i % 3 ? "DONE" : "FAILED", i % 3 ? "" : random_name(rng)});
  }

  if (uniform_int(rng, 0, 9) == 0) return p;  // no image yet

  const std::uint32_t w = uniform_int(rng, 1, 24), h = uniform_int(rng, 1, 24);
  set_image(p, random_blocky_image(rng, w, h));
  set_segments(p, SegmentMap(w, h, random_ids(rng, w, h, uniform_int(rng, 1, 40))));
  for (auto& [segment, cls] : p.class_map) cls = defs[uniform_int(rng, 0, int(defs.size()) - 1)].id;

  if (uniform_int(rng, 0, 1)) {
    const int z0 = uniform_int(rng, 0, 22);
    p.georef = GeoReference{random_affine(rng, world_size(z0)), z0};
    const int points = uniform_int(rng, 0, 5);
    for (int i = 0; i < points; ++i) {
      p.control_points.push_back({{uniform(rng, 0, w), uniform(rng, 0, h)},
                                  {uniform(rng, -85, 85), uniform(rng, -180, 180)}});
    }
  }
  return p;
}

Project random_georeferenced_project(Rng& rng, int& z, std::uint32_t& x, std::uint32_t& y) {
  Project p;
  p.id = "tile" + std::to_string(rng() % 1000000);
  const std::uint32_t w = uniform_int(rng, 20, 120), h = uniform_int(rng, 20, 120);
  set_image(p, random_blocky_image(rng, w, h));
  set_segments(p, SegmentMap(w, h, random_ids(rng, w, h, 12)));
  std::vector<ClassDef> defs{default_class_def()};
  for (ClassId id = 2; id <= 4; ++id) {
    const Rgb8 c = random_color(rng);
    defs.push_back({id, "c" + std::to_string(id), {c.r, c.g, c.b, 255}});
  }
  p.classes = ClassSet(defs);
  for (auto& [segment, cls] : p.class_map) cls = ClassId(uniform_int(rng, 1, 4));

  const int z0 = uniform_int(rng, 8, 18);
  const double size0 = world_size(z0);
  const double scale = uniform(rng, 0.3, 3.0);
  const double angle = uniform(rng, 0, 2 * std::numbers::pi);
  const double shear = uniform(rng, -0.3, 0.3);
  AffineTransform t{scale * std::cos(angle), scale * (-std::sin(angle) + shear), 0,
                    scale * std::sin(angle), scale * std::cos(angle), 0};
  const Point2 target{uniform(rng, 0.3, 0.7) * size0, uniform(rng, 0.3, 0.7) * size0};
  const Point2 mapped_center = apply_affine(t, {w / 2.0, h / 2.0});
  t.c = target.x - mapped_center.x;
  t.f = target.y - mapped_center.y;
  p.georef = GeoReference{t, z0};

  z = std::max(0, z0 + uniform_int(rng, -2, 1));
  const double factor = std::ldexp(1.0, z0 - z);
  const Point2 probe = apply_affine(t, {uniform(rng, 0, w), uniform(rng, 0, h)});
  x = std::uint32_t(probe.x / factor / 256.0);
  y = std::uint32_t(probe.y / factor / 256.0);
  return p;
}

}  // namespace fixture
