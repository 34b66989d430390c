#pragma once

#include <cstdint>
#include <random>

#include "aerolabel/project.hpp"

namespace fixture {

using Rng = std::mt19937_64;

/// Solid disc painted onto `image`; pixel centres within `radius` of (cx, cy).
void paint_disc(aerolabel::RasterImage& image, double cx, double cy, double radius, aerolabel::Rgb8 color);

/// 64x64: two solid discs (red, green) on black.
aerolabel::RasterImage two_discs();

/// 64x64: red and yellow discs on a blue field. Three colour regions.
aerolabel::RasterImage three_blobs();

/// Random rectangles of random colours over a random background, plus noise.
aerolabel::RasterImage random_blocky_image(Rng& rng, std::uint32_t w, std::uint32_t h);

/// Random id raster built from a handful of rectangles and scattered zeros.
std::vector<aerolabel::SegmentId> random_ids(Rng& rng, std::uint32_t w, std::uint32_t h, int max_id);

/// Random invertible affine with linear part in [-4, 4] and |det| >= 0.25.
aerolabel::AffineTransform random_affine(Rng& rng, double translation_range);

/// A fully populated random project (image, segments, classes, class map,
/// optional georeference, control points, params, job history).
aerolabel::Project random_project(Rng& rng);

/// Random project whose footprint is guaranteed to cover tile (z, x, y) partly.
aerolabel::Project random_georeferenced_project(Rng& rng, int& z, std::uint32_t& x, std::uint32_t& y);

}  // namespace fixture
