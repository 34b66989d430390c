#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "aerolabel/raster.hpp"

namespace aerolabel {

/// Lossless PNG encoding through libpng. Throws IoFailure.
std::string encode_png(const RasterImage& image);
std::string encode_png_rgba(std::uint32_t width, std::uint32_t height, std::span<const Rgba8> pixels);

/// Any PNG colour type, converted to RGB8 (alpha is dropped). Throws BadFormat.
RasterImage decode_png(std::string_view bytes);

}  // namespace aerolabel
