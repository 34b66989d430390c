#include "aerolabel/png_io.hpp"

#include <png.h>

#include <cstring>
#include <vector>

#include "aerolabel/error.hpp"

namespace aerolabel {

namespace {

std::string encode(png_image& img, const void* buffer) {
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, buffer, 0, nullptr)) {
    throw Error(ErrorCode::IoFailure, std::string("png encode failed: ") + img.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, buffer, 0, nullptr)) {
    throw Error(ErrorCode::IoFailure, std::string("png encode failed: ") + img.message);
  }
  out.resize(size);
  return out;
}

}  // namespace

std::string encode_png(const RasterImage& image) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = image.width();
  img.height = image.height();
  img.format = PNG_FORMAT_RGB;
  static_assert(sizeof(Rgb8) == 3);
  return encode(img, image.pixels().data());
}

std::string encode_png_rgba(std::uint32_t width, std::uint32_t height, std::span<const Rgba8> pixels) {
  if (std::size_t(width) * height != pixels.size()) {
    throw Error(ErrorCode::DimensionMismatch, "pixel buffer does not match png dimensions");
  }
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = width;
  img.height = height;
  img.format = PNG_FORMAT_RGBA;
  static_assert(sizeof(Rgba8) == 4);
  return encode(img, pixels.data());
}

RasterImage decode_png(std::string_view bytes) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::BadFormat, std::string("not a readable png: ") + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  if (img.width == 0 || img.height == 0) {
    png_image_free(&img);
    throw Error(ErrorCode::BadFormat, "png has zero size");
  }
  std::vector<Rgb8> pixels(std::size_t(img.width) * img.height);
  // Opaque black background for any alpha channel.
  png_color background{0, 0, 0};
  if (!png_image_finish_read(&img, &background, pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::BadFormat, std::string("png decode failed: ") + img.message);
  }
  return RasterImage(img.width, img.height, std::move(pixels));
}

}  // namespace aerolabel
