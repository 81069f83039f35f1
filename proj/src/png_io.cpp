#include "formbench/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

#include "formbench/error.hpp"

namespace formbench {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error("cannot open " + path.string());
  return f;
}

[[noreturn]] void png_error_handler(png_structp, png_const_charp msg) { throw Error(msg); }
void png_warning_handler(png_structp, png_const_charp) {}

void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
               int color_type, std::size_t channels, const std::uint8_t* data) {
  auto tmp = path;
  tmp += ".tmp";
  {
    auto file = open_file(tmp, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                              png_warning_handler);
    if (!png) throw Error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    try {
      png_init_io(png, file.get());
      png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                   color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                   PNG_FILTER_TYPE_DEFAULT);
      png_write_info(png, info);
      for (std::size_t y = 0; y < height; ++y) {
        png_write_row(png, const_cast<png_bytep>(data + y * width * channels));
      }
      png_write_end(png, nullptr);
    } catch (...) {
      png_destroy_write_struct(&png, &info);
      throw;
    }
    png_destroy_write_struct(&png, &info);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

Raster read_png(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(path.string() + ": not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                           png_warning_handler);
  if (!png) throw Error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  Raster raster;
  try {
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const auto color = png_get_color_type(png, info);
    const auto depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (depth < 8) png_set_packing(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    raster.width = png_get_image_width(png, info);
    raster.height = png_get_image_height(png, info);
    raster.channels = png_get_channels(png, info);
    if (raster.channels != 1 && raster.channels != 3) {
      throw Error("unsupported channel count " + std::to_string(raster.channels));
    }
    raster.data.resize(raster.width * raster.height * raster.channels);
    const std::size_t stride = raster.width * raster.channels;
    for (std::size_t y = 0; y < raster.height; ++y) {
      png_read_row(png, raster.data.data() + y * stride, nullptr);
    }
    png_read_end(png, nullptr);
  } catch (const Error& e) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(path.string() + ": " + e.what());
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return raster;
}

GrayImage read_gray_png(const std::filesystem::path& path) {
  Raster r = read_png(path);
  if (r.channels == 1) return GrayImage(r.width, r.height, std::move(r.data));
  GrayImage out(r.width, r.height);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const auto* p = &r.data[3 * i];
    const double y = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(std::min(255.0, y)));
  }
  return out;
}

void write_gray_png(const GrayImage& image, const std::filesystem::path& path) {
  write_png(path, image.width, image.height, PNG_COLOR_TYPE_GRAY, 1, image.pixels.data());
}

void write_rgb_png(const Raster& raster, const std::filesystem::path& path) {
  if (raster.channels != 3) throw Error("write_rgb_png needs a 3-channel raster");
  write_png(path, raster.width, raster.height, PNG_COLOR_TYPE_RGB, 3, raster.data.data());
}

}  // namespace formbench
