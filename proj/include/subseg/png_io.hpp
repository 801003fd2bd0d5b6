#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "subseg/image.hpp"

namespace subseg {

/// Reads any 8-bit PNG as RGB. Alpha is dropped, gray is expanded.
RgbImage read_rgb_png(const std::filesystem::path& path);
void write_rgb_png(const std::filesystem::path& path, const RgbImage& img);

/// Raw 8-bit grayscale raster. Throws a data error for any other color type.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;
};
GrayImage read_gray8_png(const std::filesystem::path& path);
void write_gray8_png(const std::filesystem::path& path, const GrayImage& img);

struct Gray16Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> data;
};
Gray16Image read_gray16_png(const std::filesystem::path& path);
void write_gray16_png(const std::filesystem::path& path, const Gray16Image& img);

}  // namespace subseg
