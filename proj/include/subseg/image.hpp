#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace subseg {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kWhite{255, 255, 255};

/// Row-major interleaved 8-bit RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h, Rgb fill = kWhite);

  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width + x) * 3;
  }
  Rgb at(int x, int y) const {
    const std::size_t i = index(x, y);
    return {data[i], data[i + 1], data[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = index(x, y);
    data[i] = c.r;
    data[i + 1] = c.g;
    data[i + 2] = c.b;
  }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool valid() const {
    return width >= 1 && height >= 1 && data.size() == pixel_count() * 3;
  }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Row-major interleaved CIELAB raster.
struct LabImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width + x) * 3;
  }
  std::array<double, 3> at(int x, int y) const {
    const std::size_t i = index(x, y);
    return {data[i], data[i + 1], data[i + 2]};
  }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

/// Binary membership raster; nonzero bytes are members.
struct ObjectMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  ObjectMask() = default;
  ObjectMask(int w, int h, bool value = false)
      : width(w), height(h), bits(static_cast<std::size_t>(w) * h, value ? 1 : 0) {}

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  friend bool operator==(const ObjectMask&, const ObjectMask&) = default;
};

/// Inclusive-exclusive pixel box [x0,x1) x [y0,y1).
struct Box {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool degenerate() const { return x1 <= x0 || y1 <= y0; }
  friend bool operator==(const Box&, const Box&) = default;
};

}  // namespace subseg
