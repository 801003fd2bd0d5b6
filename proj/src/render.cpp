#include "subseg/render.hpp"

#include <algorithm>

#include "subseg/error.hpp"

namespace subseg {
namespace {

void check_dims(const RgbImage& img, const SuperpixelMap& map) {
  if (img.width != map.width || img.height != map.height) {
    throw data_error("overlay: label map dimensions do not match the image");
  }
}

// kind: 0 none, 1 benign/plain, 2 anomaly. Widening keeps the strongest kind.
RgbImage paint(const RgbImage& img, const std::vector<std::uint8_t>& kind, int thickness,
               const Rgb palette[3]) {
  if (thickness < 1) throw usage_error("contour thickness must be at least 1");
  const int w = img.width, h = img.height, r = thickness - 1;
  std::vector<std::uint8_t> grown = kind;
  if (r > 0) {
    // Separable max filter: rows, then columns.
    std::vector<std::uint8_t> tmp(kind.size(), 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        std::uint8_t m = 0;
        for (int dx = std::max(0, x - r); dx <= std::min(w - 1, x + r); ++dx) {
          m = std::max(m, kind[static_cast<std::size_t>(y) * w + dx]);
        }
        tmp[static_cast<std::size_t>(y) * w + x] = m;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        std::uint8_t m = 0;
        for (int dy = std::max(0, y - r); dy <= std::min(h - 1, y + r); ++dy) {
          m = std::max(m, tmp[static_cast<std::size_t>(dy) * w + x]);
        }
        grown[static_cast<std::size_t>(y) * w + x] = m;
      }
    }
  }
  RgbImage out = img;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint8_t k = grown[static_cast<std::size_t>(y) * w + x];
      if (k) out.set(x, y, palette[k]);
    }
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> boundary_pixels(const SuperpixelMap& map) {
  const int w = map.width, h = map.height;
  std::vector<std::uint8_t> out(map.labels.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::int32_t l = map.at(x, y);
      if (l == kBackgroundLabel) continue;
      const bool edge = (x > 0 && map.at(x - 1, y) != l) || (x < w - 1 && map.at(x + 1, y) != l) ||
                        (y > 0 && map.at(x, y - 1) != l) || (y < h - 1 && map.at(x, y + 1) != l);
      out[static_cast<std::size_t>(y) * w + x] = edge ? 1 : 0;
    }
  }
  return out;
}

RgbImage draw_segment_contours(const RgbImage& img, const SuperpixelMap& map,
                               const OverlaySpec& spec) {
  check_dims(img, map);
  const Rgb palette[3] = {{}, spec.segment_contour, spec.segment_contour};
  return paint(img, boundary_pixels(map), spec.contour_thickness, palette);
}

RgbImage draw_labeled_contours(const RgbImage& img, const SuperpixelMap& map,
                               std::span<const ClassLabel> labels, const OverlaySpec& spec) {
  check_dims(img, map);
  if (labels.size() < static_cast<std::size_t>(map.num_segments)) {
    throw data_error("overlay: missing label for segment " + std::to_string(labels.size()));
  }
  auto anomalous = [&](std::int32_t id) {
    if (id == kBackgroundLabel) return false;
    if (id < 0 || static_cast<std::size_t>(id) >= labels.size()) {
      throw data_error("overlay: no label for segment " + std::to_string(id));
    }
    return labels[id] == ClassLabel::Anomaly;
  };
  std::vector<std::uint8_t> kind = boundary_pixels(map);
  const int w = map.width, h = map.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t& k = kind[static_cast<std::size_t>(y) * w + x];
      if (!k) continue;
      bool red = anomalous(map.at(x, y));
      if (x > 0) red = red || anomalous(map.at(x - 1, y));
      if (x < w - 1) red = red || anomalous(map.at(x + 1, y));
      if (y > 0) red = red || anomalous(map.at(x, y - 1));
      if (y < h - 1) red = red || anomalous(map.at(x, y + 1));
      k = red ? 2 : 1;
    }
  }
  const Rgb palette[3] = {{}, spec.benign, spec.anomaly};
  return paint(img, kind, spec.contour_thickness, palette);
}

}  // namespace subseg
