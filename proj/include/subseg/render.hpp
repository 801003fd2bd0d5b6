#pragma once

#include <span>
#include <vector>

#include "subseg/classify.hpp"
#include "subseg/image.hpp"
#include "subseg/slic.hpp"

namespace subseg {

struct OverlaySpec {
  int contour_thickness = 2;
  Rgb segment_contour{255, 105, 180};
  Rgb anomaly{255, 0, 0};
  Rgb benign{0, 255, 0};
};

/// Non-background pixels with a 4-neighbour of a different label. Neighbours outside the
/// image do not count, so the image border is never a boundary by itself.
std::vector<std::uint8_t> boundary_pixels(const SuperpixelMap& map);

/// Paints the boundary, widened to thickness t by a (2t-1)x(2t-1) square, with the
/// segment contour colour. Pixels outside the widened boundary are untouched.
RgbImage draw_segment_contours(const RgbImage& img, const SuperpixelMap& map,
                               const OverlaySpec& spec = {});

/// As draw_segment_contours, coloured red where a boundary touches an anomalous segment
/// (on either side) and green otherwise. `labels[id]` is the class of segment `id`.
RgbImage draw_labeled_contours(const RgbImage& img, const SuperpixelMap& map,
                               std::span<const ClassLabel> labels, const OverlaySpec& spec = {});

}  // namespace subseg
