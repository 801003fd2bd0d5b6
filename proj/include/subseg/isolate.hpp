#pragma once

#include <filesystem>
#include <optional>

#include "subseg/image.hpp"

namespace subseg {

/// Loads an 8-bit grayscale PNG; values above 127 are members. When `expected` is given the
/// mask must match its dimensions.
ObjectMask load_mask(const std::filesystem::path& path,
                     std::optional<std::pair<int, int>> expected = std::nullopt);
void save_mask(const std::filesystem::path& path, const ObjectMask& mask);

/// Stand-in object detector: pixels whose luminance differs from the median border
/// luminance by more than `luminance_threshold`, reduced to the largest 4-connected
/// component (ties to the first in scan order). Throws a data error if nothing differs.
ObjectMask threshold_segment(const RgbImage& img, double luminance_threshold);

/// Copies member pixels and paints the rest with `fill`.
RgbImage apply_mask(const RgbImage& img, const ObjectMask& mask, Rgb fill = kWhite);

/// Tight box around member pixels; degenerate for an empty mask.
Box mask_bounds(const ObjectMask& mask);

/// Keeps only the largest 4-connected component.
ObjectMask largest_component(const ObjectMask& mask);

}  // namespace subseg
