#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "subseg/image.hpp"
#include "subseg/slic.hpp"

namespace subseg {

enum class Level { Object, Subcomponent };

std::string_view to_string(Level level);
Level parse_level(std::string_view s);

inline constexpr int kObjectWidth = 224;
inline constexpr int kObjectHeight = 224;
inline constexpr int kSubcomponentWidth = 190;
inline constexpr int kSubcomponentHeight = 150;

/// segment_id carried by object-level crops.
inline constexpr int kObjectSegment = -1;

struct RegionCrop {
  RgbImage pixels;
  Box source_box;
  int segment_id = kObjectSegment;
  Level level = Level::Object;
  std::string source_image_id;
  /// Membership of each source_box pixel in the region.
  ObjectMask support;

  /// `<image_id>_<level>_<segment_id>.png`; object crops use segment id 0.
  std::string file_name() const;
};

/// Symmetric constant padding to the target aspect ratio followed by a bilinear resample.
RgbImage pad_rescale(const RgbImage& img, int target_w, int target_h, Rgb fill = kWhite);

/// Tight crop of the mask; non-members become fill; rescaled to 224x224.
RegionCrop extract_object_region(const RgbImage& img, const ObjectMask& mask,
                                 std::string image_id = {}, Rgb fill = kWhite);

/// One 190x150 crop per non-background segment, ascending segment id.
std::vector<RegionCrop> extract_subcomponent_regions(const RgbImage& img,
                                                     const SuperpixelMap& map,
                                                     std::string image_id = {},
                                                     Rgb fill = kWhite);

}  // namespace subseg
