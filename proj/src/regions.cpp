#include "subseg/regions.hpp"

#include <algorithm>
#include <cmath>

#include "subseg/error.hpp"
#include "subseg/isolate.hpp"

namespace subseg {
namespace {

struct Tap {
  int lo = 0;  // byte offset of the lower sample
  int hi = 0;
  int weight = 0;  // weight of hi, in 1/kOne
};

constexpr int kShift = 11;
constexpr int kOne = 1 << kShift;

// Half-pixel-centre sampling positions, clamped to the source. `stride` converts sample
// indices into byte offsets.
std::vector<Tap> taps(int src, int dst, int stride) {
  std::vector<Tap> out(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    const double s = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(src - 1));
    const int lo = static_cast<int>(std::floor(s));
    const int hi = std::min(lo + 1, src - 1);
    out[i] = {lo * stride, hi * stride, static_cast<int>(std::lround((s - lo) * kOne))};
  }
  return out;
}

// Fixed-point bilinear resample; exact on constant regions and at unit scale.
RgbImage bilinear(const RgbImage& img, int w, int h) {
  if (img.width == w && img.height == h) return img;
  const auto tx = taps(img.width, w, 3);
  const auto ty = taps(img.height, h, img.width * 3);
  RgbImage out(w, h);
  std::uint8_t* dst = out.data.data();
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* r0 = img.data.data() + ty[y].lo;
    const std::uint8_t* r1 = img.data.data() + ty[y].hi;
    const int wy = ty[y].weight;
    for (int x = 0; x < w; ++x) {
      const Tap& u = tx[x];
      const int wx = u.weight;
      for (int c = 0; c < 3; ++c) {
        const int top = r0[u.lo + c] * (kOne - wx) + r0[u.hi + c] * wx;
        const int bot = r1[u.lo + c] * (kOne - wx) + r1[u.hi + c] * wx;
        *dst++ = static_cast<std::uint8_t>(
            (top * (kOne - wy) + bot * wy + (1 << (2 * kShift - 1))) >> (2 * kShift));
      }
    }
  }
  return out;
}

// Copy of `box` with pixels outside `support` painted with fill.
RgbImage masked_crop(const RgbImage& img, const Box& box, const ObjectMask& support, Rgb fill) {
  RgbImage out(box.width(), box.height(), fill);
  for (int y = 0; y < box.height(); ++y) {
    for (int x = 0; x < box.width(); ++x) {
      if (support.at(x, y)) out.set(x, y, img.at(box.x0 + x, box.y0 + y));
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(Level level) {
  return level == Level::Object ? "object" : "subcomponent";
}

Level parse_level(std::string_view s) {
  if (s == "object") return Level::Object;
  if (s == "subcomponent") return Level::Subcomponent;
  throw usage_error("unknown level '" + std::string(s) + "' (expected object|subcomponent)");
}

std::string RegionCrop::file_name() const {
  return source_image_id + "_" + std::string(to_string(level)) + "_" +
         std::to_string(level == Level::Object ? 0 : segment_id) + ".png";
}

RgbImage pad_rescale(const RgbImage& img, int target_w, int target_h, Rgb fill) {
  if (target_w < 1 || target_h < 1) throw usage_error("pad_rescale: targets must be positive");
  const long lhs = static_cast<long>(img.width) * target_h;
  const long rhs = static_cast<long>(img.height) * target_w;
  int pw = img.width, ph = img.height;
  if (lhs > rhs) {
    ph = std::max(img.height,
                  static_cast<int>(std::lround(static_cast<double>(img.width) * target_h / target_w)));
  } else if (lhs < rhs) {
    pw = std::max(img.width,
                  static_cast<int>(std::lround(static_cast<double>(img.height) * target_w / target_h)));
  }
  if (pw == img.width && ph == img.height) return bilinear(img, target_w, target_h);
  RgbImage padded(pw, ph, fill);
  const int ox = (pw - img.width) / 2, oy = (ph - img.height) / 2;
  for (int y = 0; y < img.height; ++y) {
    std::copy_n(img.data.begin() + static_cast<std::ptrdiff_t>(img.index(0, y)), img.width * 3,
                padded.data.begin() + static_cast<std::ptrdiff_t>(padded.index(ox, oy + y)));
  }
  return bilinear(padded, target_w, target_h);
}

RegionCrop extract_object_region(const RgbImage& img, const ObjectMask& mask,
                                 std::string image_id, Rgb fill) {
  if (img.width != mask.width || img.height != mask.height) {
    throw data_error("object mask dimensions do not match the image");
  }
  const Box box = mask_bounds(mask);
  if (box.degenerate()) throw data_error("empty object mask");
  RegionCrop crop;
  crop.source_box = box;
  crop.segment_id = kObjectSegment;
  crop.level = Level::Object;
  crop.source_image_id = std::move(image_id);
  crop.support = ObjectMask(box.width(), box.height());
  for (int y = 0; y < box.height(); ++y) {
    for (int x = 0; x < box.width(); ++x) crop.support.set(x, y, mask.at(box.x0 + x, box.y0 + y));
  }
  crop.pixels = pad_rescale(masked_crop(img, box, crop.support, fill), kObjectWidth,
                            kObjectHeight, fill);
  return crop;
}

std::vector<RegionCrop> extract_subcomponent_regions(const RgbImage& img,
                                                     const SuperpixelMap& map,
                                                     std::string image_id, Rgb fill) {
  if (img.width != map.width || img.height != map.height) {
    throw data_error("label map dimensions do not match the image");
  }
  std::vector<Box> boxes(map.num_segments, Box{map.width, map.height, 0, 0});
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const std::int32_t l = map.at(x, y);
      if (l < 0) continue;
      Box& b = boxes[l];
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x + 1);
      b.y1 = std::max(b.y1, y + 1);
    }
  }
  std::vector<RegionCrop> crops;
  crops.reserve(boxes.size());
  for (int id = 0; id < map.num_segments; ++id) {
    const Box& box = boxes[id];
    if (box.degenerate()) continue;
    RegionCrop crop;
    crop.source_box = box;
    crop.segment_id = id;
    crop.level = Level::Subcomponent;
    crop.source_image_id = image_id;
    crop.support = ObjectMask(box.width(), box.height());
    for (int y = 0; y < box.height(); ++y) {
      for (int x = 0; x < box.width(); ++x) {
        crop.support.set(x, y, map.at(box.x0 + x, box.y0 + y) == id);
      }
    }
    crop.pixels = pad_rescale(masked_crop(img, box, crop.support, fill), kSubcomponentWidth,
                              kSubcomponentHeight, fill);
    crops.push_back(std::move(crop));
  }
  return crops;
}

}  // namespace subseg
