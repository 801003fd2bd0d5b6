#include "subseg/isolate.hpp"

#include <algorithm>
#include <vector>

#include "subseg/error.hpp"
#include "subseg/png_io.hpp"

namespace subseg {
namespace {

double luminance(Rgb c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; }

}  // namespace

ObjectMask load_mask(const std::filesystem::path& path,
                     std::optional<std::pair<int, int>> expected) {
  const GrayImage gray = read_gray8_png(path);
  if (expected && (gray.width != expected->first || gray.height != expected->second)) {
    throw data_error("mask " + path.string() + " does not match its image dimensions");
  }
  ObjectMask mask(gray.width, gray.height);
  for (std::size_t i = 0; i < gray.data.size(); ++i) mask.bits[i] = gray.data[i] > 127 ? 1 : 0;
  return mask;
}

void save_mask(const std::filesystem::path& path, const ObjectMask& mask) {
  GrayImage gray{mask.width, mask.height, std::vector<std::uint8_t>(mask.bits.size())};
  for (std::size_t i = 0; i < mask.bits.size(); ++i) gray.data[i] = mask.bits[i] ? 255 : 0;
  write_gray8_png(path, gray);
}

Box mask_bounds(const ObjectMask& mask) {
  Box b{mask.width, mask.height, 0, 0};
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x + 1);
      b.y1 = std::max(b.y1, y + 1);
    }
  }
  if (b.degenerate()) return Box{};
  return b;
}

ObjectMask largest_component(const ObjectMask& mask) {
  const std::size_t n = mask.bits.size();
  std::vector<std::int32_t> comp(n, -1);
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (!mask.bits[start] || comp[start] >= 0) continue;
    const auto id = static_cast<std::int32_t>(sizes.size());
    std::size_t size = 0;
    comp[start] = id;
    stack.assign(1, start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++size;
      const int x = static_cast<int>(p % mask.width), y = static_cast<int>(p / mask.width);
      const std::size_t nb[4] = {p - 1, p + 1, p - mask.width, p + mask.width};
      const bool ok[4] = {x > 0, x < mask.width - 1, y > 0, y < mask.height - 1};
      for (int k = 0; k < 4; ++k) {
        if (ok[k] && mask.bits[nb[k]] && comp[nb[k]] < 0) {
          comp[nb[k]] = id;
          stack.push_back(nb[k]);
        }
      }
    }
    sizes.push_back(size);
  }
  ObjectMask out(mask.width, mask.height);
  if (sizes.empty()) return out;
  const auto best = static_cast<std::int32_t>(
      std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  for (std::size_t p = 0; p < n; ++p) out.bits[p] = comp[p] == best ? 1 : 0;
  return out;
}

ObjectMask threshold_segment(const RgbImage& img, double luminance_threshold) {
  std::vector<double> border;
  for (int x = 0; x < img.width; ++x) {
    border.push_back(luminance(img.at(x, 0)));
    if (img.height > 1) border.push_back(luminance(img.at(x, img.height - 1)));
  }
  for (int y = 1; y + 1 < img.height; ++y) {
    border.push_back(luminance(img.at(0, y)));
    if (img.width > 1) border.push_back(luminance(img.at(img.width - 1, y)));
  }
  std::sort(border.begin(), border.end());
  const std::size_t h = border.size() / 2;
  const double reference = border.size() % 2 ? border[h] : 0.5 * (border[h - 1] + border[h]);

  ObjectMask raw(img.width, img.height);
  bool any = false;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double diff = luminance(img.at(x, y)) - reference;
      if (diff > luminance_threshold || -diff > luminance_threshold) {
        raw.set(x, y, true);
        any = true;
      }
    }
  }
  if (!any) throw data_error("no foreground: nothing differs from the background");
  return largest_component(raw);
}

RgbImage apply_mask(const RgbImage& img, const ObjectMask& mask, Rgb fill) {
  if (img.width != mask.width || img.height != mask.height) {
    throw data_error("apply_mask: mask dimensions do not match the image");
  }
  RgbImage out = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!mask.at(x, y)) out.set(x, y, fill);
    }
  }
  return out;
}

}  // namespace subseg
