#include <gtest/gtest.h>

#include <random>

#include "subseg/error.hpp"
#include "subseg/regions.hpp"

namespace subseg {
namespace {

constexpr Rgb kBlue{0, 0, 255};
constexpr Rgb kGreen{0, 255, 0};

// Bounding box of pixels where `pred` holds.
template <class Pred>
Box find_box(const RgbImage& img, Pred pred) {
  Box b{img.width, img.height, 0, 0};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!pred(img.at(x, y))) continue;
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x + 1);
      b.y1 = std::max(b.y1, y + 1);
    }
  }
  return b;
}

RgbImage noise(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  RgbImage img(w, h);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng() & 0xff);
  return img;
}

TEST(PadRescale, IdentityAtTargetSize) {
  const RgbImage img = noise(224, 224, 1);
  EXPECT_EQ(pad_rescale(img, 224, 224), img);
}

TEST(PadRescale, SinglePixelBecomesConstant) {
  const RgbImage one(1, 1, Rgb{12, 34, 56});
  const RgbImage out = pad_rescale(one, 190, 150, Rgb{12, 34, 56});
  EXPECT_EQ(out, RgbImage(190, 150, Rgb{12, 34, 56}));
}

TEST(PadRescale, ContentAspectPreserved) {
  // Whole-image content: 100x50 of a dark colour, padded with white to the 190:150 aspect.
  const RgbImage content(100, 50, Rgb{0, 0, 0});
  const RgbImage out = pad_rescale(content, 190, 150);
  ASSERT_EQ(out.width, 190);
  ASSERT_EQ(out.height, 150);
  const Box b = find_box(out, [](Rgb c) { return c.r < 128; });
  EXPECT_EQ(b.width(), 190);
  EXPECT_NEAR(b.height(), 190.0 / 2.0, 1.0);
  // Padding is symmetric.
  EXPECT_LE(std::abs(b.y0 - (150 - b.y1)), 1);

  // A marker rectangle inside the content keeps its 2:1 shape.
  RgbImage marked(100, 50, kWhite);
  for (int y = 10; y < 30; ++y) {
    for (int x = 10; x < 50; ++x) marked.set(x, y, Rgb{0, 0, 0});
  }
  const Box m = find_box(pad_rescale(marked, 190, 150), [](Rgb c) { return c.r < 128; });
  EXPECT_NEAR(m.width(), 40 * 1.9, 1.0);
  EXPECT_NEAR(m.height(), 20 * 1.9, 1.0);
}

TEST(PadRescale, TallInputPadsSideways) {
  const RgbImage content(20, 60, Rgb{0, 0, 0});
  const Box b = find_box(pad_rescale(content, 224, 224), [](Rgb c) { return c.r < 128; });
  EXPECT_EQ(b.height(), 224);
  EXPECT_NEAR(b.width(), 224.0 / 3.0, 1.0);
}

TEST(ObjectRegion, FullFrameIsIdentity) {
  const RgbImage img = noise(224, 224, 2);
  const RegionCrop c = extract_object_region(img, ObjectMask(224, 224, true), "x");
  EXPECT_EQ(c.pixels, img);
  EXPECT_EQ(c.level, Level::Object);
  EXPECT_EQ(c.file_name(), "x_object_0.png");
}

TEST(ObjectRegion, OnlyMaskedContentSurvives) {
  // Object pixels are blue, everything else green; any green leaking into the crop would
  // make G exceed R, which blends of blue and white never do.
  RgbImage img(500, 500, kGreen);
  ObjectMask mask(500, 500, false);
  for (int y = 200; y < 300; ++y) {
    for (int x = 150; x < 250; ++x) {
      if ((x - 200) * (x - 200) + (y - 250) * (y - 250) <= 50 * 50) {
        mask.set(x, y, true);
        img.set(x, y, kBlue);
      }
    }
  }
  const RegionCrop c = extract_object_region(img, mask, "img");
  ASSERT_EQ(c.pixels.width, kObjectWidth);
  ASSERT_EQ(c.pixels.height, kObjectHeight);
  EXPECT_EQ(c.source_box.x0, 150);
  EXPECT_EQ(c.source_box.y0, 200);
  EXPECT_EQ(c.source_box.width(), 100);
  EXPECT_EQ(c.source_box.height(), 100);
  for (int y = 0; y < c.pixels.height; ++y) {
    for (int x = 0; x < c.pixels.width; ++x) ASSERT_EQ(c.pixels.at(x, y).g, c.pixels.at(x, y).r);
  }
  EXPECT_EQ(c.pixels.at(0, 0), kWhite);
  EXPECT_EQ(c.pixels.at(112, 112), kBlue);
}

TEST(ObjectRegion, SinglePixelMask) {
  RgbImage img(9, 9, kGreen);
  img.set(4, 5, kBlue);
  ObjectMask mask(9, 9, false);
  mask.set(4, 5, true);
  const RegionCrop c = extract_object_region(img, mask);
  EXPECT_EQ(c.pixels, RgbImage(224, 224, kBlue));
  EXPECT_THROW(extract_object_region(img, ObjectMask(9, 9, false)), Error);
}

SuperpixelMap quadrants(int w, int h) {
  SuperpixelMap map{w, h, std::vector<std::int32_t>(static_cast<std::size_t>(w) * h), 4};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) map.labels[static_cast<std::size_t>(y) * w + x] = (y >= h / 2) * 2 + (x >= w / 2);
  }
  return map;
}

TEST(SubcomponentRegions, OneSegment) {
  const SuperpixelMap map{5, 5, std::vector<std::int32_t>(25, 0), 1};
  const auto crops = extract_subcomponent_regions(noise(5, 5, 3), map, "a");
  ASSERT_EQ(crops.size(), 1u);
  EXPECT_EQ(crops[0].pixels.width, kSubcomponentWidth);
  EXPECT_EQ(crops[0].pixels.height, kSubcomponentHeight);
}

TEST(SubcomponentRegions, QuadrantsInOrderAndPure) {
  // Each quadrant holds blue where its own pixels are, so other segments show up as green
  // only if the crop leaks them.
  const SuperpixelMap map = quadrants(40, 30);
  for (int target = 0; target < 4; ++target) {
    RgbImage img(40, 30, kGreen);
    for (int y = 0; y < 30; ++y) {
      for (int x = 0; x < 40; ++x) {
        if (map.at(x, y) == target) img.set(x, y, kBlue);
      }
    }
    const auto crops = extract_subcomponent_regions(img, map, "q");
    ASSERT_EQ(crops.size(), 4u);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(crops[i].segment_id, i);
    const RgbImage& px = crops[target].pixels;
    for (int y = 0; y < px.height; ++y) {
      for (int x = 0; x < px.width; ++x) ASSERT_EQ(px.at(x, y).g, px.at(x, y).r);
    }
    EXPECT_EQ(crops[target].file_name(), "q_subcomponent_" + std::to_string(target) + ".png");
  }
}

TEST(SubcomponentRegions, IrregularSegmentSupport) {
  // An L-shaped segment; its bounding box also covers pixels of the other segment.
  SuperpixelMap map{6, 6, std::vector<std::int32_t>(36, 1), 2};
  RgbImage img(6, 6, kGreen);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 6; ++x) {
      if (x == 0 || y == 5) {
        map.labels[static_cast<std::size_t>(y) * 6 + x] = 0;
        img.set(x, y, kBlue);
      }
    }
  }
  const auto crops = extract_subcomponent_regions(img, map);
  ASSERT_EQ(crops.size(), 2u);
  EXPECT_EQ(crops[0].support.count(), 11u);
  const RgbImage& px = crops[0].pixels;
  for (int y = 0; y < px.height; ++y) {
    for (int x = 0; x < px.width; ++x) ASSERT_EQ(px.at(x, y).g, px.at(x, y).r);
  }
}

TEST(SubcomponentRegions, TinySegmentAndBackground) {
  SuperpixelMap map{5, 5, std::vector<std::int32_t>(25, kBackgroundLabel), 2};
  map.labels[0] = 0;
  map.labels[1] = 0;
  map.labels[5] = 0;
  map.labels[24] = 1;
  const auto crops = extract_subcomponent_regions(noise(5, 5, 4), map);
  ASSERT_EQ(crops.size(), 2u);
  EXPECT_EQ(crops[0].pixels.width, 190);
  EXPECT_EQ(crops[0].pixels.height, 150);
  EXPECT_EQ(crops[0].support.count(), 3u);

  const SuperpixelMap empty{3, 3, std::vector<std::int32_t>(9, kBackgroundLabel), 0};
  EXPECT_TRUE(extract_subcomponent_regions(noise(3, 3, 5), empty).empty());
}

TEST(SubcomponentRegions, Deterministic) {
  const SuperpixelMap map = quadrants(30, 20);
  const RgbImage img = noise(30, 20, 6);
  const auto a = extract_subcomponent_regions(img, map, "d");
  const auto b = extract_subcomponent_regions(img, map, "d");
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].pixels, b[i].pixels);
}

TEST(Level, ParseRoundTrip) {
  EXPECT_EQ(parse_level("object"), Level::Object);
  EXPECT_EQ(parse_level(to_string(Level::Subcomponent)), Level::Subcomponent);
  EXPECT_THROW(parse_level("pixel"), Error);
}

}  // namespace
}  // namespace subseg
