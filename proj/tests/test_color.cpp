#include <gtest/gtest.h>

#include <stdexcept>

#include "subseg/color.hpp"
#include "subseg/error.hpp"

namespace subseg {
namespace {

// Reference values computed offline from the textbook sRGB -> XYZ (D65) -> Lab formulas.
struct LabCase {
  Rgb rgb;
  double l, a, b;
};

TEST(Color, ReferenceConversions) {
  const LabCase cases[] = {
      {{255, 255, 255}, 100.0, 0.0, 0.0},
      {{0, 0, 0}, 0.0, 0.0, 0.0},
      {{255, 0, 0}, 53.2408, 80.0925, 67.2032},
      {{0, 255, 0}, 87.7351, -86.1830, 83.1797},
      {{0, 0, 255}, 32.2957, 79.1856, -107.8573},
      {{128, 128, 128}, 53.5850, 0.0, 0.0},
      {{50, 100, 200}, 44.1762, 18.3739, -56.9297},
  };
  for (const auto& c : cases) {
    const auto lab = srgb_to_lab(c.rgb);
    EXPECT_NEAR(lab[0], c.l, 0.01) << int(c.rgb.r) << "," << int(c.rgb.g) << "," << int(c.rgb.b);
    EXPECT_NEAR(lab[1], c.a, 0.01);
    EXPECT_NEAR(lab[2], c.b, 0.01);
  }
}

TEST(Color, GraysHaveNoChromaAndIncreasingLightness) {
  double prev = -1.0;
  for (int g = 0; g < 256; ++g) {
    const auto v = static_cast<std::uint8_t>(g);
    const auto lab = srgb_to_lab(Rgb{v, v, v});
    EXPECT_NEAR(lab[1], 0.0, 0.01) << g;
    EXPECT_NEAR(lab[2], 0.0, 0.01) << g;
    EXPECT_GT(lab[0], prev) << g;
    prev = lab[0];
  }
}

TEST(Color, ImageConversionMatchesPixelConversion) {
  RgbImage img(3, 2);
  img.set(0, 0, {255, 0, 0});
  img.set(2, 1, {10, 200, 30});
  const LabImage lab = srgb_to_lab(img);
  ASSERT_EQ(lab.width, 3);
  ASSERT_EQ(lab.height, 2);
  ASSERT_EQ(lab.data.size(), 18u);
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 3; ++x) {
      EXPECT_EQ(lab.at(x, y), srgb_to_lab(img.at(x, y)));
    }
  }
  EXPECT_EQ(srgb_to_lab(img).data, lab.data);
}

LabImage l_image(int w, int h, double (*f)(int, int)) {
  LabImage img{w, h, std::vector<double>(static_cast<std::size_t>(w) * h * 3, 0.0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) img.data[3 * (static_cast<std::size_t>(y) * w + x)] = f(x, y);
  }
  return img;
}

TEST(LabGradient, ConstantImageIsZero) {
  const LabImage img = l_image(5, 5, [](int, int) { return 42.0; });
  for (int y = 1; y <= 3; ++y) {
    for (int x = 1; x <= 3; ++x) EXPECT_EQ(lab_gradient(img, x, y), 0.0);
  }
}

TEST(LabGradient, StepOfTenEachSideGivesFourHundred) {
  // L = 40 | 50 | 60 across the measured column.
  const LabImage img = l_image(3, 3, [](int x, int) { return 40.0 + 10.0 * x; });
  EXPECT_DOUBLE_EQ(lab_gradient(img, 1, 1), 400.0);
}

TEST(LabGradient, UnitRampGivesFourEverywhere) {
  const LabImage img = l_image(8, 6, [](int x, int) { return static_cast<double>(x); });
  for (int y = 1; y <= 4; ++y) {
    for (int x = 1; x <= 6; ++x) EXPECT_DOUBLE_EQ(lab_gradient(img, x, y), 4.0);
  }
}

TEST(LabGradient, RejectsBorderCoordinates) {
  const LabImage img = l_image(4, 4, [](int, int) { return 0.0; });
  EXPECT_THROW(lab_gradient(img, 0, 1), Error);
  EXPECT_THROW(lab_gradient(img, 1, 0), Error);
  EXPECT_THROW(lab_gradient(img, 3, 1), Error);
  EXPECT_THROW(lab_gradient(img, 1, 3), Error);
  EXPECT_NO_THROW(lab_gradient(img, 2, 2));
}

}  // namespace
}  // namespace subseg
