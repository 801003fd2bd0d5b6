#include "subseg/color.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <string>

#include "subseg/error.hpp"

namespace subseg {
namespace {

// sRGB primaries to XYZ, D65 adaptation (IEC 61966-2-1).
constexpr double kM[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                             {0.2126729, 0.7151522, 0.0721750},
                             {0.0193339, 0.1191920, 0.9503041}};

// Reference white is the image of (1,1,1) so that grays land exactly on a = b = 0.
constexpr double kWhiteX = kM[0][0] + kM[0][1] + kM[0][2];
constexpr double kWhiteY = kM[1][0] + kM[1][1] + kM[1][2];
constexpr double kWhiteZ = kM[2][0] + kM[2][1] + kM[2][2];

constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

struct LinearTable {
  double v[256];
  LinearTable() {
    for (int i = 0; i < 256; ++i) {
      const double c = i / 255.0;
      v[i] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
    }
  }
};

const LinearTable& linear_table() {
  static const LinearTable table;
  return table;
}

// Cube root for t > 0: exponent-split initial guess refined by two Halley steps
// (relative error below 1e-14).
double cube_root(double t) {
  double y = std::bit_cast<double>(std::bit_cast<std::uint64_t>(t) / 3 + 0x2a9f7893782da1ceull);
  for (int i = 0; i < 2; ++i) {
    const double y3 = y * y * y;
    y = y * (y3 + 2 * t) / (2 * y3 + t);
  }
  return y;
}

double lab_f(double t) {
  return t > kEpsilon ? cube_root(t) : (kKappa * t + 16.0) / 116.0;
}

}  // namespace

std::array<double, 3> srgb_to_lab(Rgb c) {
  const auto& lin = linear_table().v;
  const double r = lin[c.r], g = lin[c.g], b = lin[c.b];
  const double x = kM[0][0] * r + kM[0][1] * g + kM[0][2] * b;
  const double y = kM[1][0] * r + kM[1][1] * g + kM[1][2] * b;
  const double z = kM[2][0] * r + kM[2][1] * g + kM[2][2] * b;
  const double fx = lab_f(x / kWhiteX);
  const double fy = lab_f(y / kWhiteY);
  const double fz = lab_f(z / kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

LabImage srgb_to_lab(const RgbImage& img) {
  LabImage out;
  out.width = img.width;
  out.height = img.height;
  out.data.resize(img.pixel_count() * 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const auto lab = srgb_to_lab(Rgb{img.data[3 * i], img.data[3 * i + 1], img.data[3 * i + 2]});
    out.data[3 * i] = lab[0];
    out.data[3 * i + 1] = lab[1];
    out.data[3 * i + 2] = lab[2];
  }
  return out;
}

double lab_gradient(const LabImage& img, int x, int y) {
  if (x < 1 || y < 1 || x > img.width - 2 || y > img.height - 2) {
    throw data_error("lab_gradient: (" + std::to_string(x) + "," + std::to_string(y) +
                     ") is not an interior pixel");
  }
  double g = 0.0;
  const std::size_t l = img.index(x - 1, y), r = img.index(x + 1, y);
  const std::size_t u = img.index(x, y - 1), d = img.index(x, y + 1);
  for (int c = 0; c < 3; ++c) {
    const double dx = img.data[r + c] - img.data[l + c];
    const double dy = img.data[d + c] - img.data[u + c];
    g += dx * dx + dy * dy;
  }
  return g;
}

}  // namespace subseg
