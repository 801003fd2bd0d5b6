#pragma once

#include <array>

#include "subseg/image.hpp"

namespace subseg {

/// sRGB (D65) to CIELAB for a single 8-bit pixel.
std::array<double, 3> srgb_to_lab(Rgb c);

/// Converts every pixel; dimensions are preserved.
LabImage srgb_to_lab(const RgbImage& img);

/// Squared central-difference magnitude of the Lab vector at (x, y):
/// |I(x+1,y) - I(x-1,y)|^2 + |I(x,y+1) - I(x,y-1)|^2.
/// Throws a data error unless 1 <= x <= width-2 and 1 <= y <= height-2.
double lab_gradient(const LabImage& img, int x, int y);

}  // namespace subseg
