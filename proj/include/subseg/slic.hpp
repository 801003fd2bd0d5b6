#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "subseg/image.hpp"

namespace subseg {

/// Label carried by pixels excluded from clustering (outside the object mask).
inline constexpr std::int32_t kBackgroundLabel = -1;
/// On-disk value of kBackgroundLabel in 16-bit label PNGs.
inline constexpr std::uint16_t kBackgroundLabelPng = 65535;

struct SlicParams {
  int k = 256;
  double m = 20.0;
  int max_iters = 10;
  double residual_threshold = 1.0;
  bool enforce_connectivity = true;
  double min_segment_fraction = 0.25;
};

/// Throws a usage error when params are invalid for an image of `pixel_count` pixels.
void validate(const SlicParams& params, std::size_t pixel_count);

/// Pixel (x, y) sits at (x + 0.5, y + 0.5) in the continuous image plane that centers live in.
struct ClusterCenter {
  double l = 0, a = 0, b = 0;
  double x = 0, y = 0;
};

/// A 5-D sample point (l, a, b, x, y).
using LabXy = ClusterCenter;

struct SuperpixelMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;
  int num_segments = 0;

  std::int32_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  friend bool operator==(const SuperpixelMap&, const SuperpixelMap&) = default;
};

/// Grid interval sqrt(N / K).
double grid_interval(std::size_t pixel_count, int k);

/// Seeds on a regular grid of spacing S, offset S/2, each shifted by whole pixels to the
/// lowest-gradient pixel of the 3x3 neighbourhood around the pixel containing it (ties keep
/// the grid site).
std::vector<ClusterCenter> init_centers(const LabImage& img, const SlicParams& params);

/// D_s = d_lab + (m / S) * d_xy.
double labxy_distance(const ClusterCenter& c, const LabXy& p, double m, double s);

/// Result of a single assignment sweep: per-pixel best center index (-1 if none) and
/// the distance that won.
struct Assignment {
  std::vector<std::int32_t> center;
  std::vector<double> distance;
};

/// One windowed assignment step: each center claims pixels within |dx| <= S, |dy| <= S
/// whose D_s is strictly smaller than their current best. Centers are visited in index
/// order so the lowest index wins ties. Pixels with `domain` false are skipped.
Assignment assign_pixels(const LabImage& img, const std::vector<ClusterCenter>& centers,
                         double m, double s, const std::vector<std::uint8_t>* domain = nullptr);

struct SlicResult {
  SuperpixelMap map;
  std::vector<ClusterCenter> centers;
  std::vector<double> residual_history;
};

/// Iterative labxy clustering over the whole image.
SlicResult segment(const LabImage& img, const SlicParams& params);

/// Clustering restricted to `mask`. Seeds are laid over the mask's bounding box and pixels
/// outside the mask receive kBackgroundLabel.
SlicResult segment(const LabImage& img, const ObjectMask& mask, const SlicParams& params);

/// Merges 4-connected fragments smaller than min_size into their largest adjacent fragment
/// (ties to the smallest label), then gives every remaining fragment its own dense label.
SuperpixelMap enforce_connectivity(const SuperpixelMap& map, int min_size);

/// Label PNG (16-bit, background 65535) plus a key=value sidecar at `<png>.txt`.
void write_superpixel_map(const std::filesystem::path& png, const SuperpixelMap& map,
                          const SlicParams& params);
SuperpixelMap read_superpixel_map(const std::filesystem::path& png);

}  // namespace subseg
