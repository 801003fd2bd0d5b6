#include "subseg/slic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include "subseg/color.hpp"
#include "subseg/error.hpp"
#include "subseg/isolate.hpp"
#include "subseg/png_io.hpp"

namespace subseg {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Domain {
  Box box;
  const std::vector<std::uint8_t>* member = nullptr;  // null: every pixel of box

  bool contains(int x, int y, int width) const {
    if (x < box.x0 || x >= box.x1 || y < box.y0 || y >= box.y1) return false;
    return !member || (*member)[static_cast<std::size_t>(y) * width + x] != 0;
  }
};

struct GridLayout {
  int columns = 1;
  int rows = 1;
};

// Columns take ceil(W/S) so that narrow images still receive more than one seed across;
// rows then make up the requested count.
GridLayout grid_layout(int w, int h, int k, double s) {
  GridLayout g;
  g.columns = std::clamp(static_cast<int>(std::ceil(w / s - 1e-9)), 1, w);
  g.rows = std::clamp(static_cast<int>(std::lround(static_cast<double>(k) / g.columns)), 1, h);
  return g;
}

std::vector<ClusterCenter> seed_centers(const LabImage& img, const SlicParams& params,
                                        const Domain& domain) {
  const int w = domain.box.width(), h = domain.box.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  validate(params, n);
  const double s = grid_interval(n, params.k);
  const GridLayout grid = grid_layout(w, h, params.k, s);
  const double step_x = static_cast<double>(w) / grid.columns;
  const double step_y = static_cast<double>(h) / grid.rows;

  auto score = [&](int x, int y) {
    const bool interior = x >= 1 && y >= 1 && x <= img.width - 2 && y <= img.height - 2;
    return interior ? lab_gradient(img, x, y) : kInf;
  };

  std::vector<ClusterCenter> centers;
  centers.reserve(static_cast<std::size_t>(grid.columns) * grid.rows);
  for (int j = 0; j < grid.rows; ++j) {
    for (int i = 0; i < grid.columns; ++i) {
      // Continuous grid position and the pixel containing it.
      const double px = domain.box.x0 + step_x / 2 + i * step_x;
      const double py = domain.box.y0 + step_y / 2 + j * step_y;
      const int gx = std::min(static_cast<int>(std::floor(px)), domain.box.x1 - 1);
      const int gy = std::min(static_cast<int>(std::floor(py)), domain.box.y1 - 1);
      bool found = domain.contains(gx, gy, img.width);
      int bx = gx, by = gy;
      double best = found ? score(gx, gy) : kInf;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int x = gx + dx, y = gy + dy;
          if ((dx == 0 && dy == 0) || !domain.contains(x, y, img.width)) continue;
          const double g = score(x, y);
          if (!found || g < best) {
            found = true;
            best = g;
            bx = x;
            by = y;
          }
        }
      }
      if (!found) continue;
      const auto lab = img.at(bx, by);
      centers.push_back({lab[0], lab[1], lab[2], px + (bx - gx), py + (by - gy)});
    }
  }
  return centers;
}

std::vector<ClusterCenter> centers_from_labels(const LabImage& img, const SuperpixelMap& map) {
  std::vector<std::array<double, 6>> acc(map.num_segments, std::array<double, 6>{});
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const std::int32_t l = map.at(x, y);
      if (l < 0) continue;
      const auto lab = img.at(x, y);
      auto& a = acc[l];
      a[0] += lab[0];
      a[1] += lab[1];
      a[2] += lab[2];
      a[3] += x + 0.5;
      a[4] += y + 0.5;
      a[5] += 1;
    }
  }
  std::vector<ClusterCenter> out(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double c = acc[i][5];
    out[i] = {acc[i][0] / c, acc[i][1] / c, acc[i][2] / c, acc[i][3] / c, acc[i][4] / c};
  }
  return out;
}

SlicResult run_slic(const LabImage& img, const SlicParams& params, const Domain& domain) {
  std::vector<ClusterCenter> centers = seed_centers(img, params, domain);
  const std::size_t n_domain = static_cast<std::size_t>(domain.box.width()) * domain.box.height();
  const double s = grid_interval(n_domain, params.k);
  const std::size_t n = img.pixel_count();

  std::vector<std::uint8_t> member(n, 0);
  for (int y = domain.box.y0; y < domain.box.y1; ++y) {
    for (int x = domain.box.x0; x < domain.box.x1; ++x) {
      if (domain.contains(x, y, img.width)) member[static_cast<std::size_t>(y) * img.width + x] = 1;
    }
  }

  SlicResult result;
  Assignment assignment;
  for (int iter = 0; iter < params.max_iters; ++iter) {
    assignment = assign_pixels(img, centers, params.m, s, &member);
    std::vector<std::array<double, 6>> acc(centers.size(), std::array<double, 6>{});
    for (std::size_t p = 0; p < n; ++p) {
      const std::int32_t c = assignment.center[p];
      if (c < 0) continue;
      auto& a = acc[c];
      a[0] += img.data[3 * p];
      a[1] += img.data[3 * p + 1];
      a[2] += img.data[3 * p + 2];
      a[3] += static_cast<double>(p % img.width) + 0.5;
      a[4] += static_cast<double>(p / img.width) + 0.5;
      a[5] += 1;
    }
    double residual = 0.0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double count = acc[c][5];
      if (count == 0) continue;
      const ClusterCenter moved{acc[c][0] / count, acc[c][1] / count, acc[c][2] / count,
                                acc[c][3] / count, acc[c][4] / count};
      residual += std::hypot(moved.x - centers[c].x, moved.y - centers[c].y);
      centers[c] = moved;
    }
    result.residual_history.push_back(residual);
    if (residual < params.residual_threshold) break;
  }

  // Pixels no window reached go to the globally nearest center.
  for (std::size_t p = 0; p < n; ++p) {
    if (!member[p] || assignment.center[p] >= 0) continue;
    const std::size_t i = 3 * p;
    const LabXy px{img.data[i], img.data[i + 1], img.data[i + 2],
                   static_cast<double>(p % img.width) + 0.5,
                   static_cast<double>(p / img.width) + 0.5};
    double best = kInf;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double d = labxy_distance(centers[c], px, params.m, s);
      if (d < best) {
        best = d;
        assignment.center[p] = static_cast<std::int32_t>(c);
      }
    }
  }

  // Compact in center order, dropping empty clusters.
  std::vector<std::int32_t> remap(centers.size(), -1);
  for (std::size_t p = 0; p < n; ++p) {
    if (assignment.center[p] >= 0) remap[assignment.center[p]] = 0;
  }
  std::int32_t next = 0;
  for (auto& r : remap) {
    if (r == 0) r = next++;
  }
  SuperpixelMap map{img.width, img.height, std::vector<std::int32_t>(n, kBackgroundLabel), next};
  for (std::size_t p = 0; p < n; ++p) {
    if (assignment.center[p] >= 0) map.labels[p] = remap[assignment.center[p]];
  }

  if (params.enforce_connectivity) {
    const int min_size =
        std::max(1, static_cast<int>(std::lround(params.min_segment_fraction * s * s)));
    map = enforce_connectivity(map, min_size);
  }
  result.centers = centers_from_labels(img, map);
  result.map = std::move(map);
  return result;
}

// 4-connected components of equal, non-background labels, numbered in scan order.
std::vector<std::int32_t> label_components(const SuperpixelMap& map, int& count) {
  const std::size_t n = map.labels.size();
  std::vector<std::int32_t> comp(n, -1);
  std::vector<std::size_t> stack;
  count = 0;
  for (std::size_t start = 0; start < n; ++start) {
    if (comp[start] >= 0 || map.labels[start] == kBackgroundLabel) continue;
    const std::int32_t label = map.labels[start];
    comp[start] = count;
    stack.assign(1, start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      const int x = static_cast<int>(p % map.width), y = static_cast<int>(p / map.width);
      const std::size_t nb[4] = {p - 1, p + 1, p - map.width, p + map.width};
      const bool ok[4] = {x > 0, x < map.width - 1, y > 0, y < map.height - 1};
      for (int k = 0; k < 4; ++k) {
        if (ok[k] && comp[nb[k]] < 0 && map.labels[nb[k]] == label) {
          comp[nb[k]] = count;
          stack.push_back(nb[k]);
        }
      }
    }
    ++count;
  }
  return comp;
}

}  // namespace

void validate(const SlicParams& params, std::size_t pixel_count) {
  if (params.k < 2) throw usage_error("SLIC: k must be at least 2");
  if (static_cast<std::size_t>(params.k) > pixel_count) {
    throw usage_error("SLIC: k=" + std::to_string(params.k) + " exceeds the pixel count " +
                      std::to_string(pixel_count));
  }
  if (!(params.m > 0) || !std::isfinite(params.m)) throw usage_error("SLIC: m must be positive");
  if (params.max_iters < 1) throw usage_error("SLIC: max_iters must be positive");
  if (!(params.residual_threshold >= 0)) {
    throw usage_error("SLIC: residual_threshold must be non-negative");
  }
  if (!(params.min_segment_fraction > 0 && params.min_segment_fraction < 1)) {
    throw usage_error("SLIC: min_segment_fraction must lie in (0,1)");
  }
}

double grid_interval(std::size_t pixel_count, int k) {
  return std::sqrt(static_cast<double>(pixel_count) / k);
}

std::vector<ClusterCenter> init_centers(const LabImage& img, const SlicParams& params) {
  return seed_centers(img, params, Domain{Box{0, 0, img.width, img.height}, nullptr});
}

double labxy_distance(const ClusterCenter& c, const LabXy& p, double m, double s) {
  const double dl = c.l - p.l, da = c.a - p.a, db = c.b - p.b;
  const double dx = c.x - p.x, dy = c.y - p.y;
  const double d_lab = std::sqrt(dl * dl + da * da + db * db);
  const double d_xy = std::sqrt(dx * dx + dy * dy);
  return d_lab + (m / s) * d_xy;
}

Assignment assign_pixels(const LabImage& img, const std::vector<ClusterCenter>& centers,
                         double m, double s, const std::vector<std::uint8_t>* domain) {
  const std::size_t n = img.pixel_count();
  Assignment out{std::vector<std::int32_t>(n, -1), std::vector<double>(n, kInf)};
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const ClusterCenter& center = centers[c];
    const int x0 = std::max(0, static_cast<int>(std::ceil(center.x - s - 0.5)));
    const int x1 = std::min(img.width - 1, static_cast<int>(std::floor(center.x + s - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::ceil(center.y - s - 0.5)));
    const int y1 = std::min(img.height - 1, static_cast<int>(std::floor(center.y + s - 0.5)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * img.width + x;
        if (domain && !(*domain)[p]) continue;
        const std::size_t i = 3 * p;
        const LabXy px{img.data[i], img.data[i + 1], img.data[i + 2], x + 0.5, y + 0.5};
        const double d = labxy_distance(center, px, m, s);
        if (d < out.distance[p]) {
          out.distance[p] = d;
          out.center[p] = static_cast<std::int32_t>(c);
        }
      }
    }
  }
  return out;
}

SlicResult segment(const LabImage& img, const SlicParams& params) {
  return run_slic(img, params, Domain{Box{0, 0, img.width, img.height}, nullptr});
}

SlicResult segment(const LabImage& img, const ObjectMask& mask, const SlicParams& params) {
  if (mask.width != img.width || mask.height != img.height) {
    throw data_error("SLIC: mask dimensions do not match the image");
  }
  const Box box = mask_bounds(mask);
  if (box.degenerate()) throw data_error("SLIC: empty object mask");
  return run_slic(img, params, Domain{box, &mask.bits});
}

SuperpixelMap enforce_connectivity(const SuperpixelMap& map, int min_size) {
  int count = 0;
  const std::vector<std::int32_t> comp = label_components(map, count);
  std::vector<std::int32_t> parent(count), label(count, 0);
  std::vector<std::size_t> size(count, 0);
  std::vector<std::vector<std::size_t>> members(count);
  for (int c = 0; c < count; ++c) parent[c] = c;
  for (std::size_t p = 0; p < comp.size(); ++p) {
    if (comp[p] < 0) continue;
    label[comp[p]] = map.labels[p];
    ++size[comp[p]];
    members[comp[p]].push_back(p);
  }
  auto find = [&](std::int32_t c) {
    while (parent[c] != c) c = parent[c] = parent[parent[c]];
    return c;
  };

  // A component is only ever merged at its own turn, so each is still a root when visited
  // and one pass leaves nothing small that has a neighbour.
  for (std::int32_t c = 0; c < count; ++c) {
    if (find(c) != c || size[c] >= static_cast<std::size_t>(min_size)) continue;
    std::int32_t target = -1;
    for (const std::size_t p : members[c]) {
      const int x = static_cast<int>(p % map.width), y = static_cast<int>(p / map.width);
      const std::size_t nb[4] = {p - 1, p + 1, p - map.width, p + map.width};
      const bool ok[4] = {x > 0, x < map.width - 1, y > 0, y < map.height - 1};
      for (int k = 0; k < 4; ++k) {
        if (!ok[k] || comp[nb[k]] < 0) continue;
        const std::int32_t r = find(comp[nb[k]]);
        if (r == c) continue;
        if (target < 0 || size[r] > size[target] ||
            (size[r] == size[target] &&
             (label[r] < label[target] || (label[r] == label[target] && r < target)))) {
          target = r;
        }
      }
    }
    if (target < 0) continue;
    parent[c] = target;
    size[target] += size[c];
    auto& dst = members[target];
    dst.insert(dst.end(), members[c].begin(), members[c].end());
    members[c].clear();
    members[c].shrink_to_fit();
  }

  SuperpixelMap merged = map;
  for (std::size_t p = 0; p < comp.size(); ++p) {
    if (comp[p] >= 0) merged.labels[p] = label[find(comp[p])];
  }

  // Dense relabel: one id per final component, ordered by (previous label, scan order).
  int final_count = 0;
  const std::vector<std::int32_t> final_comp = label_components(merged, final_count);
  std::vector<std::pair<std::int32_t, std::int32_t>> order;  // (old label, component)
  order.reserve(final_count);
  std::vector<std::uint8_t> seen(final_count, 0);
  for (std::size_t p = 0; p < final_comp.size(); ++p) {
    const std::int32_t fc = final_comp[p];
    if (fc >= 0 && !seen[fc]) {
      seen[fc] = 1;
      order.emplace_back(merged.labels[p], fc);
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::int32_t> dense(final_count, -1);
  for (std::size_t i = 0; i < order.size(); ++i) {
    dense[order[i].second] = static_cast<std::int32_t>(i);
  }
  SuperpixelMap out{map.width, map.height, std::vector<std::int32_t>(map.labels.size()),
                    final_count};
  for (std::size_t p = 0; p < final_comp.size(); ++p) {
    out.labels[p] = final_comp[p] >= 0 ? dense[final_comp[p]] : kBackgroundLabel;
  }
  return out;
}

void write_superpixel_map(const std::filesystem::path& png, const SuperpixelMap& map,
                          const SlicParams& params) {
  if (map.num_segments >= kBackgroundLabelPng) {
    throw data_error("label map has too many segments for a 16-bit PNG");
  }
  Gray16Image img{map.width, map.height, std::vector<std::uint16_t>(map.labels.size())};
  for (std::size_t i = 0; i < map.labels.size(); ++i) {
    img.data[i] = map.labels[i] == kBackgroundLabel ? kBackgroundLabelPng
                                                     : static_cast<std::uint16_t>(map.labels[i]);
  }
  write_gray16_png(png, img);
  std::ofstream header(png.string() + ".txt");
  if (!header) throw io_error("cannot write " + png.string() + ".txt");
  header << std::setprecision(17);
  header << "width=" << map.width << "\n"
         << "height=" << map.height << "\n"
         << "num_segments=" << map.num_segments << "\n"
         << "k=" << params.k << "\n"
         << "m=" << params.m << "\n"
         << "max_iters=" << params.max_iters << "\n"
         << "residual_threshold=" << params.residual_threshold << "\n"
         << "enforce_connectivity=" << (params.enforce_connectivity ? 1 : 0) << "\n"
         << "min_segment_fraction=" << params.min_segment_fraction << "\n"
         << "background_label=" << kBackgroundLabelPng << "\n";
  if (!header) throw io_error("failed writing " + png.string() + ".txt");
}

SuperpixelMap read_superpixel_map(const std::filesystem::path& png) {
  const Gray16Image img = read_gray16_png(png);
  SuperpixelMap map{img.width, img.height, std::vector<std::int32_t>(img.data.size()), 0};
  std::int32_t max_label = -1;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    map.labels[i] = img.data[i] == kBackgroundLabelPng ? kBackgroundLabel : img.data[i];
    max_label = std::max(max_label, map.labels[i]);
  }
  map.num_segments = max_label + 1;
  std::ifstream header(png.string() + ".txt");
  if (header) {
    std::string line;
    while (std::getline(header, line)) {
      if (line.rfind("num_segments=", 0) == 0) map.num_segments = std::stoi(line.substr(13));
    }
  }
  return map;
}

}  // namespace subseg
