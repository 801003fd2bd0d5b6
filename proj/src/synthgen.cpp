#include "subseg/synthgen.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "subseg/error.hpp"
#include "subseg/isolate.hpp"
#include "subseg/png_io.hpp"

namespace subseg {
namespace {

using Json = nlohmann::ordered_json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(uniform_index(engine_, static_cast<std::size_t>(hi - lo + 1)));
  }
  bool chance(double p) { return uniform() < p; }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct Color {
  double r, g, b;
};

// False-colour tones of organic and metallic parts.
constexpr Color kDevicePalette[] = {
    {92, 122, 172},   // metal, blue-grey
    {78, 160, 142},   // mixed, teal
    {204, 124, 54},   // dense organic, dark orange
    {236, 202, 142},  // light organic, tan
};

// Concealed items: hues that the device palette never produces.
constexpr Color kAnomalyPalette[] = {
    {212, 48, 206},
    {112, 46, 192},
    {62, 18, 84},
};

Color jitter(Rng& rng, Color c, double amount) {
  return {c.r + rng.uniform(-amount, amount), c.g + rng.uniform(-amount, amount),
          c.b + rng.uniform(-amount, amount)};
}

bool in_rounded_rect(double x, double y, double x0, double y0, double x1, double y1, double r) {
  if (x < x0 || x > x1 || y < y0 || y > y1) return false;
  const double cx = std::clamp(x, x0 + r, x1 - r);
  const double cy = std::clamp(y, y0 + r, y1 - r);
  return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.image_w < 32 || cfg.image_h < 32) throw usage_error("image size must be at least 32x32");
  if (cfg.n_images < 1) throw usage_error("n_images must be positive");
  if (!(cfg.anomaly_probability >= 0 && cfg.anomaly_probability <= 1)) {
    throw usage_error("anomaly probability must lie in [0,1]");
  }
  if (!(cfg.anomaly_area_min > 0 && cfg.anomaly_area_min <= cfg.anomaly_area_max &&
        cfg.anomaly_area_max < 0.25)) {
    throw usage_error("anomaly area fraction range must satisfy 0 < min <= max < 0.25");
  }
  if (!(cfg.texture_scale > 0)) throw usage_error("texture scale must be positive");
  if (!(cfg.noise_sigma >= 0)) throw usage_error("noise sigma must be non-negative");
  if (!(cfg.train_fraction > 0 && cfg.train_fraction < 1)) {
    throw usage_error("train fraction must lie in (0,1)");
  }
}

SyntheticImage generate_image(const SynthConfig& cfg, int index) {
  Rng rng(splitmix64(cfg.rng_seed ^ splitmix64(static_cast<std::uint64_t>(index))));
  const int w = cfg.image_w, h = cfg.image_h;
  std::vector<Color> canvas(static_cast<std::size_t>(w) * h, Color{255, 255, 255});
  auto px = [&](int x, int y) -> Color& { return canvas[static_cast<std::size_t>(y) * w + x]; };

  // Device body.
  const double dw = rng.uniform(0.45, 0.75) * w, dh = rng.uniform(0.35, 0.6) * h;
  const double margin = 0.04 * std::min(w, h);
  const double x0 = rng.uniform(margin, w - margin - dw), y0 = rng.uniform(margin, h - margin - dh);
  const double x1 = x0 + dw, y1 = y0 + dh;
  const double radius = rng.uniform(0.05, 0.12) * std::min(dw, dh);
  const Color body = jitter(rng, {226, 176, 102}, 14);

  SyntheticImage out;
  GroundTruth& gt = out.truth;
  gt.object_mask = ObjectMask(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (in_rounded_rect(x + 0.5, y + 0.5, x0, y0, x1, y1, radius)) {
        gt.object_mask.set(x, y, true);
        px(x, y) = body;
      }
    }
  }

  // Internal components on a loose grid, some striped.
  const int cols = rng.integer(3, 5), rows = rng.integer(2, 4);
  const double inset = 0.08 * std::min(dw, dh);
  const double cell_w = (dw - 2 * inset) / cols, cell_h = (dh - 2 * inset) / rows;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!rng.chance(0.75)) continue;
      const double cx0 = x0 + inset + c * cell_w + rng.uniform(0.05, 0.2) * cell_w;
      const double cy0 = y0 + inset + r * cell_h + rng.uniform(0.05, 0.2) * cell_h;
      const double cx1 = x0 + inset + (c + 1) * cell_w - rng.uniform(0.05, 0.2) * cell_w;
      const double cy1 = y0 + inset + (r + 1) * cell_h - rng.uniform(0.05, 0.2) * cell_h;
      const Color base = jitter(rng, kDevicePalette[rng.integer(0, 3)], 12);
      const bool striped = rng.chance(0.5);
      const bool vertical = rng.chance(0.5);
      const double period = rng.uniform(6.0, 14.0) * cfg.texture_scale;
      for (int y = std::max(0, static_cast<int>(cy0)); y < std::min(h, static_cast<int>(cy1)); ++y) {
        for (int x = std::max(0, static_cast<int>(cx0)); x < std::min(w, static_cast<int>(cx1)); ++x) {
          if (!gt.object_mask.at(x, y)) continue;
          double k = 1.0;
          if (striped) k += 0.12 * std::sin(2 * std::numbers::pi * (vertical ? x : y) / period);
          px(x, y) = {base.r * k, base.g * k, base.b * k};
        }
      }
    }
  }
  // Traces between components.
  const int traces = rng.integer(2, 5);
  const Color trace = {70, 92, 150};
  for (int t = 0; t < traces; ++t) {
    const bool horizontal = rng.chance(0.5);
    const int thickness = rng.integer(2, 3);
    if (horizontal) {
      const int y = static_cast<int>(rng.uniform(y0 + inset, y1 - inset));
      for (int yy = y; yy < std::min(h, y + thickness); ++yy) {
        for (int x = static_cast<int>(x0 + inset); x < static_cast<int>(x1 - inset); ++x) {
          if (gt.object_mask.at(x, yy)) px(x, yy) = trace;
        }
      }
    } else {
      const int x = static_cast<int>(rng.uniform(x0 + inset, x1 - inset));
      for (int xx = x; xx < std::min(w, x + thickness); ++xx) {
        for (int y = static_cast<int>(y0 + inset); y < static_cast<int>(y1 - inset); ++y) {
          if (gt.object_mask.at(xx, y)) px(xx, y) = trace;
        }
      }
    }
  }

  // Optional concealed item: a compact ellipse fully inside the body.
  gt.anomaly_mask = ObjectMask(w, h);
  if (rng.chance(cfg.anomaly_probability)) {
    const double object_area = static_cast<double>(gt.object_mask.count());
    const double area = rng.uniform(cfg.anomaly_area_min, cfg.anomaly_area_max) * object_area;
    const double aspect = rng.uniform(0.6, 1.0);
    const double a = std::sqrt(area / (std::numbers::pi * aspect)), b = aspect * a;
    const double theta = rng.uniform(0.0, std::numbers::pi);
    const double ct = std::cos(theta), st = std::sin(theta);
    const double reach = a + 2.0;
    const Color fill = jitter(rng, kAnomalyPalette[rng.integer(0, 2)], 10);
    const double speckle = rng.uniform(0.0, 0.1);
    for (int attempt = 0; attempt < 200; ++attempt) {
      const double ex = rng.uniform(x0 + reach, x1 - reach);
      const double ey = rng.uniform(y0 + reach, y1 - reach);
      const int bx0 = std::max(0, static_cast<int>(ex - reach)), bx1 = std::min(w - 1, static_cast<int>(ex + reach));
      const int by0 = std::max(0, static_cast<int>(ey - reach)), by1 = std::min(h - 1, static_cast<int>(ey + reach));
      bool inside = true;
      std::vector<std::pair<int, int>> pixels;
      for (int y = by0; y <= by1 && inside; ++y) {
        for (int x = bx0; x <= bx1; ++x) {
          const double u = (x + 0.5 - ex) * ct + (y + 0.5 - ey) * st;
          const double v = -(x + 0.5 - ex) * st + (y + 0.5 - ey) * ct;
          if ((u * u) / (a * a) + (v * v) / (b * b) > 1.0) continue;
          if (!gt.object_mask.at(x, y)) {
            inside = false;
            break;
          }
          pixels.emplace_back(x, y);
        }
      }
      if (!inside || pixels.empty()) continue;
      for (const auto& [x, y] : pixels) {
        gt.anomaly_mask.set(x, y, true);
        const double k = 1.0 + speckle * (rng.uniform() - 0.5);
        px(x, y) = {fill.r * k, fill.g * k, fill.b * k};
      }
      break;
    }
  }
  gt.image_label = gt.anomaly_mask.empty() ? ClassLabel::Benign : ClassLabel::Anomaly;

  out.image = RgbImage(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Color c = px(x, y);
      if (cfg.noise_sigma > 0) {
        c.r += cfg.noise_sigma * rng.normal();
        c.g += cfg.noise_sigma * rng.normal();
        c.b += cfg.noise_sigma * rng.normal();
      }
      out.image.set(x, y, {to_byte(c.r), to_byte(c.g), to_byte(c.b)});
    }
  }
  return out;
}

std::string_view to_string(Split split) { return split == Split::Train ? "train" : "test"; }

DatasetManifest generate_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  validate(cfg);
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (!ec) std::filesystem::create_directories(out_dir / "masks", ec);
  if (ec) throw io_error("cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  manifest.base_dir = out_dir;
  const int n_train = static_cast<int>(std::lround(cfg.n_images * cfg.train_fraction));
  for (int i = 0; i < cfg.n_images; ++i) {
    const SyntheticImage s = generate_image(cfg, i);
    char id[32];
    std::snprintf(id, sizeof id, "img_%05d", i);
    ManifestRecord rec;
    rec.image_id = id;
    rec.image_path = "images/" + rec.image_id + ".png";
    rec.object_mask_path = "masks/" + rec.image_id + "_object.png";
    if (s.truth.image_label == ClassLabel::Anomaly) {
      rec.anomaly_mask_path = "masks/" + rec.image_id + "_anomaly.png";
      save_mask(out_dir / *rec.anomaly_mask_path, s.truth.anomaly_mask);
    }
    rec.image_label = s.truth.image_label;
    rec.split = i < n_train ? Split::Train : Split::Test;
    write_rgb_png(out_dir / rec.image_path, s.image);
    save_mask(out_dir / rec.object_mask_path, s.truth.object_mask);
    manifest.records.push_back(std::move(rec));
  }
  write_manifest(out_dir / kManifestName, manifest);
  return manifest;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot write " + path.string());
  for (const auto& r : manifest.records) {
    Json j;
    j["image_id"] = r.image_id;
    j["image_path"] = r.image_path;
    j["object_mask_path"] = r.object_mask_path;
    j["anomaly_mask_path"] = r.anomaly_mask_path ? Json(*r.anomaly_mask_path) : Json(nullptr);
    j["image_label"] = std::string(to_string(r.image_label));
    j["split"] = std::string(to_string(r.split));
    os << j.dump() << '\n';
  }
  if (!os) throw io_error("failed writing " + path.string());
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open manifest " + path.string());
  DatasetManifest manifest;
  manifest.base_dir = path.parent_path();
  std::set<std::string> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    ManifestRecord r;
    try {
      const Json j = Json::parse(line);
      r.image_id = j.at("image_id").get<std::string>();
      r.image_path = j.at("image_path").get<std::string>();
      r.object_mask_path = j.at("object_mask_path").get<std::string>();
      if (j.contains("anomaly_mask_path") && !j["anomaly_mask_path"].is_null()) {
        r.anomaly_mask_path = j["anomaly_mask_path"].get<std::string>();
      }
      r.image_label = parse_class_label(j.at("image_label").get<std::string>());
      const auto split = j.at("split").get<std::string>();
      if (split != "train" && split != "test") throw data_error("unknown split '" + split + "'");
      r.split = split == "train" ? Split::Train : Split::Test;
    } catch (const nlohmann::json::exception& e) {
      throw data_error(where + e.what());
    } catch (const Error& e) {
      throw data_error(where + e.what());
    }
    if (!ids.insert(r.image_id).second) throw data_error(where + "duplicate image_id " + r.image_id);
    for (const std::string* p : {&r.image_path, &r.object_mask_path}) {
      if (!std::filesystem::exists(manifest.resolve(*p))) throw io_error(where + "missing file " + *p);
    }
    if (r.anomaly_mask_path && !std::filesystem::exists(manifest.resolve(*r.anomaly_mask_path))) {
      throw io_error(where + "missing file " + *r.anomaly_mask_path);
    }
    manifest.records.push_back(std::move(r));
  }
  return manifest;
}

GroundTruth load_ground_truth(const DatasetManifest& manifest, const ManifestRecord& record) {
  GroundTruth gt;
  gt.object_mask = load_mask(manifest.resolve(record.object_mask_path));
  const std::pair<int, int> dims{gt.object_mask.width, gt.object_mask.height};
  gt.anomaly_mask = record.anomaly_mask_path
                        ? load_mask(manifest.resolve(*record.anomaly_mask_path), dims)
                        : ObjectMask(dims.first, dims.second);
  gt.image_label = gt.anomaly_mask.empty() ? ClassLabel::Benign : ClassLabel::Anomaly;
  if (gt.image_label != record.image_label) {
    throw data_error(record.image_id + ": image_label disagrees with its anomaly mask");
  }
  return gt;
}

std::vector<ClassLabel> label_regions(std::span<const RegionCrop> crops, const GroundTruth& gt,
                                      double tau) {
  if (!(tau > 0 && tau <= 1)) throw usage_error("overlap threshold must lie in (0,1]");
  const bool image_anomalous = !gt.anomaly_mask.empty();
  std::vector<ClassLabel> labels;
  labels.reserve(crops.size());
  for (const auto& crop : crops) {
    const Box& b = crop.source_box;
    if (b.x0 < 0 || b.y0 < 0 || b.x1 > gt.anomaly_mask.width || b.y1 > gt.anomaly_mask.height ||
        b.degenerate()) {
      throw data_error("region geometry lies outside the ground truth");
    }
    if (crop.level == Level::Object) {
      labels.push_back(image_anomalous ? ClassLabel::Anomaly : ClassLabel::Benign);
      continue;
    }
    std::size_t size = 0, overlap = 0;
    for (int y = 0; y < b.height(); ++y) {
      for (int x = 0; x < b.width(); ++x) {
        if (!crop.support.at(x, y)) continue;
        ++size;
        if (gt.anomaly_mask.at(b.x0 + x, b.y0 + y)) ++overlap;
      }
    }
    const bool anomalous = size > 0 && static_cast<double>(overlap) >= tau * static_cast<double>(size);
    labels.push_back(anomalous ? ClassLabel::Anomaly : ClassLabel::Benign);
  }
  return labels;
}

}  // namespace subseg
